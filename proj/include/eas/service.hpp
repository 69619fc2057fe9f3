#pragma once

#include "eas/event_log.hpp"
#include "eas/json_io.hpp"
#include "eas/psychometrics.hpp"
#include "eas/state.hpp"
#include "eas/time_util.hpp"

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace eas::api {

enum class Endpoint {
    Login,
    CreateUser,
    UpdateUser,
    DeleteUser,
    ResetPassword,
    CreateQuestion,
    ImportBank,
    CreateExam,
    IssueCredentials,
    ExamLogin,
    GetQuestions,
    PostAnswer,
    Finalize,
    ListResults,
    MyResult,
    ItemAnalysis,
    Charts,
    UpdateProfile,
};

struct EndpointInfo {
    Endpoint endpoint;
    std::string_view method;
    std::string_view path;  // pattern as documented, {x} for parameters
};

inline constexpr std::array<EndpointInfo, 18> kEndpoints = {{
    {Endpoint::Login, "POST", "/api/login"},
    {Endpoint::CreateUser, "POST", "/api/users"},
    {Endpoint::UpdateUser, "PUT", "/api/users/{u}"},
    {Endpoint::DeleteUser, "DELETE", "/api/users/{u}"},
    {Endpoint::ResetPassword, "POST", "/api/users/{u}/reset-password"},
    {Endpoint::CreateQuestion, "POST", "/api/questions"},
    {Endpoint::ImportBank, "POST", "/api/banks/import"},
    {Endpoint::CreateExam, "POST", "/api/exams"},
    {Endpoint::IssueCredentials, "POST", "/api/exams/{id}/credentials"},
    {Endpoint::ExamLogin, "POST", "/api/exam-login"},
    {Endpoint::GetQuestions, "GET", "/api/session/questions"},
    {Endpoint::PostAnswer, "POST", "/api/session/answers"},
    {Endpoint::Finalize, "POST", "/api/session/finalize"},
    {Endpoint::ListResults, "GET", "/api/results"},
    {Endpoint::MyResult, "GET", "/api/results/me"},
    {Endpoint::ItemAnalysis, "GET", "/api/item-analysis/{exam}"},
    {Endpoint::Charts, "GET", "/api/charts/{dimension}"},
    {Endpoint::UpdateProfile, "PUT", "/api/profile"},
}};

/// Who is calling: an account role, an examinee holding an exam-session
/// token, or nobody.
enum class Caller { Anonymous, Administrator, Faculty, Student, ExamSession };

inline constexpr std::array<Caller, 5> kAllCallers = {Caller::Anonymous, Caller::Administrator,
                                                      Caller::Faculty, Caller::Student,
                                                      Caller::ExamSession};

std::string_view to_string(Caller c);

/// The authorization matrix.
bool is_allowed(Endpoint endpoint, Caller caller);

struct ServiceOptions {
    std::filesystem::path data_dir;
    Clock clock = system_clock();
    crypto::KdfParams kdf = crypto::KdfParams::interactive();
    std::chrono::hours token_ttl{12};
    int lockout_threshold = 5;
    Millis lockout_duration{60'000};
    bool sync = true;
    /// Source of seeds, salts and tokens.
    std::function<std::vector<std::uint8_t>(std::size_t)> entropy = &crypto::random_bytes;
};

struct ResultFilter {
    std::string exam_id;
    std::string year_level;
    std::string section;
    std::string subject;
    std::string examinee_id;
};

/// The examination service. Every method takes the caller's bearer token
/// (empty for anonymous calls), enforces the authorization matrix and
/// returns a JSON response body, or throws Error.
///
/// Each state change is one event appended to the log and then folded into
/// the in-memory state under the same exclusive lock, so log order equals
/// application order. Operations on one exam session are additionally
/// serialized by a per-session mutex.
class Service {
public:
    explicit Service(ServiceOptions options);

    /// Creates an administrator when the deployment has no users yet.
    /// Returns false (and does nothing) otherwise.
    bool bootstrap_admin(std::string_view username, std::string_view password);

    Json login(const Json& body);

    Json create_user(std::string_view token, const Json& body);
    Json update_user(std::string_view token, std::string_view username, const Json& body);
    Json delete_user(std::string_view token, std::string_view username);
    Json reset_password(std::string_view token, std::string_view username);

    Json create_question(std::string_view token, const Json& body);
    Json import_bank(std::string_view token, std::string_view csv_text);
    Json create_exam(std::string_view token, const Json& body);
    Json issue_credentials(std::string_view token, std::string_view exam_id, const Json& body);

    Json exam_login(const Json& body);
    Json get_questions(std::string_view token);
    Json post_answer(std::string_view token, const Json& body);
    Json finalize(std::string_view token);

    Json list_results(std::string_view token, const ResultFilter& filter);
    Json my_result(std::string_view token);
    Json item_analysis(std::string_view token, std::string_view exam_id, const ResultFilter& filter);
    /// The response matrix behind item_analysis, rows in canonical order.
    psychometrics::ResponseMatrix response_matrix(std::string_view token, std::string_view exam_id,
                                                  const ResultFilter& filter);
    Json charts(std::string_view token, std::string_view dimension, const ResultFilter& filter);
    Json update_profile(std::string_view token, const Json& body);

    /// Finalizes sessions whose deadline plus grace has passed. Returns how
    /// many were finalized.
    int sweep_expired();

    /// An Administrator token for in-process operators (the CLI), who
    /// already own the data directory.
    std::string operator_token();

    /// Writes a snapshot of the current state.
    void snapshot();

    store::State state() const;
    const store::EventLog& log() const { return log_; }
    Timestamp now() const { return options_.clock(); }

private:
    struct TokenRecord {
        Caller caller = Caller::Anonymous;
        std::string username;     // account tokens
        std::string examinee_id;  // students and exam sessions
        std::string exam_number;  // exam sessions
        Timestamp expires_at{};
    };

    struct Lockout {
        int failures = 0;
        Timestamp locked_until{};
    };

    TokenRecord authorize(std::string_view token, Endpoint endpoint) const;
    std::string issue_token(TokenRecord record);
    void revoke_tokens_for(const std::string& username);

    /// Caller must hold state_mutex_ exclusively.
    std::uint64_t commit(store::EventKind kind, const Json& payload);

    std::mutex& session_mutex(const std::string& exam_number);
    TestResult finalize_locked(const std::string& exam_number, std::string_view reason);

    std::string random_token();
    std::string temporary_password();

    std::vector<TestResult> finalized_results(const ResultFilter& filter) const;
    psychometrics::ResponseMatrix matrix_locked(std::string_view exam_id, const ResultFilter& filter) const;

    ServiceOptions options_;
    store::EventLog log_;

    mutable std::shared_mutex state_mutex_;
    store::State state_;

    mutable std::mutex token_mutex_;
    std::map<std::string, TokenRecord, std::less<>> tokens_;

    std::mutex lockout_mutex_;
    std::map<std::string, Lockout> lockouts_;

    std::mutex session_registry_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> session_mutexes_;

    crypto::PasswordHash dummy_hash_;  // equalizes login timing for unknown users
};

/// HTTP status for an error code.
int http_status(ErrorCode code);

}  // namespace eas::api
