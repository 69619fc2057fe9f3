#pragma once

#include "eas/crypto.hpp"
#include "eas/exam_session.hpp"
#include "eas/json_io.hpp"
#include "eas/question_bank.hpp"
#include "eas/time_util.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eas {

enum class Role { Administrator, Faculty, Student };
std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view s);

struct UserAccount {
    std::string username;
    crypto::PasswordHash password_hash;
    Role role = Role::Student;
    std::string examinee_id;  // students only
    bool active = true;

    bool operator==(const UserAccount&) const = default;
};

/// Usernames are unique case-insensitively; this is the map key.
std::string username_key(std::string_view username);

struct RatingRow {
    std::string respondent_id;
    std::string group;
    std::string criterion;
    int score = 0;

    bool operator==(const RatingRow&) const = default;
};

void to_json(Json& j, const UserAccount& u);
void from_json(const Json& j, UserAccount& u);
void to_json(Json& j, const RatingRow& r);
void from_json(const Json& j, RatingRow& r);

}  // namespace eas

namespace eas::store {

enum class EventKind {
    UserUpserted,
    UserDeleted,
    PasswordReset,
    BankImported,
    QuestionAdded,
    ExamCreated,
    CredentialIssued,
    SessionStarted,
    AnswerSubmitted,
    SessionFinalized,
    RatingsIngested,
};

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct Event {
    std::uint64_t seq = 0;
    Timestamp timestamp{};
    EventKind kind = EventKind::UserUpserted;
    Json payload;
};

Json event_to_json(const Event& e);
Event event_from_json(const Json& j);

/// Everything mutable in a deployment, as a fold over the event log.
struct State {
    std::uint64_t last_seq = 0;
    std::map<std::string, UserAccount> users;   // username_key -> account
    std::map<std::string, QuestionBank> banks;  // subject -> bank
    std::map<std::string, ExamDefinition> exams;
    std::map<std::string, Examinee> examinees;
    std::map<std::string, Credential> credentials;  // exam_number -> credential
    std::map<std::string, ExamSession> sessions;    // exam_number -> session
    std::map<std::string, TestResult> results;      // exam_number -> result
    std::vector<RatingRow> ratings;

    CredentialIndex credential_index() const;
};

Json state_to_json(const State& s);
State state_from_json(const Json& j);

/// Canonical bytes of the state; identical logs give identical bytes.
std::string canonical_state(const State& s);

/// Throws Error{SchemaViolation} when the payload does not decode for its kind.
void validate_payload(EventKind kind, const Json& payload);

/// Applies one event. Events must arrive with seq == last_seq + 1
/// (Error{CorruptEvent} otherwise).
void apply(State& state, const Event& event);

// Payload builders, so every writer produces the schema apply() reads.
namespace payload {

Json user_upserted(const UserAccount& user, const std::optional<Examinee>& profile);
Json user_deleted(std::string_view username);
Json password_reset(std::string_view username, const crypto::PasswordHash& hash);
Json bank_imported(const QuestionBank& bank);
Json question_added(const Question& q);
Json exam_created(const ExamDefinition& exam);

struct IssuedEntry {
    Credential credential;
    Examinee examinee;
    Selection selection;
};
Json credentials_issued(std::string_view exam_id, const std::vector<IssuedEntry>& entries);
Json session_started(std::string_view exam_number, Timestamp started_at, Timestamp deadline);
Json answer_submitted(std::string_view exam_number, std::string_view question_id,
                      std::string_view label, Timestamp at);
Json session_finalized(std::string_view exam_number, Timestamp finalized_at,
                       const TestResult& result, std::string_view reason);
Json ratings_ingested(const std::vector<RatingRow>& rows);

}  // namespace payload

}  // namespace eas::store
