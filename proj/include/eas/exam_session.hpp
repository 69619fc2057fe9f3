#pragma once

#include "eas/crypto.hpp"
#include "eas/error.hpp"
#include "eas/question_bank.hpp"
#include "eas/time_util.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eas {

using ExamSalt = std::array<std::uint8_t, 16>;

struct ExamDefinition {
    std::string exam_id;
    std::string subject;
    std::uint64_t bank_version = 0;
    int question_count = 0;
    int time_limit_minutes = 0;
    double passing_rate_percent = 0.0;
    ExamSalt salt{};

    bool operator==(const ExamDefinition&) const = default;
};

/// Throws Error{InvalidExam} when the definition is malformed on its own,
/// Error{BankTooSmall} when the bank cannot supply question_count items.
void validate(const ExamDefinition& exam, const QuestionBank& bank);

struct Examinee {
    std::string examinee_id;
    std::string name;
    std::string year_level;
    std::string section;

    bool operator==(const Examinee&) const = default;
};

void validate(const Examinee& e);

/// Exam access for one examinee. The plaintext password exists only in the
/// IssuedCredential handed back by issue_credential.
struct Credential {
    std::string exam_number;
    crypto::PasswordHash password_hash;
    std::string examinee_id;
    std::string exam_id;

    bool operator==(const Credential&) const = default;
};

struct IssuedCredential {
    Credential credential;
    std::string password;
};

inline constexpr std::string_view kPasswordAlphabet =
    "ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnpqrstuvwxyz23456789";

bool is_valid_exam_number(std::string_view s);
bool is_valid_exam_password(std::string_view s);

/// Which exam numbers and (exam, examinee) pairs are already taken in a
/// deployment.
class CredentialIndex {
public:
    bool has_number(std::string_view exam_number) const;
    bool has_pair(std::string_view exam_id, std::string_view examinee_id) const;
    void add(const Credential& c);
    std::size_t size() const { return numbers_.size(); }

private:
    std::set<std::string, std::less<>> numbers_;
    std::set<std::pair<std::string, std::string>> pairs_;
};

/// Draws exam number and password from a stream expanded from `rng_seed`.
/// Errors: AlreadyIssued.
IssuedCredential issue_credential(const ExamDefinition& exam, const Examinee& examinee,
                                  std::span<const std::uint8_t> rng_seed,
                                  const CredentialIndex& index, const crypto::KdfParams& kdf);

struct Selection {
    std::vector<std::string> question_order;
    /// Presentation order of choice labels per selected question.
    std::map<std::string, std::vector<std::string>> choice_orders;

    bool operator==(const Selection&) const = default;
};

/// First 8 bytes, big-endian, of SHA-256(exam_id 0x1F examinee_id 0x1F salt).
std::uint64_t selection_seed(std::string_view exam_id, std::string_view examinee_id,
                             const ExamSalt& salt);

/// Errors: VersionMismatch, BankTooSmall.
Selection select_questions(const QuestionBank& bank, const ExamDefinition& exam,
                           std::string_view examinee_id);

enum class SessionState { Created, Active, Finalized };
std::string_view to_string(SessionState s);
std::optional<SessionState> parse_session_state(std::string_view s);

inline constexpr Millis kSubmissionGrace{2000};

struct ExamSession {
    std::string session_id;
    std::string exam_number;
    std::string exam_id;
    std::string examinee_id;
    std::vector<std::string> question_order;
    std::map<std::string, std::vector<std::string>> choice_orders;
    std::map<std::string, std::string> answers;
    SessionState state = SessionState::Created;
    std::optional<Timestamp> started_at;
    std::optional<Timestamp> deadline;
    std::optional<Timestamp> finalized_at;

    bool operator==(const ExamSession&) const = default;
};

ExamSession create_session(const Credential& credential, Selection selection);

/// Errors: BadPassword (session untouched), AlreadyStarted, AlreadyFinalized.
void start_session(ExamSession& session, const Credential& credential,
                   std::string_view presented_password, const ExamDefinition& exam, Timestamp now);

/// Same transition without a password check, for callers that have already
/// authenticated the credential (the service verifies outside its locks).
void activate_session(ExamSession& session, const ExamDefinition& exam, Timestamp now);

struct PresentedQuestion {
    std::string id;
    QuestionKind kind = QuestionKind::MultipleChoice;
    std::string stem;
    std::vector<Choice> choices;  // in the session's presentation order
};

/// The examinee-facing view of a session's questions; carries no answer key.
std::vector<PresentedQuestion> present_questions(const ExamSession& session,
                                                 const QuestionBank& bank);

using AnswerKey = std::map<std::string, std::string, std::less<>>;
AnswerKey answer_key(const QuestionBank& bank);

struct TestResult {
    std::string examinee_id;
    std::string exam_id;
    int raw_score = 0;
    int total_items = 0;
    double percent = 0.0;  ///< 100 * raw / total, rounded half-up to 2 decimals
    bool passed = false;
    std::map<std::string, int> item_outcomes;

    bool operator==(const TestResult&) const = default;
};

/// Percent in hundredths (7400 == 74.00%), rounded half-up with integer math.
std::int64_t percent_hundredths(int raw, int total);

/// Dichotomous scoring of the session's current answers. Unanswered items
/// score 0.
TestResult score_session(const ExamSession& session, const ExamDefinition& exam,
                         const AnswerKey& key);

class DeadlineExceededError : public Error {
public:
    explicit DeadlineExceededError(TestResult result);
    const TestResult& result() const noexcept { return result_; }

private:
    TestResult result_;
};

/// Accepts answers up to deadline + grace. Later submissions finalize the
/// session and throw DeadlineExceededError carrying the result.
/// Errors: SessionNotActive, UnknownQuestion, InvalidLabel, DeadlineExceeded.
void submit_answer(ExamSession& session, const ExamDefinition& exam, const AnswerKey& key,
                   std::string_view question_id, std::string_view label, Timestamp now);

/// Errors: SessionNotActive.
TestResult finalize_session(ExamSession& session, const ExamDefinition& exam,
                            const AnswerKey& key, Timestamp now);

}  // namespace eas
