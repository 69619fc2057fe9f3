#include "eas/exam_session.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>

namespace eas {

void validate(const ExamDefinition& exam, const QuestionBank& bank) {
    if (exam.exam_id.empty()) throw Error(ErrorCode::InvalidExam, "exam id is empty");
    if (exam.question_count < 1)
        throw Error(ErrorCode::InvalidExam, "question count must be positive");
    if (exam.time_limit_minutes < 1)
        throw Error(ErrorCode::InvalidExam, "time limit must be at least one minute");
    if (!(exam.passing_rate_percent >= 0.0 && exam.passing_rate_percent <= 100.0))
        throw Error(ErrorCode::InvalidExam, "passing rate must lie in [0, 100]");
    if (exam.subject != bank.subject)
        throw Error(ErrorCode::InvalidExam, "exam subject does not match the bank");
    if (static_cast<std::size_t>(exam.question_count) > bank.size())
        throw Error(ErrorCode::BankTooSmall,
                    "exam needs " + std::to_string(exam.question_count) +
                        " questions but the bank holds " + std::to_string(bank.size()));
}

void validate(const Examinee& e) {
    if (e.examinee_id.empty()) throw Error(ErrorCode::BadRequest, "examinee id is empty");
    if (e.year_level.empty() || e.section.empty())
        throw Error(ErrorCode::BadRequest,
                    "examinee " + e.examinee_id + " needs a year level and a section");
}

bool is_valid_exam_number(std::string_view s) {
    return s.size() == 8 &&
           std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_valid_exam_password(std::string_view s) {
    return s.size() == 8 && std::all_of(s.begin(), s.end(), [](char c) {
               return kPasswordAlphabet.find(c) != std::string_view::npos;
           });
}

bool CredentialIndex::has_number(std::string_view exam_number) const {
    return numbers_.find(exam_number) != numbers_.end();
}

bool CredentialIndex::has_pair(std::string_view exam_id, std::string_view examinee_id) const {
    return pairs_.count({std::string(exam_id), std::string(examinee_id)}) > 0;
}

void CredentialIndex::add(const Credential& c) {
    numbers_.insert(c.exam_number);
    pairs_.insert({c.exam_id, c.examinee_id});
}

IssuedCredential issue_credential(const ExamDefinition& exam, const Examinee& examinee,
                                  std::span<const std::uint8_t> rng_seed,
                                  const CredentialIndex& index, const crypto::KdfParams& kdf) {
    validate(examinee);
    if (index.has_pair(exam.exam_id, examinee.examinee_id))
        throw Error(ErrorCode::AlreadyIssued, "examinee " + examinee.examinee_id +
                                                  " already holds a credential for exam " +
                                                  exam.exam_id);
    crypto::SeededStream stream(rng_seed);

    std::string number;
    do {
        number.clear();
        for (int i = 0; i < 8; ++i) number.push_back(static_cast<char>('0' + stream.uniform(10)));
    } while (index.has_number(number));

    std::string password;
    for (int i = 0; i < 8; ++i)
        password.push_back(kPasswordAlphabet[stream.uniform(
            static_cast<std::uint32_t>(kPasswordAlphabet.size()))]);

    IssuedCredential out;
    out.credential.exam_number = number;
    out.credential.password_hash = crypto::hash_password(password, kdf);
    out.credential.examinee_id = examinee.examinee_id;
    out.credential.exam_id = exam.exam_id;
    out.password = std::move(password);
    return out;
}

namespace {

std::uint64_t be64(const crypto::Sha256Digest& d) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | d[i];
    return v;
}

// std::uniform_int_distribution is implementation-defined; this is not.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t v = gen();
        if (v < limit) return v % n;
    }
}

template <class T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = bounded(gen, i);
        std::swap(items[i - 1], items[j]);
    }
}

std::uint64_t choice_seed(std::uint64_t session_seed, std::string_view question_id) {
    std::vector<std::uint8_t> buf;
    for (int i = 7; i >= 0; --i) buf.push_back(static_cast<std::uint8_t>(session_seed >> (8 * i)));
    buf.push_back(0x1F);
    buf.insert(buf.end(), question_id.begin(), question_id.end());
    return be64(crypto::sha256(buf));
}

}  // namespace

std::uint64_t selection_seed(std::string_view exam_id, std::string_view examinee_id,
                             const ExamSalt& salt) {
    std::vector<std::uint8_t> buf(exam_id.begin(), exam_id.end());
    buf.push_back(0x1F);
    buf.insert(buf.end(), examinee_id.begin(), examinee_id.end());
    buf.push_back(0x1F);
    buf.insert(buf.end(), salt.begin(), salt.end());
    return be64(crypto::sha256(buf));
}

Selection select_questions(const QuestionBank& bank, const ExamDefinition& exam,
                           std::string_view examinee_id) {
    if (bank.version != exam.bank_version)
        throw Error(ErrorCode::VersionMismatch,
                    "exam " + exam.exam_id + " was defined against bank version " +
                        std::to_string(exam.bank_version) + ", bank is at " +
                        std::to_string(bank.version));
    if (exam.question_count < 1 || static_cast<std::size_t>(exam.question_count) > bank.size())
        throw Error(ErrorCode::BankTooSmall, "bank cannot supply the requested question count");

    const std::uint64_t seed = selection_seed(exam.exam_id, examinee_id, exam.salt);
    std::mt19937_64 gen(seed);
    std::vector<std::size_t> idx(bank.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    fisher_yates(idx, gen);

    Selection sel;
    for (int i = 0; i < exam.question_count; ++i) {
        const Question& q = bank.questions[idx[i]];
        sel.question_order.push_back(q.id);
        std::vector<std::string> labels;
        for (const auto& c : q.choices) labels.push_back(c.label);
        if (q.kind == QuestionKind::MultipleChoice) {
            std::mt19937_64 choice_gen(choice_seed(seed, q.id));
            fisher_yates(labels, choice_gen);
        }
        sel.choice_orders.emplace(q.id, std::move(labels));
    }
    return sel;
}

std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::Created: return "Created";
        case SessionState::Active: return "Active";
        case SessionState::Finalized: return "Finalized";
    }
    return "Created";
}

std::optional<SessionState> parse_session_state(std::string_view s) {
    for (auto st : {SessionState::Created, SessionState::Active, SessionState::Finalized})
        if (to_string(st) == s) return st;
    return std::nullopt;
}

ExamSession create_session(const Credential& credential, Selection selection) {
    ExamSession s;
    s.session_id = "S" + credential.exam_number;
    s.exam_number = credential.exam_number;
    s.exam_id = credential.exam_id;
    s.examinee_id = credential.examinee_id;
    s.question_order = std::move(selection.question_order);
    s.choice_orders = std::move(selection.choice_orders);
    return s;
}

void activate_session(ExamSession& session, const ExamDefinition& exam, Timestamp now) {
    if (session.state == SessionState::Active)
        throw Error(ErrorCode::AlreadyStarted, "session " + session.session_id + " already started");
    if (session.state == SessionState::Finalized)
        throw Error(ErrorCode::AlreadyFinalized,
                    "session " + session.session_id + " is already finalized");
    session.state = SessionState::Active;
    session.started_at = now;
    session.deadline = now + std::chrono::minutes(exam.time_limit_minutes);
}

void start_session(ExamSession& session, const Credential& credential,
                   std::string_view presented_password, const ExamDefinition& exam, Timestamp now) {
    if (!crypto::verify_password(presented_password, credential.password_hash))
        throw Error(ErrorCode::BadPassword, "wrong exam password");
    activate_session(session, exam, now);
}

std::vector<PresentedQuestion> present_questions(const ExamSession& session,
                                                 const QuestionBank& bank) {
    std::vector<PresentedQuestion> out;
    out.reserve(session.question_order.size());
    for (const auto& id : session.question_order) {
        const Question* q = bank.find(id);
        if (!q) throw Error(ErrorCode::UnknownQuestion, "question " + id + " missing from bank");
        PresentedQuestion p{q->id, q->kind, q->stem, {}};
        auto order = session.choice_orders.find(id);
        for (const auto& label : order->second) {
            auto c = std::find_if(q->choices.begin(), q->choices.end(),
                                  [&](const Choice& ch) { return ch.label == label; });
            p.choices.push_back(*c);
        }
        out.push_back(std::move(p));
    }
    return out;
}

AnswerKey answer_key(const QuestionBank& bank) {
    AnswerKey key;
    for (const auto& q : bank.questions) key.emplace(q.id, q.correct_label);
    return key;
}

std::int64_t percent_hundredths(int raw, int total) {
    if (total <= 0) return 0;
    // round(10000 * raw / total) half-up == floor((20000 * raw + total) / (2 * total))
    return (20000LL * raw + total) / (2LL * total);
}

TestResult score_session(const ExamSession& session, const ExamDefinition& exam,
                         const AnswerKey& key) {
    TestResult r;
    r.examinee_id = session.examinee_id;
    r.exam_id = session.exam_id;
    r.total_items = static_cast<int>(session.question_order.size());
    for (const auto& id : session.question_order) {
        auto answer = session.answers.find(id);
        auto correct = key.find(id);
        const int outcome = answer != session.answers.end() && correct != key.end() &&
                                    answer->second == correct->second
                                ? 1
                                : 0;
        r.item_outcomes[id] = outcome;
        r.raw_score += outcome;
    }
    r.percent = static_cast<double>(percent_hundredths(r.raw_score, r.total_items)) / 100.0;
    r.passed = r.percent >= exam.passing_rate_percent;
    return r;
}

DeadlineExceededError::DeadlineExceededError(TestResult result)
    : Error(ErrorCode::DeadlineExceeded, "submission arrived after the deadline; session finalized"),
      result_(std::move(result)) {}

namespace {

void require_active(const ExamSession& session) {
    if (session.state != SessionState::Active)
        throw Error(ErrorCode::SessionNotActive,
                    "session " + session.session_id + " is " + std::string(to_string(session.state)));
}

}  // namespace

void submit_answer(ExamSession& session, const ExamDefinition& exam, const AnswerKey& key,
                   std::string_view question_id, std::string_view label, Timestamp now) {
    require_active(session);
    if (now > *session.deadline + kSubmissionGrace) {
        auto result = finalize_session(session, exam, key, now);
        throw DeadlineExceededError(std::move(result));
    }
    auto order = session.choice_orders.find(std::string(question_id));
    if (order == session.choice_orders.end())
        throw Error(ErrorCode::UnknownQuestion,
                    "question " + std::string(question_id) + " is not part of this session");
    if (std::find(order->second.begin(), order->second.end(), label) == order->second.end())
        throw Error(ErrorCode::InvalidLabel, "label '" + std::string(label) +
                                                 "' is not a choice of question " +
                                                 std::string(question_id));
    session.answers[std::string(question_id)] = std::string(label);
}

TestResult finalize_session(ExamSession& session, const ExamDefinition& exam,
                            const AnswerKey& key, Timestamp now) {
    require_active(session);
    session.state = SessionState::Finalized;
    session.finalized_at = now;
    return score_session(session, exam, key);
}

}  // namespace eas
