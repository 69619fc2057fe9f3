#include "eas/state.hpp"

#include "eas/error.hpp"

#include <algorithm>
#include <cctype>
#include <variant>

namespace eas {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::Administrator: return "Administrator";
        case Role::Faculty: return "Faculty";
        case Role::Student: return "Student";
    }
    return "Student";
}

std::optional<Role> parse_role(std::string_view s) {
    for (auto r : {Role::Administrator, Role::Faculty, Role::Student})
        if (to_string(r) == s) return r;
    return std::nullopt;
}

std::string username_key(std::string_view username) {
    std::string key(username);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return key;
}

void to_json(Json& j, const UserAccount& u) {
    j = Json{{"username", u.username},
             {"password_hash", u.password_hash},
             {"role", to_string(u.role)},
             {"examinee_id", u.examinee_id},
             {"active", u.active}};
}

void from_json(const Json& j, UserAccount& u) {
    j.at("username").get_to(u.username);
    j.at("password_hash").get_to(u.password_hash);
    auto role = parse_role(j.at("role").get<std::string>());
    if (!role) throw Error(ErrorCode::SchemaViolation, "unknown role");
    u.role = *role;
    j.at("examinee_id").get_to(u.examinee_id);
    j.at("active").get_to(u.active);
}

void to_json(Json& j, const RatingRow& r) {
    j = Json{{"respondent_id", r.respondent_id},
             {"group", r.group},
             {"criterion", r.criterion},
             {"score", r.score}};
}

void from_json(const Json& j, RatingRow& r) {
    j.at("respondent_id").get_to(r.respondent_id);
    j.at("group").get_to(r.group);
    j.at("criterion").get_to(r.criterion);
    j.at("score").get_to(r.score);
}

}  // namespace eas

namespace eas::store {

namespace {

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::UserUpserted, "UserUpserted"},
    {EventKind::UserDeleted, "UserDeleted"},
    {EventKind::PasswordReset, "PasswordReset"},
    {EventKind::BankImported, "BankImported"},
    {EventKind::QuestionAdded, "QuestionAdded"},
    {EventKind::ExamCreated, "ExamCreated"},
    {EventKind::CredentialIssued, "CredentialIssued"},
    {EventKind::SessionStarted, "SessionStarted"},
    {EventKind::AnswerSubmitted, "AnswerSubmitted"},
    {EventKind::SessionFinalized, "SessionFinalized"},
    {EventKind::RatingsIngested, "RatingsIngested"},
};

}  // namespace

std::string_view to_string(EventKind k) {
    for (const auto& [kind, name] : kKindNames)
        if (kind == k) return name;
    return "Unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
    for (const auto& [kind, name] : kKindNames)
        if (name == s) return kind;
    return std::nullopt;
}

Json event_to_json(const Event& e) {
    return Json{{"seq", e.seq},
                {"ts", format_rfc3339(e.timestamp)},
                {"kind", to_string(e.kind)},
                {"payload", e.payload}};
}

Event event_from_json(const Json& j) {
    try {
        Event e;
        j.at("seq").get_to(e.seq);
        e.timestamp = parse_rfc3339(j.at("ts").get<std::string>());
        auto kind = parse_event_kind(j.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::SchemaViolation, "unknown event kind");
        e.kind = *kind;
        e.payload = j.at("payload");
        return e;
    } catch (const Json::exception& ex) {
        throw Error(ErrorCode::SchemaViolation, std::string("malformed event: ") + ex.what());
    }
}

CredentialIndex State::credential_index() const {
    CredentialIndex index;
    for (const auto& [number, c] : credentials) index.add(c);
    return index;
}

Json state_to_json(const State& s) {
    Json users = Json::object();
    for (const auto& [k, u] : s.users) users[k] = u;
    Json banks = Json::object();
    for (const auto& [k, b] : s.banks) banks[k] = b;
    Json exams = Json::object();
    for (const auto& [k, e] : s.exams) exams[k] = e;
    Json examinees = Json::object();
    for (const auto& [k, e] : s.examinees) examinees[k] = e;
    Json credentials = Json::object();
    for (const auto& [k, c] : s.credentials) credentials[k] = c;
    Json sessions = Json::object();
    for (const auto& [k, ses] : s.sessions) sessions[k] = ses;
    Json results = Json::object();
    for (const auto& [k, r] : s.results) results[k] = r;
    return Json{{"last_seq", s.last_seq}, {"users", users},         {"banks", banks},
                {"exams", exams},         {"examinees", examinees}, {"credentials", credentials},
                {"sessions", sessions},   {"results", results},     {"ratings", s.ratings}};
}

State state_from_json(const Json& j) {
    try {
        State s;
        j.at("last_seq").get_to(s.last_seq);
        for (const auto& [k, v] : j.at("users").items()) s.users[k] = v.get<UserAccount>();
        for (const auto& [k, v] : j.at("banks").items()) s.banks[k] = v.get<QuestionBank>();
        for (const auto& [k, v] : j.at("exams").items()) s.exams[k] = v.get<ExamDefinition>();
        for (const auto& [k, v] : j.at("examinees").items()) s.examinees[k] = v.get<Examinee>();
        for (const auto& [k, v] : j.at("credentials").items()) s.credentials[k] = v.get<Credential>();
        for (const auto& [k, v] : j.at("sessions").items()) s.sessions[k] = v.get<ExamSession>();
        for (const auto& [k, v] : j.at("results").items()) s.results[k] = v.get<TestResult>();
        j.at("ratings").get_to(s.ratings);
        return s;
    } catch (const Json::exception& ex) {
        throw Error(ErrorCode::SchemaViolation, std::string("malformed state: ") + ex.what());
    }
}

std::string canonical_state(const State& s) { return canonical_dump(state_to_json(s)); }

namespace payload {

Json user_upserted(const UserAccount& user, const std::optional<Examinee>& profile) {
    return Json{{"user", user}, {"profile", profile ? Json(*profile) : Json(nullptr)}};
}

Json user_deleted(std::string_view username) { return Json{{"username", username}}; }

Json password_reset(std::string_view username, const crypto::PasswordHash& hash) {
    return Json{{"username", username}, {"password_hash", hash}};
}

Json bank_imported(const QuestionBank& bank) { return Json{{"bank", bank}}; }

Json question_added(const Question& q) { return Json{{"question", q}}; }

Json exam_created(const ExamDefinition& exam) { return Json{{"exam", exam}}; }

Json credentials_issued(std::string_view exam_id, const std::vector<IssuedEntry>& entries) {
    Json issued = Json::array();
    for (const auto& e : entries)
        issued.push_back(Json{{"credential", e.credential},
                              {"examinee", e.examinee},
                              {"question_order", e.selection.question_order},
                              {"choice_orders", e.selection.choice_orders}});
    return Json{{"exam_id", exam_id}, {"issued", issued}};
}

Json session_started(std::string_view exam_number, Timestamp started_at, Timestamp deadline) {
    return Json{{"exam_number", exam_number},
                {"started_at", format_rfc3339(started_at)},
                {"deadline", format_rfc3339(deadline)}};
}

Json answer_submitted(std::string_view exam_number, std::string_view question_id,
                      std::string_view label, Timestamp at) {
    return Json{{"exam_number", exam_number},
                {"question_id", question_id},
                {"label", label},
                {"at", format_rfc3339(at)}};
}

Json session_finalized(std::string_view exam_number, Timestamp finalized_at,
                       const TestResult& result, std::string_view reason) {
    return Json{{"exam_number", exam_number},
                {"finalized_at", format_rfc3339(finalized_at)},
                {"result", result},
                {"reason", reason}};
}

Json ratings_ingested(const std::vector<RatingRow>& rows) { return Json{{"rows", rows}}; }

}  // namespace payload

namespace {

struct UserUpsertedP {
    UserAccount user;
    std::optional<Examinee> profile;
};
struct UserDeletedP {
    std::string username;
};
struct PasswordResetP {
    std::string username;
    crypto::PasswordHash hash;
};
struct BankImportedP {
    QuestionBank bank;
};
struct QuestionAddedP {
    Question question;
};
struct ExamCreatedP {
    ExamDefinition exam;
};
struct CredentialIssuedP {
    std::string exam_id;
    std::vector<payload::IssuedEntry> entries;
};
struct SessionStartedP {
    std::string exam_number;
    Timestamp started_at;
    Timestamp deadline;
};
struct AnswerSubmittedP {
    std::string exam_number;
    std::string question_id;
    std::string label;
    Timestamp at;
};
struct SessionFinalizedP {
    std::string exam_number;
    Timestamp finalized_at;
    TestResult result;
};
struct RatingsIngestedP {
    std::vector<RatingRow> rows;
};

using Decoded = std::variant<UserUpsertedP, UserDeletedP, PasswordResetP, BankImportedP,
                             QuestionAddedP, ExamCreatedP, CredentialIssuedP, SessionStartedP,
                             AnswerSubmittedP, SessionFinalizedP, RatingsIngestedP>;

Timestamp ts(const Json& j) { return parse_rfc3339(j.get<std::string>()); }

Decoded decode_unchecked(EventKind kind, const Json& p) {
    switch (kind) {
        case EventKind::UserUpserted: {
            UserUpsertedP d{p.at("user").get<UserAccount>(), std::nullopt};
            if (!p.at("profile").is_null()) d.profile = p.at("profile").get<Examinee>();
            return d;
        }
        case EventKind::UserDeleted:
            return UserDeletedP{p.at("username").get<std::string>()};
        case EventKind::PasswordReset:
            return PasswordResetP{p.at("username").get<std::string>(),
                                  p.at("password_hash").get<crypto::PasswordHash>()};
        case EventKind::BankImported:
            return BankImportedP{p.at("bank").get<QuestionBank>()};
        case EventKind::QuestionAdded:
            return QuestionAddedP{p.at("question").get<Question>()};
        case EventKind::ExamCreated:
            return ExamCreatedP{p.at("exam").get<ExamDefinition>()};
        case EventKind::CredentialIssued: {
            CredentialIssuedP d{p.at("exam_id").get<std::string>(), {}};
            for (const auto& e : p.at("issued"))
                d.entries.push_back({e.at("credential").get<Credential>(),
                                     e.at("examinee").get<Examinee>(),
                                     {e.at("question_order").get<std::vector<std::string>>(),
                                      e.at("choice_orders")
                                          .get<std::map<std::string, std::vector<std::string>>>()}});
            return d;
        }
        case EventKind::SessionStarted:
            return SessionStartedP{p.at("exam_number").get<std::string>(), ts(p.at("started_at")),
                                   ts(p.at("deadline"))};
        case EventKind::AnswerSubmitted:
            return AnswerSubmittedP{p.at("exam_number").get<std::string>(),
                                    p.at("question_id").get<std::string>(),
                                    p.at("label").get<std::string>(), ts(p.at("at"))};
        case EventKind::SessionFinalized:
            return SessionFinalizedP{p.at("exam_number").get<std::string>(),
                                     ts(p.at("finalized_at")), p.at("result").get<TestResult>()};
        case EventKind::RatingsIngested:
            return RatingsIngestedP{p.at("rows").get<std::vector<RatingRow>>()};
    }
    throw Error(ErrorCode::SchemaViolation, "unknown event kind");
}

Decoded decode(EventKind kind, const Json& p) {
    try {
        return decode_unchecked(kind, p);
    } catch (const Json::exception& ex) {
        throw Error(ErrorCode::SchemaViolation, std::string(to_string(kind)) +
                                                    " payload invalid: " + ex.what());
    } catch (const Error& ex) {
        if (ex.code() == ErrorCode::SchemaViolation) throw;
        throw Error(ErrorCode::SchemaViolation,
                    std::string(to_string(kind)) + " payload invalid: " + ex.what());
    }
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <class Map>
auto& require(Map& map, const std::string& key, std::uint64_t seq, const char* what) {
    auto it = map.find(key);
    if (it == map.end())
        throw Error(ErrorCode::CorruptEvent, "event " + std::to_string(seq) + " references unknown " +
                                                 what + " " + key);
    return it->second;
}

}  // namespace

void validate_payload(EventKind kind, const Json& payload) { (void)decode(kind, payload); }

void apply(State& state, const Event& event) {
    if (event.seq != state.last_seq + 1)
        throw Error(ErrorCode::CorruptEvent, "event " + std::to_string(event.seq) +
                                                 " out of order after " +
                                                 std::to_string(state.last_seq));
    const auto seq = event.seq;
    auto decoded = decode(event.kind, event.payload);
    std::visit(
        overloaded{
            [&](UserUpsertedP& d) {
                if (d.profile) state.examinees[d.profile->examinee_id] = *d.profile;
                state.users[username_key(d.user.username)] = std::move(d.user);
            },
            [&](UserDeletedP& d) { state.users.erase(username_key(d.username)); },
            [&](PasswordResetP& d) {
                require(state.users, username_key(d.username), seq, "user").password_hash = d.hash;
            },
            [&](BankImportedP& d) { state.banks[d.bank.subject] = std::move(d.bank); },
            [&](QuestionAddedP& d) {
                auto& bank = state.banks[d.question.subject];
                try {
                    bank = add_question(std::move(bank), std::move(d.question));
                } catch (const Error& e) {
                    throw Error(ErrorCode::CorruptEvent,
                                "event " + std::to_string(seq) + ": " + e.what());
                }
            },
            [&](ExamCreatedP& d) { state.exams[d.exam.exam_id] = std::move(d.exam); },
            [&](CredentialIssuedP& d) {
                for (auto& e : d.entries) {
                    state.examinees[e.examinee.examinee_id] = e.examinee;
                    state.sessions[e.credential.exam_number] =
                        create_session(e.credential, std::move(e.selection));
                    state.credentials[e.credential.exam_number] = std::move(e.credential);
                }
            },
            [&](SessionStartedP& d) {
                auto& s = require(state.sessions, d.exam_number, seq, "session");
                s.state = SessionState::Active;
                s.started_at = d.started_at;
                s.deadline = d.deadline;
            },
            [&](AnswerSubmittedP& d) {
                auto& s = require(state.sessions, d.exam_number, seq, "session");
                s.answers[d.question_id] = d.label;
            },
            [&](SessionFinalizedP& d) {
                auto& s = require(state.sessions, d.exam_number, seq, "session");
                s.state = SessionState::Finalized;
                s.finalized_at = d.finalized_at;
                state.results[d.exam_number] = std::move(d.result);
            },
            [&](RatingsIngestedP& d) {
                state.ratings.insert(state.ratings.end(), d.rows.begin(), d.rows.end());
            },
        },
        decoded);
    state.last_seq = seq;
}

}  // namespace eas::store
