#include "eas/service.hpp"

#include "eas/error.hpp"
#include "eas/psychometrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace eas::api {

std::string_view to_string(Caller c) {
    switch (c) {
        case Caller::Anonymous: return "Anonymous";
        case Caller::Administrator: return "Administrator";
        case Caller::Faculty: return "Faculty";
        case Caller::Student: return "Student";
        case Caller::ExamSession: return "ExamSession";
    }
    return "Anonymous";
}

bool is_allowed(Endpoint endpoint, Caller caller) {
    switch (endpoint) {
        case Endpoint::Login:
        case Endpoint::ExamLogin:
            return true;
        case Endpoint::CreateUser:
        case Endpoint::UpdateUser:
        case Endpoint::DeleteUser:
        case Endpoint::ResetPassword:
            return caller == Caller::Administrator;
        case Endpoint::CreateQuestion:
        case Endpoint::ImportBank:
        case Endpoint::CreateExam:
        case Endpoint::IssueCredentials:
        case Endpoint::ListResults:
        case Endpoint::ItemAnalysis:
        case Endpoint::Charts:
            return caller == Caller::Administrator || caller == Caller::Faculty;
        case Endpoint::GetQuestions:
        case Endpoint::PostAnswer:
        case Endpoint::Finalize:
            return caller == Caller::ExamSession;
        case Endpoint::MyResult:
            return caller == Caller::Student || caller == Caller::ExamSession;
        case Endpoint::UpdateProfile:
            return caller == Caller::Student;
    }
    return false;
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::BadRequest:
        case ErrorCode::InvalidChoiceSet:
        case ErrorCode::EmptyStem:
        case ErrorCode::MalformedHeader:
        case ErrorCode::InvalidExam:
        case ErrorCode::UnknownQuestion:
        case ErrorCode::InvalidLabel:
        case ErrorCode::BankTooSmall:
        case ErrorCode::VersionMismatch:
        case ErrorCode::SchemaViolation:
        case ErrorCode::InvalidMatrix:
        case ErrorCode::TooFewSamples:
        case ErrorCode::InvalidSummary:
        case ErrorCode::TooFewGroups:
        case ErrorCode::OutOfScale:
        case ErrorCode::WrongArity:
            return 400;
        case ErrorCode::Unauthorized:
        case ErrorCode::BadCredentials:
        case ErrorCode::BadPassword:
            return 401;
        case ErrorCode::Forbidden:
        case ErrorCode::AccountInactive:
            return 403;
        case ErrorCode::UnknownUser:
        case ErrorCode::UnknownExam:
        case ErrorCode::ExamNotFound:
        case ErrorCode::UnknownSubject:
        case ErrorCode::UnknownExaminee:
        case ErrorCode::UnknownItem:
        case ErrorCode::NotFound:
            return 404;
        case ErrorCode::DuplicateUsername:
        case ErrorCode::DuplicateId:
        case ErrorCode::AlreadyIssued:
        case ErrorCode::AlreadyStarted:
        case ErrorCode::AlreadyFinalized:
        case ErrorCode::SessionNotActive:
        case ErrorCode::DeadlineExceeded:
            return 409;
        case ErrorCode::AnalysisUnavailable:
        case ErrorCode::TooFewExaminees:
        case ErrorCode::EmptyMatrix:
        case ErrorCode::DegenerateWithin:
        case ErrorCode::MixedExams:
        case ErrorCode::PartitionMismatch:
            return 422;
        case ErrorCode::LockedOut:
            return 429;
        case ErrorCode::StorageFull:
            return 507;
        case ErrorCode::CorruptEvent:
        case ErrorCode::IoError:
            return 500;
    }
    return 500;
}

namespace {

using store::EventKind;
namespace payload = store::payload;

std::string required_string(const Json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body.at(key).is_string() ||
        body.at(key).get<std::string>().empty())
        throw Error(ErrorCode::BadRequest, std::string("field '") + key + "' is required");
    return body.at(key).get<std::string>();
}

std::string optional_string(const Json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || body.at(key).is_null()) return {};
    if (!body.at(key).is_string())
        throw Error(ErrorCode::BadRequest, std::string("field '") + key + "' must be a string");
    return body.at(key).get<std::string>();
}

template <class T>
T required_number(const Json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body.at(key).is_number())
        throw Error(ErrorCode::BadRequest, std::string("field '") + key + "' must be a number");
    return body.at(key).get<T>();
}

Role required_role(const Json& body) {
    auto role = parse_role(required_string(body, "role"));
    if (!role) throw Error(ErrorCode::BadRequest, "role must be Administrator, Faculty or Student");
    return *role;
}

Examinee examinee_from(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::BadRequest, "examinee must be an object");
    Examinee e{required_string(j, "examinee_id"), optional_string(j, "name"),
               optional_string(j, "year_level"), optional_string(j, "section")};
    return e;
}

Json result_row(const TestResult& r, const Examinee& e, const std::string& subject) {
    return Json{{"examinee_id", r.examinee_id}, {"name", e.name},
                {"year_level", e.year_level},   {"section", e.section},
                {"subject", subject},           {"exam_id", r.exam_id},
                {"raw_score", r.raw_score},     {"total_items", r.total_items},
                {"percent", r.percent},         {"passed", r.passed},
                {"item_outcomes", r.item_outcomes}};
}

Caller caller_for(Role role) {
    switch (role) {
        case Role::Administrator: return Caller::Administrator;
        case Role::Faculty: return Caller::Faculty;
        case Role::Student: return Caller::Student;
    }
    return Caller::Anonymous;
}

}  // namespace

Service::Service(ServiceOptions options)
    : options_(std::move(options)),
      log_(store::LogOptions{options_.data_dir, 0, options_.sync}),
      state_(log_.load_state()),
      dummy_hash_(crypto::hash_password("unknown-user-placeholder", options_.kdf)) {}

std::string Service::random_token() { return crypto::to_hex(options_.entropy(32)); }

std::string Service::temporary_password() {
    const auto bytes = options_.entropy(32);
    crypto::SeededStream stream(bytes);
    std::string out;
    for (int i = 0; i < 12; ++i)
        out.push_back(kPasswordAlphabet[stream.uniform(static_cast<std::uint32_t>(kPasswordAlphabet.size()))]);
    return out;
}

std::uint64_t Service::commit(EventKind kind, const Json& body) {
    const auto now = options_.clock();
    const auto seq = log_.append(kind, body, now);
    store::apply(state_, store::Event{seq, now, kind, body});
    return seq;
}

std::string Service::issue_token(TokenRecord record) {
    record.expires_at = options_.clock() + options_.token_ttl;
    auto token = random_token();
    std::lock_guard lock(token_mutex_);
    tokens_.emplace(token, std::move(record));
    return token;
}

void Service::revoke_tokens_for(const std::string& username) {
    const auto key = username_key(username);
    std::lock_guard lock(token_mutex_);
    std::erase_if(tokens_, [&](const auto& entry) {
        return !entry.second.username.empty() && username_key(entry.second.username) == key;
    });
}

Service::TokenRecord Service::authorize(std::string_view token, Endpoint endpoint) const {
    TokenRecord record;
    if (!token.empty()) {
        std::lock_guard lock(token_mutex_);
        auto it = tokens_.find(token);
        if (it != tokens_.end() && it->second.expires_at > options_.clock()) record = it->second;
        else if (!is_allowed(endpoint, Caller::Anonymous))
            throw Error(ErrorCode::Unauthorized, "invalid or expired token");
    }
    if (!is_allowed(endpoint, record.caller)) {
        if (record.caller == Caller::Anonymous)
            throw Error(ErrorCode::Unauthorized, "authentication required");
        throw Error(ErrorCode::Forbidden, std::string(to_string(record.caller)) +
                                              " may not call this endpoint");
    }
    return record;
}

std::mutex& Service::session_mutex(const std::string& exam_number) {
    std::lock_guard lock(session_registry_mutex_);
    auto& slot = session_mutexes_[exam_number];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

std::string Service::operator_token() {
    return issue_token({Caller::Administrator, "operator", {}, {}, {}});
}

store::State Service::state() const {
    std::shared_lock lock(state_mutex_);
    return state_;
}

void Service::snapshot() {
    std::shared_lock lock(state_mutex_);
    log_.snapshot(state_);
}

bool Service::bootstrap_admin(std::string_view username, std::string_view password) {
    if (username.empty() || password.empty())
        throw Error(ErrorCode::BadRequest, "bootstrap needs a username and password");
    auto hash = crypto::hash_password(password, options_.kdf);
    std::unique_lock lock(state_mutex_);
    if (!state_.users.empty()) return false;
    UserAccount admin{std::string(username), std::move(hash), Role::Administrator, {}, true};
    commit(EventKind::UserUpserted, payload::user_upserted(admin, std::nullopt));
    return true;
}

// ---------------------------------------------------------------- accounts

Json Service::login(const Json& body) {
    const auto username = required_string(body, "username");
    const auto password = required_string(body, "password");
    std::optional<UserAccount> user;
    {
        std::shared_lock lock(state_mutex_);
        auto it = state_.users.find(username_key(username));
        if (it != state_.users.end()) user = it->second;
    }
    const bool ok = crypto::verify_password(password, user ? user->password_hash : dummy_hash_);
    if (!user || !ok) throw Error(ErrorCode::BadCredentials, "unknown user or wrong password");
    if (!user->active) throw Error(ErrorCode::AccountInactive, "account is inactive");

    TokenRecord record{caller_for(user->role), user->username, user->examinee_id, {}, {}};
    auto token = issue_token(record);
    return Json{{"token", token},
                {"role", to_string(user->role)},
                {"username", user->username},
                {"expires_at", format_rfc3339(options_.clock() + options_.token_ttl)}};
}

Json Service::create_user(std::string_view token, const Json& body) {
    authorize(token, Endpoint::CreateUser);
    const auto username = required_string(body, "username");
    const Role role = required_role(body);
    std::optional<Examinee> profile;
    if (body.contains("examinee")) profile = examinee_from(body.at("examinee"));
    if (role == Role::Student) {
        if (!profile) throw Error(ErrorCode::BadRequest, "student accounts need an examinee profile");
        validate(*profile);
    }
    std::string password = optional_string(body, "password");
    const bool generated = password.empty();
    if (generated) password = temporary_password();
    UserAccount user{username, crypto::hash_password(password, options_.kdf), role,
                     profile ? profile->examinee_id : std::string{},
                     body.value("active", true)};

    std::unique_lock lock(state_mutex_);
    if (state_.users.count(username_key(username)))
        throw Error(ErrorCode::DuplicateUsername, "username '" + username + "' is taken");
    commit(EventKind::UserUpserted, payload::user_upserted(user, profile));
    Json out{{"username", username}, {"role", to_string(role)}, {"active", user.active}};
    if (generated) out["temporary_password"] = password;
    return out;
}

Json Service::update_user(std::string_view token, std::string_view username, const Json& body) {
    authorize(token, Endpoint::UpdateUser);
    if (!body.is_object()) throw Error(ErrorCode::BadRequest, "body must be an object");
    std::optional<crypto::PasswordHash> new_hash;
    if (auto pw = optional_string(body, "password"); !pw.empty())
        new_hash = crypto::hash_password(pw, options_.kdf);

    std::unique_lock lock(state_mutex_);
    auto it = state_.users.find(username_key(username));
    if (it == state_.users.end())
        throw Error(ErrorCode::UnknownUser, "no user '" + std::string(username) + "'");
    UserAccount user = it->second;
    if (body.contains("role")) user.role = required_role(body);
    if (body.contains("active")) {
        if (!body.at("active").is_boolean()) throw Error(ErrorCode::BadRequest, "active must be boolean");
        user.active = body.at("active").get<bool>();
    }
    if (new_hash) user.password_hash = *new_hash;
    std::optional<Examinee> profile;
    if (body.contains("examinee")) {
        profile = examinee_from(body.at("examinee"));
        validate(*profile);
        user.examinee_id = profile->examinee_id;
    }
    if (user.role == Role::Student && user.examinee_id.empty())
        throw Error(ErrorCode::BadRequest, "student accounts need an examinee profile");
    commit(EventKind::UserUpserted, payload::user_upserted(user, profile));
    lock.unlock();
    if (!user.active || new_hash || body.contains("role")) revoke_tokens_for(user.username);
    return Json{{"username", user.username}, {"role", to_string(user.role)}, {"active", user.active}};
}

Json Service::delete_user(std::string_view token, std::string_view username) {
    authorize(token, Endpoint::DeleteUser);
    std::string name;
    {
        std::unique_lock lock(state_mutex_);
        auto it = state_.users.find(username_key(username));
        if (it == state_.users.end())
            throw Error(ErrorCode::UnknownUser, "no user '" + std::string(username) + "'");
        name = it->second.username;
        commit(EventKind::UserDeleted, payload::user_deleted(name));
    }
    revoke_tokens_for(name);
    return Json{{"username", name}, {"deleted", true}};
}

Json Service::reset_password(std::string_view token, std::string_view username) {
    authorize(token, Endpoint::ResetPassword);
    const auto password = temporary_password();
    auto hash = crypto::hash_password(password, options_.kdf);
    std::string name;
    {
        std::unique_lock lock(state_mutex_);
        auto it = state_.users.find(username_key(username));
        if (it == state_.users.end())
            throw Error(ErrorCode::UnknownUser, "no user '" + std::string(username) + "'");
        name = it->second.username;
        commit(EventKind::PasswordReset, payload::password_reset(name, hash));
    }
    revoke_tokens_for(name);
    return Json{{"username", name}, {"temporary_password", password}};
}

Json Service::update_profile(std::string_view token, const Json& body) {
    const auto who = authorize(token, Endpoint::UpdateProfile);
    if (!body.is_object()) throw Error(ErrorCode::BadRequest, "body must be an object");
    std::unique_lock lock(state_mutex_);
    auto it = state_.users.find(username_key(who.username));
    if (it == state_.users.end()) throw Error(ErrorCode::UnknownUser, "account no longer exists");
    const UserAccount user = it->second;
    Examinee profile{user.examinee_id, {}, {}, {}};
    if (auto e = state_.examinees.find(user.examinee_id); e != state_.examinees.end()) profile = e->second;
    if (body.contains("name")) profile.name = optional_string(body, "name");
    if (body.contains("year_level")) profile.year_level = optional_string(body, "year_level");
    if (body.contains("section")) profile.section = optional_string(body, "section");
    validate(profile);
    commit(EventKind::UserUpserted, payload::user_upserted(user, profile));
    return Json(profile);
}

// ------------------------------------------------------------- authoring

Json Service::create_question(std::string_view token, const Json& body) {
    const auto who = authorize(token, Endpoint::CreateQuestion);
    Question q;
    try {
        q.id = required_string(body, "id");
        q.subject = required_string(body, "subject");
        auto kind = parse_question_kind(required_string(body, "kind"));
        if (!kind) throw Error(ErrorCode::BadRequest, "kind must be MCQ or TF");
        q.kind = *kind;
        q.stem = optional_string(body, "stem");
        if (body.contains("choices"))
            q.choices = body.at("choices").get<std::vector<Choice>>();
        else if (q.kind == QuestionKind::TrueFalse)
            q.choices = true_false_choices();
        q.correct_label = required_string(body, "correct_label");
        auto bloom = parse_bloom(required_string(body, "bloom"));
        if (!bloom) throw Error(ErrorCode::BadRequest, "unknown bloom category");
        q.bloom = *bloom;
    } catch (const Json::exception& ex) {
        throw Error(ErrorCode::BadRequest, std::string("malformed question: ") + ex.what());
    }
    q.author = who.username;
    q.created_at = options_.clock();

    std::unique_lock lock(state_mutex_);
    QuestionBank bank;
    if (auto it = state_.banks.find(q.subject); it != state_.banks.end()) bank = it->second;
    bank = add_question(std::move(bank), q);  // validates; throws without side effects
    commit(EventKind::QuestionAdded, payload::question_added(q));
    return Json{{"question_id", q.id}, {"subject", q.subject}, {"bank_version", bank.version}};
}

Json Service::import_bank(std::string_view token, std::string_view csv_text) {
    const auto who = authorize(token, Endpoint::ImportBank);
    ImportOptions opts{who.username, options_.clock(), {}};
    auto parsed = import_csv(csv_text, opts);  // header errors surface here

    std::unique_lock lock(state_mutex_);
    std::size_t before = 0;
    if (!parsed.bank.questions.empty()) {
        if (auto it = state_.banks.find(parsed.bank.subject); it != state_.banks.end()) {
            // Second pass onto the stored bank so clashes carry line numbers.
            opts.base = it->second;
            before = it->second.questions.size();
            parsed = import_csv(csv_text, opts);
        }
    }
    const auto& merged = parsed.bank;
    const std::size_t imported = merged.questions.size() - before;
    if (imported > 0) commit(EventKind::BankImported, payload::bank_imported(merged));
    Json issue_list = Json::array();
    for (const auto& i : parsed.issues) issue_list.push_back(Json{{"line", i.line}, {"reason", i.reason}});
    return Json{{"subject", merged.subject},
                {"imported", imported},
                {"bank_version", merged.version},
                {"bank_size", merged.questions.size()},
                {"issues", issue_list}};
}

Json Service::create_exam(std::string_view token, const Json& body) {
    authorize(token, Endpoint::CreateExam);
    ExamDefinition exam;
    exam.exam_id = optional_string(body, "exam_id");
    exam.subject = required_string(body, "subject");
    exam.question_count = required_number<int>(body, "question_count");
    exam.time_limit_minutes = required_number<int>(body, "time_limit_minutes");
    exam.passing_rate_percent = required_number<double>(body, "passing_rate_percent");
    const auto salt = options_.entropy(exam.salt.size());
    std::copy(salt.begin(), salt.end(), exam.salt.begin());

    std::unique_lock lock(state_mutex_);
    auto bank = state_.banks.find(exam.subject);
    if (bank == state_.banks.end())
        throw Error(ErrorCode::UnknownSubject, "no question bank for subject '" + exam.subject + "'");
    if (exam.exam_id.empty()) {
        std::size_t n = state_.exams.size() + 1;
        do {
            char buf[16];
            std::snprintf(buf, sizeof buf, "EX%06zu", n++);
            exam.exam_id = buf;
        } while (state_.exams.count(exam.exam_id));
    } else if (state_.exams.count(exam.exam_id)) {
        throw Error(ErrorCode::DuplicateId, "exam '" + exam.exam_id + "' already exists");
    }
    exam.bank_version = bank->second.version;
    validate(exam, bank->second);
    commit(EventKind::ExamCreated, payload::exam_created(exam));
    return Json{{"exam_id", exam.exam_id},
                {"subject", exam.subject},
                {"bank_version", exam.bank_version},
                {"question_count", exam.question_count},
                {"time_limit_minutes", exam.time_limit_minutes},
                {"passing_rate_percent", exam.passing_rate_percent}};
}

Json Service::issue_credentials(std::string_view token, std::string_view exam_id, const Json& body) {
    authorize(token, Endpoint::IssueCredentials);
    if (!body.is_object() || !body.contains("examinees") || !body.at("examinees").is_array())
        throw Error(ErrorCode::BadRequest, "body needs an 'examinees' array");

    for (int attempt = 0;; ++attempt) {
        ExamDefinition exam;
        QuestionBank bank;
        CredentialIndex index;
        std::vector<Examinee> roster;
        {
            std::shared_lock lock(state_mutex_);
            auto e = state_.exams.find(std::string(exam_id));
            if (e == state_.exams.end())
                throw Error(ErrorCode::UnknownExam, "no exam '" + std::string(exam_id) + "'");
            exam = e->second;
            bank = state_.banks.at(exam.subject);
            index = state_.credential_index();
            std::set<std::string> seen;
            for (const auto& j : body.at("examinees")) {
                Examinee x = examinee_from(j);
                if (x.year_level.empty() && x.section.empty())
                    if (auto known = state_.examinees.find(x.examinee_id); known != state_.examinees.end())
                        x = known->second;
                validate(x);
                if (!seen.insert(x.examinee_id).second)
                    throw Error(ErrorCode::BadRequest, "examinee " + x.examinee_id + " listed twice");
                roster.push_back(std::move(x));
            }
        }

        // Password hashing is the slow part; keep it outside the state lock.
        std::vector<payload::IssuedEntry> entries;
        Json issued = Json::array();
        for (const auto& x : roster) {
            auto cred = issue_credential(exam, x, options_.entropy(32), index, options_.kdf);
            index.add(cred.credential);
            auto selection = select_questions(bank, exam, x.examinee_id);
            issued.push_back(Json{{"examinee_id", x.examinee_id},
                                  {"name", x.name},
                                  {"exam_number", cred.credential.exam_number},
                                  {"password", cred.password}});
            entries.push_back({std::move(cred.credential), x, std::move(selection)});
        }

        std::unique_lock lock(state_mutex_);
        if (state_.banks.at(exam.subject).version != exam.bank_version)
            throw Error(ErrorCode::VersionMismatch, "bank changed since exam creation");
        const auto current = state_.credential_index();
        bool number_clash = false;
        for (const auto& entry : entries) {
            if (current.has_pair(exam.exam_id, entry.examinee.examinee_id))
                throw Error(ErrorCode::AlreadyIssued, "examinee " + entry.examinee.examinee_id +
                                                          " already holds a credential");
            number_clash |= current.has_number(entry.credential.exam_number);
        }
        if (number_clash) {
            if (attempt < 5) continue;
            throw Error(ErrorCode::IoError, "could not allocate unique exam numbers");
        }
        commit(EventKind::CredentialIssued, payload::credentials_issued(exam.exam_id, entries));
        return Json{{"exam_id", exam.exam_id}, {"credentials", issued}};
    }
}

// ------------------------------------------------------------- exam flow

Json Service::exam_login(const Json& body) {
    authorize({}, Endpoint::ExamLogin);
    const auto number = required_string(body, "exam_number");
    const auto password = required_string(body, "password");
    const auto now = options_.clock();
    {
        std::lock_guard lock(lockout_mutex_);
        auto& l = lockouts_[number];
        if (l.locked_until > now)
            throw Error(ErrorCode::LockedOut, "too many failed attempts; try again later");
    }
    std::optional<Credential> cred;
    {
        std::shared_lock lock(state_mutex_);
        auto it = state_.credentials.find(number);
        if (it != state_.credentials.end()) cred = it->second;
    }
    const bool ok = crypto::verify_password(password, cred ? cred->password_hash : dummy_hash_);
    {
        std::lock_guard lock(lockout_mutex_);
        auto& l = lockouts_[number];
        if (!cred || !ok) {
            if (++l.failures >= options_.lockout_threshold) {
                l.failures = 0;
                l.locked_until = now + options_.lockout_duration;
            }
            throw Error(ErrorCode::BadCredentials, "unknown exam number or wrong password");
        }
        l = {};
    }

    std::lock_guard session_lock(session_mutex(number));
    ExamSession session;
    ExamDefinition exam;
    Examinee examinee;
    {
        std::shared_lock lock(state_mutex_);
        session = state_.sessions.at(number);
        exam = state_.exams.at(session.exam_id);
        if (auto e = state_.examinees.find(session.examinee_id); e != state_.examinees.end())
            examinee = e->second;
    }
    activate_session(session, exam, options_.clock());
    {
        std::unique_lock lock(state_mutex_);
        commit(EventKind::SessionStarted,
               payload::session_started(number, *session.started_at, *session.deadline));
    }
    auto token = issue_token({Caller::ExamSession, {}, session.examinee_id, number, {}});
    return Json{{"token", token},
                {"session_id", session.session_id},
                {"exam_id", exam.exam_id},
                {"examinee", examinee},
                {"started_at", format_rfc3339(*session.started_at)},
                {"deadline", format_rfc3339(*session.deadline)},
                {"time_limit_minutes", exam.time_limit_minutes},
                {"question_count", session.question_order.size()}};
}

Json Service::get_questions(std::string_view token) {
    const auto who = authorize(token, Endpoint::GetQuestions);
    std::shared_lock lock(state_mutex_);
    const auto& session = state_.sessions.at(who.exam_number);
    const auto& exam = state_.exams.at(session.exam_id);
    const auto& bank = state_.banks.at(exam.subject);
    return Json{{"session_id", session.session_id},
                {"exam_id", session.exam_id},
                {"state", to_string(session.state)},
                {"deadline", timestamp_json(session.deadline)},
                {"server_time", format_rfc3339(options_.clock())},
                {"questions", present_questions(session, bank)},
                {"answers", session.answers}};
}

Json Service::post_answer(std::string_view token, const Json& body) {
    const auto who = authorize(token, Endpoint::PostAnswer);
    const auto question_id = required_string(body, "question_id");
    const auto label = required_string(body, "label");

    std::lock_guard session_lock(session_mutex(who.exam_number));
    ExamSession session;
    ExamDefinition exam;
    AnswerKey key;
    {
        std::shared_lock lock(state_mutex_);
        session = state_.sessions.at(who.exam_number);
        exam = state_.exams.at(session.exam_id);
        key = answer_key(state_.banks.at(exam.subject));
    }
    const auto now = options_.clock();
    try {
        submit_answer(session, exam, key, question_id, label, now);
    } catch (const DeadlineExceededError& late) {
        std::unique_lock lock(state_mutex_);
        commit(EventKind::SessionFinalized,
               payload::session_finalized(who.exam_number, *session.finalized_at, late.result(),
                                          "deadline"));
        throw;
    }
    std::unique_lock lock(state_mutex_);
    commit(EventKind::AnswerSubmitted, payload::answer_submitted(who.exam_number, question_id, label, now));
    return Json{{"question_id", question_id},
                {"label", label},
                {"accepted", true},
                {"server_time", format_rfc3339(now)},
                {"deadline", timestamp_json(session.deadline)}};
}

TestResult Service::finalize_locked(const std::string& exam_number, std::string_view reason) {
    ExamSession session;
    ExamDefinition exam;
    AnswerKey key;
    {
        std::shared_lock lock(state_mutex_);
        session = state_.sessions.at(exam_number);
        exam = state_.exams.at(session.exam_id);
        key = answer_key(state_.banks.at(exam.subject));
    }
    auto result = finalize_session(session, exam, key, options_.clock());
    std::unique_lock lock(state_mutex_);
    commit(EventKind::SessionFinalized,
           payload::session_finalized(exam_number, *session.finalized_at, result, reason));
    return result;
}

Json Service::finalize(std::string_view token) {
    const auto who = authorize(token, Endpoint::Finalize);
    std::lock_guard session_lock(session_mutex(who.exam_number));
    return Json(finalize_locked(who.exam_number, "submitted"));
}

int Service::sweep_expired() {
    const auto now = options_.clock();
    std::vector<std::string> expired;
    {
        std::shared_lock lock(state_mutex_);
        for (const auto& [number, s] : state_.sessions)
            if (s.state == SessionState::Active && now > *s.deadline + kSubmissionGrace)
                expired.push_back(number);
    }
    int finalized = 0;
    for (const auto& number : expired) {
        std::lock_guard session_lock(session_mutex(number));
        {
            std::shared_lock lock(state_mutex_);
            if (state_.sessions.at(number).state != SessionState::Active) continue;
        }
        finalize_locked(number, "deadline");
        ++finalized;
    }
    return finalized;
}

// -------------------------------------------------------------- reporting

std::vector<TestResult> Service::finalized_results(const ResultFilter& filter) const {
    std::vector<std::pair<Examinee, TestResult>> rows;
    for (const auto& [number, r] : state_.results) {
        if (!filter.exam_id.empty() && r.exam_id != filter.exam_id) continue;
        if (!filter.examinee_id.empty() && r.examinee_id != filter.examinee_id) continue;
        const auto& exam = state_.exams.at(r.exam_id);
        if (!filter.subject.empty() && exam.subject != filter.subject) continue;
        Examinee e{r.examinee_id, {}, {}, {}};
        if (auto it = state_.examinees.find(r.examinee_id); it != state_.examinees.end()) e = it->second;
        if (!filter.year_level.empty() && e.year_level != filter.year_level) continue;
        if (!filter.section.empty() && e.section != filter.section) continue;
        rows.emplace_back(e, r);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (psychometrics::canonical_less(a.first, b.first)) return true;
        if (psychometrics::canonical_less(b.first, a.first)) return false;
        return a.second.exam_id < b.second.exam_id;
    });
    std::vector<TestResult> out;
    for (auto& [e, r] : rows) out.push_back(std::move(r));
    return out;
}

Json Service::list_results(std::string_view token, const ResultFilter& filter) {
    authorize(token, Endpoint::ListResults);
    sweep_expired();
    std::shared_lock lock(state_mutex_);
    Json rows = Json::array();
    for (const auto& r : finalized_results(filter)) {
        const auto& e = state_.examinees.at(r.examinee_id);
        rows.push_back(result_row(r, e, state_.exams.at(r.exam_id).subject));
    }
    return Json{{"results", rows}};
}

Json Service::my_result(std::string_view token) {
    const auto who = authorize(token, Endpoint::MyResult);
    sweep_expired();
    std::shared_lock lock(state_mutex_);
    Json rows = Json::array();
    if (who.caller == Caller::ExamSession) {
        if (auto it = state_.results.find(who.exam_number); it != state_.results.end()) {
            const auto& e = state_.examinees.at(it->second.examinee_id);
            rows.push_back(result_row(it->second, e, state_.exams.at(it->second.exam_id).subject));
        }
    } else {
        ResultFilter mine;
        mine.examinee_id = who.examinee_id;
        if (mine.examinee_id.empty()) return Json{{"results", rows}};
        for (const auto& r : finalized_results(mine))
            rows.push_back(result_row(r, state_.examinees.at(r.examinee_id),
                                      state_.exams.at(r.exam_id).subject));
    }
    return Json{{"results", rows}};
}

psychometrics::ResponseMatrix Service::matrix_locked(std::string_view exam_id,
                                                    const ResultFilter& filter) const {
    auto exam = state_.exams.find(std::string(exam_id));
    if (exam == state_.exams.end())
        throw Error(ErrorCode::UnknownExam, "no exam '" + std::string(exam_id) + "'");
    ResultFilter f = filter;
    f.exam_id = exam->first;
    const auto results = finalized_results(f);
    if (results.size() < 2)
        throw Error(ErrorCode::AnalysisUnavailable,
                    "analysis unavailable: needs at least 2 finalized sessions, have " +
                        std::to_string(results.size()));

    const auto& bank = state_.banks.at(exam->second.subject);
    std::set<std::string> used;
    for (const auto& [number, s] : state_.sessions)
        if (s.exam_id == exam->first) used.insert(s.question_order.begin(), s.question_order.end());
    std::vector<psychometrics::MatrixItem> items;
    for (const auto& q : bank.questions)
        if (used.count(q.id)) items.push_back({q.id, q.bloom});
    std::vector<Examinee> roster;
    for (const auto& r : results) roster.push_back(state_.examinees.at(r.examinee_id));
    return psychometrics::tabulate(results, roster, items, exam->second.subject);
}

psychometrics::ResponseMatrix Service::response_matrix(std::string_view token, std::string_view exam_id,
                                                       const ResultFilter& filter) {
    authorize(token, Endpoint::ItemAnalysis);
    sweep_expired();
    std::shared_lock lock(state_mutex_);
    return matrix_locked(exam_id, filter);
}

Json Service::item_analysis(std::string_view token, std::string_view exam_id,
                            const ResultFilter& filter) {
    const auto matrix = response_matrix(token, exam_id, filter);
    Json out = psychometrics::analyze(matrix);
    out["n_examinees"] = matrix.rows();
    return out;
}

Json Service::charts(std::string_view token, std::string_view dimension, const ResultFilter& filter) {
    authorize(token, Endpoint::Charts);
    sweep_expired();
    std::shared_lock lock(state_mutex_);
    const auto results = finalized_results(filter);
    Json labels = Json::array();
    Json series = Json::array();

    if (dimension == "item") {
        if (filter.exam_id.empty()) throw Error(ErrorCode::BadRequest, "item charts need ?exam=");
        auto exam = state_.exams.find(filter.exam_id);
        if (exam == state_.exams.end()) throw Error(ErrorCode::UnknownExam, "no exam '" + filter.exam_id + "'");
        std::map<std::string, std::pair<int, int>> counts;  // id -> (correct, answered-or-not)
        for (const auto& r : results)
            for (const auto& [id, outcome] : r.item_outcomes) {
                counts[id].first += outcome;
                counts[id].second += 1;
            }
        Json correct = Json::array(), incorrect = Json::array(), p = Json::array();
        for (const auto& q : state_.banks.at(exam->second.subject).questions) {
            auto it = counts.find(q.id);
            if (it == counts.end()) continue;
            labels.push_back(q.id);
            correct.push_back(it->second.first);
            incorrect.push_back(it->second.second - it->second.first);
            p.push_back(static_cast<double>(it->second.first) / it->second.second);
        }
        series = Json::array({Json{{"name", "correct"}, {"values", correct}},
                              Json{{"name", "incorrect"}, {"values", incorrect}},
                              Json{{"name", "difficulty"}, {"values", p}}});
    } else if (dimension == "year_level" || dimension == "section" || dimension == "subject") {
        struct Acc {
            double percent = 0.0;
            double raw = 0.0;
            int n = 0;
        };
        std::map<std::string, Acc> groups;
        for (const auto& r : results) {
            const auto& e = state_.examinees.at(r.examinee_id);
            const std::string key = dimension == "year_level" ? e.year_level
                                    : dimension == "section"  ? e.section
                                                              : state_.exams.at(r.exam_id).subject;
            auto& a = groups[key];
            a.percent += r.percent;
            a.raw += r.raw_score;
            ++a.n;
        }
        Json mean_percent = Json::array(), mean_raw = Json::array(), count = Json::array();
        for (const auto& [key, a] : groups) {
            labels.push_back(key);
            mean_percent.push_back(a.percent / a.n);
            mean_raw.push_back(a.raw / a.n);
            count.push_back(a.n);
        }
        series = Json::array({Json{{"name", "mean_percent"}, {"values", mean_percent}},
                              Json{{"name", "mean_raw_score"}, {"values", mean_raw}},
                              Json{{"name", "count"}, {"values", count}}});
    } else {
        throw Error(ErrorCode::BadRequest,
                    "dimension must be item, year_level, section or subject");
    }
    return Json{{"dimension", dimension}, {"labels", labels}, {"series", series}};
}

}  // namespace eas::api
