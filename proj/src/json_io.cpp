#include "eas/json_io.hpp"

#include "eas/error.hpp"

namespace eas {

std::string canonical_dump(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::strict); }

Json timestamp_json(const std::optional<Timestamp>& t) {
    return t ? Json(format_rfc3339(*t)) : Json(nullptr);
}

std::optional<Timestamp> timestamp_from_json(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return parse_rfc3339(j.get<std::string>());
}

namespace {

template <class E, class Parse>
E parse_enum(const Json& j, Parse parse, const char* what) {
    auto v = parse(j.get<std::string>());
    if (!v) throw Error(ErrorCode::SchemaViolation, std::string("unknown ") + what + " '" +
                                                         j.get<std::string>() + "'");
    return *v;
}

}  // namespace

void to_json(Json& j, const Choice& c) { j = Json{{"label", c.label}, {"text", c.text}}; }

void from_json(const Json& j, Choice& c) {
    j.at("label").get_to(c.label);
    j.at("text").get_to(c.text);
}

void to_json(Json& j, const Question& q) {
    j = Json{{"id", q.id},
             {"subject", q.subject},
             {"kind", to_string(q.kind)},
             {"stem", q.stem},
             {"choices", q.choices},
             {"correct_label", q.correct_label},
             {"bloom", to_string(q.bloom)},
             {"author", q.author},
             {"created_at", format_rfc3339(q.created_at)}};
}

void from_json(const Json& j, Question& q) {
    j.at("id").get_to(q.id);
    j.at("subject").get_to(q.subject);
    q.kind = parse_enum<QuestionKind>(j.at("kind"), parse_question_kind, "question kind");
    j.at("stem").get_to(q.stem);
    j.at("choices").get_to(q.choices);
    j.at("correct_label").get_to(q.correct_label);
    q.bloom = parse_enum<Bloom>(j.at("bloom"), parse_bloom, "bloom category");
    q.author = j.value("author", std::string{});
    q.created_at = j.contains("created_at") ? parse_rfc3339(j.at("created_at").get<std::string>())
                                            : Timestamp{};
}

void to_json(Json& j, const QuestionBank& b) {
    j = Json{{"subject", b.subject}, {"questions", b.questions}, {"version", b.version}};
}

void from_json(const Json& j, QuestionBank& b) {
    j.at("subject").get_to(b.subject);
    j.at("questions").get_to(b.questions);
    j.at("version").get_to(b.version);
}

void to_json(Json& j, const ExamDefinition& e) {
    j = Json{{"exam_id", e.exam_id},
             {"subject", e.subject},
             {"bank_version", e.bank_version},
             {"question_count", e.question_count},
             {"time_limit_minutes", e.time_limit_minutes},
             {"passing_rate_percent", e.passing_rate_percent},
             {"salt", crypto::to_hex(e.salt)}};
}

void from_json(const Json& j, ExamDefinition& e) {
    j.at("exam_id").get_to(e.exam_id);
    j.at("subject").get_to(e.subject);
    j.at("bank_version").get_to(e.bank_version);
    j.at("question_count").get_to(e.question_count);
    j.at("time_limit_minutes").get_to(e.time_limit_minutes);
    j.at("passing_rate_percent").get_to(e.passing_rate_percent);
    const auto salt = crypto::from_hex(j.at("salt").get<std::string>());
    if (salt.size() != e.salt.size()) throw Error(ErrorCode::SchemaViolation, "exam salt must be 16 bytes");
    std::copy(salt.begin(), salt.end(), e.salt.begin());
}

void to_json(Json& j, const Examinee& e) {
    j = Json{{"examinee_id", e.examinee_id},
             {"name", e.name},
             {"year_level", e.year_level},
             {"section", e.section}};
}

void from_json(const Json& j, Examinee& e) {
    j.at("examinee_id").get_to(e.examinee_id);
    j.at("name").get_to(e.name);
    j.at("year_level").get_to(e.year_level);
    j.at("section").get_to(e.section);
}

void to_json(Json& j, const Credential& c) {
    j = Json{{"exam_number", c.exam_number},
             {"password_hash", c.password_hash},
             {"examinee_id", c.examinee_id},
             {"exam_id", c.exam_id}};
}

void from_json(const Json& j, Credential& c) {
    j.at("exam_number").get_to(c.exam_number);
    j.at("password_hash").get_to(c.password_hash);
    j.at("examinee_id").get_to(c.examinee_id);
    j.at("exam_id").get_to(c.exam_id);
}

void to_json(Json& j, const ExamSession& s) {
    j = Json{{"session_id", s.session_id},
             {"exam_number", s.exam_number},
             {"exam_id", s.exam_id},
             {"examinee_id", s.examinee_id},
             {"question_order", s.question_order},
             {"choice_orders", s.choice_orders},
             {"answers", s.answers},
             {"state", to_string(s.state)},
             {"started_at", timestamp_json(s.started_at)},
             {"deadline", timestamp_json(s.deadline)},
             {"finalized_at", timestamp_json(s.finalized_at)}};
}

void from_json(const Json& j, ExamSession& s) {
    j.at("session_id").get_to(s.session_id);
    j.at("exam_number").get_to(s.exam_number);
    j.at("exam_id").get_to(s.exam_id);
    j.at("examinee_id").get_to(s.examinee_id);
    j.at("question_order").get_to(s.question_order);
    j.at("choice_orders").get_to(s.choice_orders);
    j.at("answers").get_to(s.answers);
    s.state = parse_enum<SessionState>(j.at("state"), parse_session_state, "session state");
    s.started_at = timestamp_from_json(j.at("started_at"));
    s.deadline = timestamp_from_json(j.at("deadline"));
    s.finalized_at = timestamp_from_json(j.at("finalized_at"));
}

void to_json(Json& j, const TestResult& r) {
    j = Json{{"examinee_id", r.examinee_id},
             {"exam_id", r.exam_id},
             {"raw_score", r.raw_score},
             {"total_items", r.total_items},
             {"percent", r.percent},
             {"passed", r.passed},
             {"item_outcomes", r.item_outcomes}};
}

void from_json(const Json& j, TestResult& r) {
    j.at("examinee_id").get_to(r.examinee_id);
    j.at("exam_id").get_to(r.exam_id);
    j.at("raw_score").get_to(r.raw_score);
    j.at("total_items").get_to(r.total_items);
    j.at("percent").get_to(r.percent);
    j.at("passed").get_to(r.passed);
    j.at("item_outcomes").get_to(r.item_outcomes);
}

void to_json(Json& j, const PresentedQuestion& q) {
    j = Json{{"id", q.id}, {"kind", to_string(q.kind)}, {"stem", q.stem}, {"choices", q.choices}};
}

}  // namespace eas

namespace eas::crypto {

void to_json(Json& j, const PasswordHash& h) {
    j = Json{{"algorithm", h.algorithm},
             {"opslimit", h.params.opslimit},
             {"memlimit", h.params.memlimit},
             {"salt", to_hex(h.salt)},
             {"hash", to_hex(h.hash)}};
}

void from_json(const Json& j, PasswordHash& h) {
    j.at("algorithm").get_to(h.algorithm);
    j.at("opslimit").get_to(h.params.opslimit);
    j.at("memlimit").get_to(h.params.memlimit);
    h.salt = from_hex(j.at("salt").get<std::string>());
    h.hash = from_hex(j.at("hash").get<std::string>());
}

}  // namespace eas::crypto

namespace eas::psychometrics {

void to_json(Json& j, const DifficultyRecord& r) {
    j = Json{{"question_id", r.question_id},
             {"n_correct", r.n_correct},
             {"n_total", r.n_total},
             {"p", r.p},
             {"p_display", display_ratio(r.n_correct, r.n_total)},
             {"interpretation", to_string(r.interpretation)}};
}

void to_json(Json& j, const DiscriminationRecord& r) {
    j = Json{{"question_id", r.question_id},
             {"upper_correct", r.upper_correct},
             {"lower_correct", r.lower_correct},
             {"group_size", r.group_size},
             {"d", r.d},
             {"d_display", display_ratio(r.upper_correct - r.lower_correct, r.group_size)},
             {"interpretation", to_string(r.interpretation)}};
}

void to_json(Json& j, const GroupPartition& g) {
    j = Json{{"upper", g.upper}, {"lower", g.lower}, {"fraction", g.fraction}};
}

void to_json(Json& j, const ItemAnalysisReport& r) {
    Json items = Json::array();
    for (const auto& item : r.items)
        items.push_back(Json{{"question_id", item.question_id},
                             {"bloom", to_string(item.bloom)},
                             {"difficulty", item.difficulty},
                             {"discrimination", item.discrimination}});
    Json rollup = Json::object();
    for (const auto& [bloom, counts] : r.bloom_rollup)
        rollup[std::string(to_string(bloom))] =
            Json{{"n_correct", counts.n_correct}, {"n_incorrect", counts.n_incorrect}};
    j = Json{{"exam_id", r.exam_id},
             {"items", std::move(items)},
             {"partition", r.partition},
             {"bloom_rollup", std::move(rollup)},
             {"cohort", Json{{"year_levels", r.cohort.year_levels},
                             {"sections", r.cohort.sections},
                             {"subject", r.cohort.subject}}}};
}

}  // namespace eas::psychometrics
