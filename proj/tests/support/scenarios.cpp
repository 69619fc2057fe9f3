#include "scenarios.hpp"

#include "eas/crypto.hpp"
#include "eas/csv.hpp"
#include "eas/error.hpp"
#include "eas/event_log.hpp"
#include "eas/http_server.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace eas::testing {

namespace fs = std::filesystem;

std::function<std::vector<std::uint8_t>(std::size_t)> seeded_entropy(std::uint64_t seed) {
    auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
    return [seed, counter](std::size_t n) {
        std::vector<std::uint8_t> out;
        const std::uint64_t c = counter->fetch_add(1);
        for (std::uint64_t block = 0; out.size() < n; ++block) {
            std::uint8_t material[24];
            for (int i = 0; i < 8; ++i) {
                material[i] = static_cast<std::uint8_t>(seed >> (8 * i));
                material[8 + i] = static_cast<std::uint8_t>(c >> (8 * i));
                material[16 + i] = static_cast<std::uint8_t>(block >> (8 * i));
            }
            const auto digest = crypto::sha256(material);
            out.insert(out.end(), digest.begin(), digest.end());
        }
        out.resize(n);
        return out;
    };
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> keys_of(const fs::path& bank_csv) {
    std::istringstream in(read_text(bank_csv));
    auto rows = csv::read_all(in);
    std::map<std::string, std::string> keys;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].fields.size() == 10) keys[rows[i].fields[0]] = rows[i].fields[8];
    return keys;
}

std::vector<std::string> key_fields(const Json& j, const std::string& path) {
    static const std::set<std::string> suspicious = {"correct_label", "correct", "answer_key",
                                                     "key", "correct_answer", "answer"};
    std::vector<std::string> found;
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (suspicious.count(k)) found.push_back(path + "." + k);
            auto inner = key_fields(v, path + "." + k);
            found.insert(found.end(), inner.begin(), inner.end());
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            auto inner = key_fields(j[i], path + "[" + std::to_string(i) + "]");
            found.insert(found.end(), inner.begin(), inner.end());
        }
    }
    return found;
}

namespace {

const Timestamp kExamStart = parse_rfc3339("2026-03-02T08:00:00.000Z");

api::ServiceOptions test_options(const fs::path& dir, ManualClock& clock, std::uint64_t seed) {
    api::ServiceOptions opts;
    opts.data_dir = dir;
    opts.clock = clock.as_clock();
    opts.kdf = crypto::KdfParams::minimal();
    opts.sync = false;
    opts.entropy = seeded_entropy(seed);
    return opts;
}

std::string admin_token(api::Service& svc) {
    svc.bootstrap_admin("admin", "admin-pass");
    return svc.login(Json{{"username", "admin"}, {"password", "admin-pass"}}).at("token");
}

// Which label examinee `e` picks for a question: correct for roughly
// ability% of items, otherwise a fixed wrong label.
std::string pick(int e, const std::string& qid, const std::string& key) {
    const auto digest = crypto::sha256(std::span(reinterpret_cast<const std::uint8_t*>(qid.data()), qid.size()));
    const int roll = (digest[0] + 37 * e) % 100;
    const int ability = 40 + (e * 13) % 60;
    if (roll < ability) return key;
    static const std::string labels = "ABCD";
    return std::string(1, labels[(labels.find(key) + 1 + e % 3) % 4]);
}

}  // namespace

RehearsalOutcome run_rehearsal(const fs::path& data_dir, const fs::path& bank_csv, bool concurrent,
                               int examinees) {
    RehearsalOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    ManualClock clock(kExamStart - std::chrono::hours(1));
    api::Service svc(test_options(data_dir, clock, 2026));
    const auto admin = admin_token(svc);
    const auto keys = keys_of(bank_csv);

    svc.import_bank(admin, read_text(bank_csv));
    const auto exam = svc.create_exam(admin, Json{{"exam_id", "GK-PERIODICAL"},
                                                   {"subject", "GK"},
                                                   {"question_count", 50},
                                                   {"time_limit_minutes", 60},
                                                   {"passing_rate_percent", 75}});
    Json roster = Json::array();
    for (int i = 0; i < examinees; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "S%03d", i + 1);
        roster.push_back(Json{{"examinee_id", id},
                              {"name", "Student " + std::to_string(i + 1)},
                              {"year_level", std::to_string(1 + i % 4)},
                              {"section", std::string(1, static_cast<char>('A' + i % 3))}});
    }
    const auto issued = svc.issue_credentials(admin, "GK-PERIODICAL", Json{{"examinees", roster}});
    clock.set(kExamStart);

    std::mutex out_mutex;
    auto problem = [&](std::string what) {
        std::lock_guard lock(out_mutex);
        out.problems.push_back(std::move(what));
    };
    auto take_exam = [&](int e) {
        const auto& cred = issued.at("credentials").at(e);
        const std::string examinee = cred.at("examinee_id");
        try {
            const auto login = svc.exam_login(
                Json{{"exam_number", cred.at("exam_number")}, {"password", cred.at("password")}});
            const std::string token = login.at("token");
            const auto started = parse_rfc3339(login.at("started_at").get<std::string>());
            const auto deadline = parse_rfc3339(login.at("deadline").get<std::string>());
            if (deadline - started != std::chrono::minutes(60)) {
                std::lock_guard lock(out_mutex);
                out.deadline_exact = false;
            }
            const auto questions = svc.get_questions(token);
            if (!key_fields(questions).empty()) problem(examinee + ": key field in questions");
            const auto& list = questions.at("questions");
            if (list.size() != 50) problem(examinee + ": expected 50 questions");
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string qid = list[i].at("id");
                // Every fifth item is first answered wrongly, then revised.
                if (i % 5 == 0) {
                    const auto k = keys.at(qid);
                    svc.post_answer(token, Json{{"question_id", qid}, {"label", k == "A" ? "B" : "A"}});
                }
                if ((e + static_cast<int>(i)) % 17 == 0) continue;  // left blank
                svc.post_answer(token, Json{{"question_id", qid}, {"label", pick(e, qid, keys.at(qid))}});
            }
            const auto result = svc.finalize(token);
            const auto mine = svc.my_result(token);
            const bool retrievable = mine.at("results").size() == 1 && mine.at("results")[0].at("raw_score") == result.at("raw_score") &&
                                     mine.at("results")[0].at("percent") == result.at("percent");
            std::lock_guard lock(out_mutex);
            out.results[examinee] = canonical_dump(result);
            out.all_retrievable = out.all_retrievable && retrievable;
        } catch (const std::exception& ex) {
            problem(examinee + ": " + ex.what());
        }
    };

    if (concurrent) {
        std::vector<std::thread> threads;
        for (int e = 0; e < examinees; ++e) threads.emplace_back(take_exam, e);
        for (auto& t : threads) t.join();
    } else {
        for (int e = 0; e < examinees; ++e) take_exam(e);
    }
    clock.advance(std::chrono::minutes(30));

    const auto listed = svc.list_results(admin, {});
    out.finalized = static_cast<int>(listed.at("results").size());
    for (const auto& [number, session] : svc.state().sessions)
        out.answers[number] = canonical_dump(Json(session.answers));
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    (void)exam;
    return out;
}

// ------------------------------------------------------------ role matrix

namespace {

struct Response {
    int status = 0;
    Json body;
};

Response call(httplib::Client& client, std::string_view method, const std::string& path,
              const std::string& token, const std::string& body,
              const std::string& content_type = "application/json") {
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    httplib::Result r;
    if (method == "GET") r = client.Get(path, headers);
    else if (method == "POST") r = client.Post(path, headers, body, content_type);
    else if (method == "PUT") r = client.Put(path, headers, body, content_type);
    else r = client.Delete(path, headers);
    if (!r) return {-1, {}};
    return {r->status, Json::parse(r->body, nullptr, false)};
}

}  // namespace

RoleMatrixOutcome run_role_matrix(const fs::path& data_dir, const fs::path& bank_csv) {
    RoleMatrixOutcome out;
    ManualClock clock(kExamStart);
    api::Service svc(test_options(data_dir, clock, 7));
    api::HttpServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    if (port <= 0) {
        out.failures.push_back("could not bind");
        return out;
    }
    std::thread serving([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    std::map<api::Caller, std::string> tokens;
    try {
        tokens[api::Caller::Anonymous] = "";
        tokens[api::Caller::Administrator] = admin_token(svc);
        const auto& admin = tokens[api::Caller::Administrator];
        svc.create_user(admin, Json{{"username", "faculty1"}, {"role", "Faculty"}, {"password", "fac-pass"}});
        svc.create_user(admin, Json{{"username", "student1"},
                                    {"role", "Student"},
                                    {"password", "stu-pass"},
                                    {"examinee", {{"examinee_id", "S001"}, {"name", "Ana"}, {"year_level", "1"}, {"section", "A"}}}});
        tokens[api::Caller::Faculty] =
            call(client, "POST", "/api/login", "", R"({"username":"faculty1","password":"fac-pass"})").body.at("token");
        tokens[api::Caller::Student] =
            call(client, "POST", "/api/login", "", R"({"username":"student1","password":"stu-pass"})").body.at("token");

        svc.import_bank(admin, read_text(bank_csv));
        svc.create_exam(admin, Json{{"exam_id", "EX1"}, {"subject", "GK"}, {"question_count", 10},
                                    {"time_limit_minutes", 60}, {"passing_rate_percent", 75}});
        const auto issued = svc.issue_credentials(
            admin, "EX1",
            Json{{"examinees",
                  {{{"examinee_id", "S001"}, {"name", "Ana"}, {"year_level", "1"}, {"section", "A"}},
                   {{"examinee_id", "S002"}, {"name", "Ben"}, {"year_level", "1"}, {"section", "B"}}}}});

        // Student-facing payload scan on the first credential.
        auto scan = [&](const std::string& what, const Response& r) {
            ++out.payloads_scanned;
            if (r.status != 200) out.failures.push_back(what + " returned " + std::to_string(r.status));
            for (const auto& f : key_fields(r.body)) out.failures.push_back(what + " exposes " + f);
        };
        const auto& c0 = issued.at("credentials")[0];
        const auto login = call(client, "POST", "/api/exam-login", "",
                                Json{{"exam_number", c0.at("exam_number")}, {"password", c0.at("password")}}.dump());
        scan("exam-login", login);
        const std::string session = login.body.value("token", "");
        const auto questions = call(client, "GET", "/api/session/questions", session, "");
        scan("session/questions", questions);
        const std::string qid = questions.body.at("questions")[0].at("id");
        scan("session/answers", call(client, "POST", "/api/session/answers", session,
                                     Json{{"question_id", qid}, {"label", "A"}}.dump()));
        scan("results/me (session)", call(client, "GET", "/api/results/me", session, ""));
        scan("session/finalize", call(client, "POST", "/api/session/finalize", session, ""));
        scan("results/me (after)", call(client, "GET", "/api/results/me", session, ""));
        scan("results/me (student)", call(client, "GET", "/api/results/me", tokens[api::Caller::Student], ""));
        scan("profile", call(client, "PUT", "/api/profile", tokens[api::Caller::Student], R"({"section":"A"})"));

        const auto& c1 = issued.at("credentials")[1];
        tokens[api::Caller::ExamSession] =
            call(client, "POST", "/api/exam-login", "",
                 Json{{"exam_number", c1.at("exam_number")}, {"password", c1.at("password")}}.dump())
                .body.at("token");
    } catch (const std::exception& e) {
        out.failures.push_back(std::string("setup failed: ") + e.what());
    }

    if (out.failures.empty()) {
        for (const auto& info : api::kEndpoints) {
            std::string path(info.path);
            auto replace = [&](std::string_view from, std::string_view to) {
                if (auto at = path.find(from); at != std::string::npos) path.replace(at, from.size(), to);
            };
            replace("{u}", "nobody");
            replace("{id}", "EX1");
            replace("{exam}", "EX1");
            replace("{dimension}", "section");
            const bool csv_body = info.endpoint == api::Endpoint::ImportBank;
            const std::string body = csv_body ? "id,subject,kind,stem,choice_a,choice_b,choice_c,choice_d,correct,bloom\n" : "{}";
            for (api::Caller caller : api::kAllCallers) {
                const auto r = call(client, info.method, path, tokens[caller], body,
                                    csv_body ? "text/csv" : "application/json");
                ++out.checks;
                const bool allowed = api::is_allowed(info.endpoint, caller);
                std::string verdict;
                if (r.status < 0) verdict = "no response";
                else if (allowed && (r.status == 401 || r.status == 403))
                    verdict = "denied with " + std::to_string(r.status);
                else if (!allowed && caller == api::Caller::Anonymous && r.status != 401)
                    verdict = "expected 401, got " + std::to_string(r.status);
                else if (!allowed && caller != api::Caller::Anonymous && r.status != 403)
                    verdict = "expected 403, got " + std::to_string(r.status);
                else if (r.status >= 400 && (!r.body.is_object() || !r.body.contains("error") || !r.body.contains("message")))
                    verdict = "error body lacks error/message";
                if (!verdict.empty())
                    out.failures.push_back(std::string(info.method) + " " + path + " as " +
                                           std::string(api::to_string(caller)) + ": " + verdict);
            }
        }
    }
    server.stop();
    serving.join();
    return out;
}

// ---------------------------------------------------------------- storage

std::uint64_t generate_history(const fs::path& data_dir, std::uint64_t seed, int operations) {
    ManualClock clock(kExamStart);
    api::Service svc(test_options(data_dir, clock, seed));
    const auto admin = admin_token(svc);
    std::mt19937_64 rng(seed);
    auto roll = [&](int n) { return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng)); };
    const char* subjects[] = {"GK", "MATH"};
    const char* blooms[] = {"KNOWLEDGE", "COMPREHENSION", "APPLICATION", "ANALYSIS", "SYNTHESIS", "EVALUATION"};
    int next_q = 0, next_exam = 0, next_student = 0;
    std::vector<std::string> exams, users;
    std::vector<std::pair<std::string, std::string>> pending;  // exam_number, password
    std::vector<std::string> active;                           // session tokens

    for (int op = 0; op < operations; ++op) {
        clock.advance(std::chrono::seconds(1 + roll(90)));
        try {
            switch (roll(9)) {
                case 0: {
                    const std::string name = "user" + std::to_string(roll(6));
                    Json body{{"username", name}, {"role", roll(2) ? "Faculty" : "Student"}, {"password", "pw"}};
                    if (body["role"] == "Student")
                        body["examinee"] = {{"examinee_id", "U" + name}, {"name", name}, {"year_level", "1"}, {"section", "A"}};
                    svc.create_user(admin, body);
                    users.push_back(name);
                    break;
                }
                case 1:
                    if (!users.empty()) {
                        const auto name = users[roll(static_cast<int>(users.size()))];
                        if (roll(2)) svc.delete_user(admin, name);
                        else svc.reset_password(admin, name);
                    }
                    break;
                case 2:
                case 3: {
                    const std::string subject = subjects[roll(2)];
                    std::string csv = "id,subject,kind,stem,choice_a,choice_b,choice_c,choice_d,correct,bloom\n";
                    const int rows = 1 + roll(6);
                    for (int r = 0; r < rows; ++r, ++next_q) {
                        csv += subject + std::to_string(next_q) + "," + subject + ",MCQ,\"Stem, number " +
                               std::to_string(next_q) + "\",a,b,c,d," + std::string(1, "ABCD"[roll(4)]) + "," +
                               blooms[roll(6)] + "\n";
                    }
                    if (roll(2)) svc.import_bank(admin, csv);
                    else {
                        auto one = import_csv(csv).bank.questions.front();
                        svc.create_question(admin, Json{{"id", one.id}, {"subject", one.subject}, {"kind", "MCQ"},
                                                        {"stem", one.stem}, {"choices", one.choices},
                                                        {"correct_label", one.correct_label},
                                                        {"bloom", to_string(one.bloom)}});
                    }
                    break;
                }
                case 4: {
                    const std::string subject = subjects[roll(2)];
                    const std::string id = "X" + std::to_string(next_exam++);
                    svc.create_exam(admin, Json{{"exam_id", id}, {"subject", subject}, {"question_count", 1 + roll(3)},
                                                {"time_limit_minutes", 1 + roll(10)}, {"passing_rate_percent", 50}});
                    exams.push_back(id);
                    Json roster = Json::array();
                    for (int i = 0, n = 1 + roll(3); i < n; ++i, ++next_student)
                        roster.push_back({{"examinee_id", "P" + std::to_string(next_student)},
                                          {"name", "Person " + std::to_string(next_student)},
                                          {"year_level", std::to_string(1 + roll(2))},
                                          {"section", std::string(1, "AB"[roll(2)])}});
                    const auto issued = svc.issue_credentials(admin, id, Json{{"examinees", roster}});
                    for (const auto& c : issued.at("credentials")) pending.emplace_back(c.at("exam_number"), c.at("password"));
                    break;
                }
                case 5:
                    if (!pending.empty()) {
                        const auto [number, password] = pending.back();
                        pending.pop_back();
                        active.push_back(svc.exam_login(Json{{"exam_number", number}, {"password", password}}).at("token"));
                    }
                    break;
                case 6:
                case 7:
                    if (!active.empty()) {
                        const auto& token = active[roll(static_cast<int>(active.size()))];
                        const auto q = svc.get_questions(token);
                        if (q.at("state") == "Active") {
                            const auto& list = q.at("questions");
                            const std::string qid = list[roll(static_cast<int>(list.size()))].at("id");
                            svc.post_answer(token, Json{{"question_id", qid}, {"label", std::string(1, "ABCD"[roll(4)])}});
                        }
                    }
                    break;
                case 8:
                    if (!active.empty()) {
                        const auto at = roll(static_cast<int>(active.size()));
                        if (roll(3) == 0) svc.sweep_expired();
                        else svc.finalize(active[at]);
                        active.erase(active.begin() + at);
                    }
                    break;
            }
        } catch (const Error&) {
            // Rejected operations (duplicates, deadlines, ...) write nothing.
        }
    }
    return svc.log().last_seq();
}

std::string check_snapshot_equivalence(const fs::path& data_dir) {
    store::EventLog log(store::LogOptions{data_dir, 0, false});
    const auto full = store::canonical_state(log.replay());
    const auto events = log.read_events();
    store::State base;
    for (std::size_t cut = 0; cut <= events.size(); ++cut) {
        if (cut > 0) store::apply(base, events[cut - 1]);
        // Through the snapshot file, as on startup.
        log.snapshot(base);
        const auto loaded = log.load_snapshot();
        if (!loaded || loaded->as_of_seq != cut) return "snapshot at " + std::to_string(cut) + " did not load";
        if (store::canonical_state(loaded->state) != store::canonical_state(base))
            return "snapshot at " + std::to_string(cut) + " does not round-trip";
        if (store::canonical_state(log.load_state()) != full)
            return "snapshot at " + std::to_string(cut) + " plus tail differs from full replay";
        if (store::canonical_state(log.replay_from(base)) != full)
            return "replay_from(" + std::to_string(cut) + ") differs from full replay";
    }
    return {};
}

std::string check_torn_tail(const fs::path& data_dir, int mode) {
    ManualClock clock(kExamStart);
    std::string before;
    std::uint64_t seq = 0;
    {
        store::EventLog log(store::LogOptions{data_dir, 0, true});
        for (int i = 0; i < 5; ++i) {
            Question q{"Q" + std::to_string(i), "GK", QuestionKind::TrueFalse, "Stem", true_false_choices(),
                       "T", Bloom::Knowledge, "t", kExamStart};
            seq = log.append(store::EventKind::QuestionAdded, store::payload::question_added(q), clock.now());
        }
        before = store::canonical_state(log.replay());
    }
    const auto log_path = data_dir / "eas.log";
    const auto good_size = fs::file_size(log_path);
    {
        Question q{"QX", "GK", QuestionKind::TrueFalse, "Torn", true_false_choices(), "F", Bloom::Knowledge, "t", kExamStart};
        store::Event e{seq + 1, clock.now(), store::EventKind::QuestionAdded, store::payload::question_added(q)};
        auto frame = store::frame_record(canonical_dump(store::event_to_json(e)));
        if (mode == 0) frame.resize(frame.size() / 2);
        else if (mode == 1) frame[frame.size() - 1] ^= 0xFF;
        else frame.resize(2);
        std::ofstream out(log_path, std::ios::binary | std::ios::app);
        out.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    }
    store::EventLog reopened(store::LogOptions{data_dir, 0, true});
    if (reopened.warnings().empty()) return "no warning for torn tail";
    if (reopened.last_seq() != seq) return "last_seq " + std::to_string(reopened.last_seq()) + " after recovery";
    if (store::canonical_state(reopened.replay()) != before) return "recovered state differs";
    if (fs::file_size(log_path) != good_size) return "torn bytes not truncated";
    Question q{"Q9", "GK", QuestionKind::TrueFalse, "After", true_false_choices(), "T", Bloom::Knowledge, "t", kExamStart};
    if (reopened.append(store::EventKind::QuestionAdded, store::payload::question_added(q), clock.now()) != seq + 1)
        return "append after recovery did not continue the sequence";
    return {};
}

}  // namespace eas::testing
