#include <doctest.h>

#include "eas/error.hpp"
#include "eas/service.hpp"
#include "support/scenarios.hpp"
#include "support/temp_dir.hpp"

#include <algorithm>
#include <chrono>

using namespace eas;
using namespace eas::api;
using namespace std::chrono_literals;

namespace {

const std::filesystem::path kFixtures = EAS_FIXTURES;
const Timestamp kStart = parse_rfc3339("2026-03-02T08:00:00Z");

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::BadRequest;
}

struct Harness {
    testing::TempDir dir;
    ManualClock clock{kStart};
    std::unique_ptr<Service> svc;
    std::string admin;

    explicit Harness(std::uint64_t seed = 1) {
        open(seed);
        svc->bootstrap_admin("admin", "admin-pass");
        admin = login("admin", "admin-pass");
    }

    void open(std::uint64_t seed = 1) {
        ServiceOptions o;
        o.data_dir = dir.path();
        o.clock = clock.as_clock();
        o.kdf = crypto::KdfParams::minimal();
        o.sync = false;
        o.entropy = testing::seeded_entropy(seed);
        svc = std::make_unique<Service>(std::move(o));
    }

    std::string login(const std::string& user, const std::string& pw) {
        return svc->login(Json{{"username", user}, {"password", pw}}).at("token");
    }

    std::uint64_t seq() const { return svc->log().last_seq(); }

    void exam_with_bank(int k = 50) {
        svc->import_bank(admin, testing::read_text(kFixtures / "bank50.csv"));
        svc->create_exam(admin, Json{{"exam_id", "EX1"}, {"subject", "GK"}, {"question_count", k},
                                     {"time_limit_minutes", 60}, {"passing_rate_percent", 75}});
    }

    /// Issues credentials for (id, name, year, section) rows; returns exam_number -> password.
    std::vector<std::pair<std::string, std::string>> issue(
        const std::vector<std::array<std::string, 4>>& people) {
        Json list = Json::array();
        for (const auto& p : people)
            list.push_back({{"examinee_id", p[0]}, {"name", p[1]}, {"year_level", p[2]}, {"section", p[3]}});
        const auto out = svc->issue_credentials(admin, "EX1", Json{{"examinees", list}});
        std::vector<std::pair<std::string, std::string>> creds;
        for (const auto& c : out.at("credentials")) creds.emplace_back(c.at("exam_number"), c.at("password"));
        return creds;
    }

    /// Starts, answers the first `right` questions correctly (rest wrong) and finalizes.
    Json take(const std::pair<std::string, std::string>& cred, int right) {
        const std::string tok = svc->exam_login(Json{{"exam_number", cred.first}, {"password", cred.second}}).at("token");
        const auto qs = svc->get_questions(tok).at("questions");
        const auto keys = testing::keys_of(kFixtures / "bank50.csv");
        int i = 0;
        for (const auto& q : qs) {
            const std::string id = q.at("id");
            const auto& key = keys.at(id);
            const std::string label = i++ < right ? key : (key == "A" ? "B" : "A");
            svc->post_answer(tok, Json{{"question_id", id}, {"label", label}});
        }
        return svc->finalize(tok);
    }
};

std::string canonical_state_of(const Service& s) { return store::canonical_state(s.state()); }

}  // namespace

TEST_CASE("bootstrap only once") {
    Harness h;
    CHECK_FALSE(h.svc->bootstrap_admin("other", "pw"));
    CHECK(code_of([&] { h.login("other", "pw"); }) == ErrorCode::BadCredentials);
}

TEST_CASE("login outcomes") {
    Harness h;
    const auto r = h.svc->login(Json{{"username", "ADMIN"}, {"password", "admin-pass"}});
    CHECK(r.at("role") == "Administrator");
    CHECK(r.at("token").get<std::string>().size() >= 32);
    CHECK(code_of([&] { h.login("admin", "nope"); }) == ErrorCode::BadCredentials);
    CHECK(code_of([&] { h.login("ghost", "nope"); }) == ErrorCode::BadCredentials);
    h.svc->create_user(h.admin, Json{{"username", "fac"}, {"role", "Faculty"}, {"password", "pw1"}});
    h.svc->update_user(h.admin, "fac", Json{{"active", false}});
    CHECK(code_of([&] { h.login("fac", "wrong"); }) == ErrorCode::BadCredentials);
    CHECK(code_of([&] { h.login("fac", "pw1"); }) == ErrorCode::AccountInactive);
}

TEST_CASE("tokens expire after twelve hours") {
    Harness h;
    h.exam_with_bank();
    h.clock.advance(11h + 59min);
    CHECK_NOTHROW(h.svc->list_results(h.admin, {}));
    h.clock.advance(2min);
    CHECK(code_of([&] { h.svc->list_results(h.admin, {}); }) == ErrorCode::Unauthorized);
}

TEST_CASE("login timing does not reveal whether a user exists") {
    Harness h;
    h.svc->create_user(h.admin, Json{{"username", "known"}, {"role", "Faculty"}, {"password", "right-pw"}});
    std::vector<double> unknown, wrong;
    for (int i = 0; i < 1200; ++i) {
        const bool first = i % 2 == 0;
        for (int pass = 0; pass < 2; ++pass) {
            const bool probe_unknown = (pass == 0) == first;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                h.login(probe_unknown ? "nobody" + std::to_string(i) : "known", "bad-pw");
            } catch (const Error&) {
            }
            const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
            (probe_unknown ? unknown : wrong).push_back(us);
        }
    }
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        return v[v.size() / 2];
    };
    const double mu = median(unknown), mw = median(wrong);
    MESSAGE("median unknown " << mu << " us, wrong password " << mw << " us");
    CHECK(mu / mw > 0.75);
    CHECK(mu / mw < 1.33);
}

TEST_CASE("user management") {
    Harness h;
    const auto fac = [&] {
        h.svc->create_user(h.admin, Json{{"username", "fac"}, {"role", "Faculty"}, {"password", "pw"}});
        return h.login("fac", "pw");
    }();

    SUBCASE("create, delete, re-create writes three events") {
        const auto before = h.seq();
        h.svc->create_user(h.admin, Json{{"username", "s1"}, {"role", "Faculty"}, {"password", "a"}});
        h.svc->delete_user(h.admin, "s1");
        h.svc->create_user(h.admin, Json{{"username", "s1"}, {"role", "Faculty"}, {"password", "b"}});
        CHECK(h.seq() - before == 3);
        CHECK_NOTHROW(h.login("s1", "b"));
    }
    SUBCASE("duplicate usernames are case-insensitive") {
        CHECK(code_of([&] {
                  h.svc->create_user(h.admin, Json{{"username", "FAC"}, {"role", "Faculty"}, {"password", "x"}});
              }) == ErrorCode::DuplicateUsername);
    }
    SUBCASE("faculty cannot manage users") {
        CHECK(code_of([&] { h.svc->delete_user(fac, "admin"); }) == ErrorCode::Forbidden);
        CHECK(code_of([&] { h.svc->reset_password(fac, "admin"); }) == ErrorCode::Forbidden);
    }
    SUBCASE("unknown user") {
        CHECK(code_of([&] { h.svc->delete_user(h.admin, "ghost"); }) == ErrorCode::UnknownUser);
    }
    SUBCASE("reset password replaces the old one and revokes tokens") {
        const std::string temp = h.svc->reset_password(h.admin, "fac").at("temporary_password");
        CHECK(code_of([&] { h.login("fac", "pw"); }) == ErrorCode::BadCredentials);
        CHECK_NOTHROW(h.login("fac", temp));
        CHECK(code_of([&] { h.svc->list_results(fac, {}); }) == ErrorCode::Unauthorized);
    }
    SUBCASE("students need a profile and may edit it") {
        CHECK(code_of([&] {
                  h.svc->create_user(h.admin, Json{{"username", "stu"}, {"role", "Student"}, {"password", "x"}});
              }) == ErrorCode::BadRequest);
        const auto made = h.svc->create_user(
            h.admin, Json{{"username", "stu"}, {"role", "Student"},
                          {"examinee", {{"examinee_id", "S1"}, {"name", "Stu"}, {"year_level", "1"}, {"section", "A"}}}});
        const std::string temp = made.at("temporary_password");
        const auto tok = h.login("stu", temp);
        h.svc->update_profile(tok, Json{{"section", "B"}});
        CHECK(h.svc->state().examinees.at("S1").section == "B");
        CHECK(code_of([&] { h.svc->update_profile(fac, Json{{"section", "B"}}); }) == ErrorCode::Forbidden);
    }
    CHECK_FALSE(testing::read_text(h.dir.path() / store::kLogFileName).find("\"pw\"") != std::string::npos);
}

TEST_CASE("every successful mutation writes exactly one event") {
    Harness h;
    auto one = [&](auto&& f) {
        const auto before = h.seq();
        f();
        CHECK(h.seq() == before + 1);
    };
    one([&] { h.svc->create_user(h.admin, Json{{"username", "f"}, {"role", "Faculty"}, {"password", "p"}}); });
    one([&] { h.svc->update_user(h.admin, "f", Json{{"password", "q"}}); });
    one([&] { h.svc->reset_password(h.admin, "f"); });
    one([&] { h.svc->import_bank(h.admin, testing::read_text(kFixtures / "bank50.csv")); });
    one([&] {
        h.svc->create_question(h.admin, Json{{"id", "X1"}, {"subject", "GK"}, {"kind", "TF"}, {"stem", "s"},
                                             {"correct_label", "T"}, {"bloom", "KNOWLEDGE"}});
    });
    one([&] {
        h.svc->create_exam(h.admin, Json{{"exam_id", "EX1"}, {"subject", "GK"}, {"question_count", 10},
                                         {"time_limit_minutes", 60}, {"passing_rate_percent", 50}});
    });
    std::vector<std::pair<std::string, std::string>> creds;
    one([&] { creds = h.issue({{{"E1", "A", "1", "A"}}, {{"E2", "B", "1", "A"}}}); });
    std::string tok;
    one([&] { tok = h.svc->exam_login(Json{{"exam_number", creds[0].first}, {"password", creds[0].second}}).at("token"); });
    const auto first = h.svc->get_questions(tok).at("questions")[0];
    const std::string q = first.at("id");
    const std::string label = first.at("choices")[0].at("label");
    one([&] { h.svc->post_answer(tok, Json{{"question_id", q}, {"label", label}}); });
    one([&] { h.svc->finalize(tok); });
    one([&] { h.svc->delete_user(h.admin, "f"); });

    // Failed operations write nothing.
    const auto before = h.seq();
    CHECK_THROWS(h.svc->delete_user(h.admin, "f"));
    CHECK_THROWS(h.svc->finalize(tok));
    CHECK_THROWS(h.svc->create_exam(h.admin, Json{{"exam_id", "EX1"}, {"subject", "GK"}, {"question_count", 10},
                                                  {"time_limit_minutes", 60}, {"passing_rate_percent", 50}}));
    CHECK(h.seq() == before);
}

TEST_CASE("restart replays to the same state") {
    Harness h;
    h.exam_with_bank();
    auto creds = h.issue({{{"E1", "A", "1", "A"}}, {{"E2", "B", "1", "B"}}, {{"E3", "C", "2", "A"}}});
    h.take(creds[0], 40);
    h.take(creds[1], 20);
    const auto before = canonical_state_of(*h.svc);
    h.open(2);
    CHECK(canonical_state_of(*h.svc) == before);
    h.svc->snapshot();
    h.open(3);
    CHECK(canonical_state_of(*h.svc) == before);
    // A session started before the restart still accepts answers after it.
    const std::string tok = h.svc->exam_login(Json{{"exam_number", creds[2].first}, {"password", creds[2].second}}).at("token");
    h.open(4);
    CHECK(code_of([&] { h.svc->get_questions(tok); }) == ErrorCode::Unauthorized);
    CHECK(h.svc->state().sessions.at(creds[2].first).state == SessionState::Active);
}

TEST_CASE("exam credentials lock out after repeated failures") {
    Harness h;
    h.exam_with_bank();
    const auto creds = h.issue({{{"E1", "A", "1", "A"}}});
    const Json bad{{"exam_number", creds[0].first}, {"password", "wrongpw1"}};
    // Unknown numbers and wrong passwords look the same to the caller.
    const Json unknown{{"exam_number", "00000000"}, {"password", "wrongpw1"}};
    CHECK(code_of([&] { h.svc->exam_login(unknown); }) == ErrorCode::BadCredentials);
    for (int i = 0; i < 5; ++i) CHECK(code_of([&] { h.svc->exam_login(bad); }) == ErrorCode::BadCredentials);
    const Json good{{"exam_number", creds[0].first}, {"password", creds[0].second}};
    CHECK(code_of([&] { h.svc->exam_login(good); }) == ErrorCode::LockedOut);
    h.clock.advance(61s);
    CHECK_NOTHROW(h.svc->exam_login(good));
    CHECK(code_of([&] { h.svc->exam_login(good); }) == ErrorCode::AlreadyStarted);
}

TEST_CASE("deadline is enforced by the server clock") {
    Harness h;
    h.exam_with_bank();
    const auto creds = h.issue({{{"E1", "A", "1", "A"}}});
    const auto login = h.svc->exam_login(Json{{"exam_number", creds[0].first}, {"password", creds[0].second}});
    CHECK(parse_rfc3339(login.at("deadline").get<std::string>()) - kStart == 60min);
    const std::string tok = login.at("token");
    const std::string q = h.svc->get_questions(tok).at("questions")[0].at("id");
    h.clock.advance(60min + 2s);
    CHECK_NOTHROW(h.svc->post_answer(tok, Json{{"question_id", q}, {"label", "A"}}));
    h.clock.advance(1s);
    CHECK(code_of([&] { h.svc->post_answer(tok, Json{{"question_id", q}, {"label", "B"}}); }) ==
          ErrorCode::DeadlineExceeded);
    const auto& s = h.svc->state().sessions.at(creds[0].first);
    CHECK(s.state == SessionState::Finalized);
    CHECK(s.answers.at(q) == "A");
}

TEST_CASE("sweeper finalizes abandoned sessions") {
    Harness h;
    h.exam_with_bank();
    const auto creds = h.issue({{{"E1", "A", "1", "A"}}, {{"E2", "B", "1", "A"}}});
    h.svc->exam_login(Json{{"exam_number", creds[0].first}, {"password", creds[0].second}});
    h.clock.advance(60min);
    CHECK(h.svc->sweep_expired() == 0);
    h.clock.advance(3s);
    CHECK(h.svc->sweep_expired() == 1);
    CHECK(h.svc->state().results.count(creds[0].first) == 1);
    CHECK(h.svc->state().sessions.at(creds[1].first).state == SessionState::Created);
}

TEST_CASE("one finalized session is not enough for analysis") {
    Harness h;
    h.exam_with_bank();
    const auto creds = h.issue({{{"E1", "A", "1", "A"}}, {{"E2", "B", "1", "A"}}});
    h.take(creds[0], 40);
    CHECK(code_of([&] { h.svc->item_analysis(h.admin, "EX1", {}); }) == ErrorCode::AnalysisUnavailable);
    h.take(creds[1], 20);
    CHECK_NOTHROW(h.svc->item_analysis(h.admin, "EX1", {}));
}

TEST_CASE("results, analysis and charts") {
    Harness h;
    h.exam_with_bank();
    const std::vector<std::array<std::string, 4>> people = {
        {"E1", "delacruz", "1", "A"}, {"E2", "Abad", "1", "A"}, {"E3", "Cruz", "1", "B"},
        {"E4", "Bautista", "2", "A"}, {"E5", "Reyes", "2", "B"}, {"E6", "Santos", "1", "B"},
    };
    const auto creds = h.issue(people);
    const int scores[] = {40, 30, 45, 10, 25, 38};

    for (int i = 0; i < 6; ++i) h.take(creds[i], scores[i]);

    SUBCASE("filtered results are canonically sorted") {
        ResultFilter f;
        f.subject = "GK";
        f.section = "A";
        const auto rows = h.svc->list_results(h.admin, f).at("results");
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].at("name") == "Abad");
        CHECK(rows[1].at("name") == "delacruz");
        CHECK(rows[2].at("name") == "Bautista");
        for (const auto& r : rows) CHECK(r.at("section") == "A");
        CHECK(rows[1].at("raw_score") == 40);
        CHECK(rows[1].at("percent") == 80.0);
        CHECK(rows[1].at("passed") == true);
    }
    SUBCASE("item analysis covers every examinee") {
        const auto report = h.svc->item_analysis(h.admin, "EX1", {});
        CHECK(report.at("n_examinees") == 6);
        CHECK(report.at("items").size() == 50);
        CHECK(report.at("partition").at("upper").size() == 2);  // round(0.27 * 6)
        CHECK(report.at("partition").at("upper")[0] == "E3");
        CHECK(report.at("partition").at("lower")[1] == "E4");
    }
    SUBCASE("per-section chart equals hand-computed means") {
        const auto chart = h.svc->charts(h.admin, "section", {});
        CHECK(chart.at("labels") == Json::array({"A", "B"}));
        const auto& mean_percent = chart.at("series")[0];
        CHECK(mean_percent.at("name") == "mean_percent");
        // Section A: 40, 30, 10 of 50. Section B: 45, 25, 38 of 50.
        CHECK(mean_percent.at("values")[0].get<double>() == doctest::Approx((80.0 + 60.0 + 20.0) / 3));
        CHECK(mean_percent.at("values")[1].get<double>() == doctest::Approx((90.0 + 50.0 + 76.0) / 3));
        CHECK(chart.at("series")[2].at("values") == Json::array({3, 3}));
        const auto by_year = h.svc->charts(h.admin, "year_level", {});
        CHECK(by_year.at("series")[1].at("values")[1].get<double>() == doctest::Approx(17.5));
        CHECK(code_of([&] { h.svc->charts(h.admin, "weather", {}); }) == ErrorCode::BadRequest);
    }
    SUBCASE("per-item chart agrees with item analysis") {
        ResultFilter f;
        f.exam_id = "EX1";
        const auto chart = h.svc->charts(h.admin, "item", f);
        const auto report = h.svc->item_analysis(h.admin, "EX1", {});
        std::map<std::string, int> correct;
        for (const auto& it : report.at("items")) correct[it.at("question_id")] = it.at("difficulty").at("n_correct");
        const auto& labels = chart.at("labels");
        for (std::size_t i = 0; i < labels.size(); ++i)
            CHECK(chart.at("series")[0].at("values")[i] == correct.at(labels[i]));
    }
}
