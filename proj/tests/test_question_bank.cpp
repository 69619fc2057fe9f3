#include <doctest.h>

#include "eas/error.hpp"
#include "eas/question_bank.hpp"
#include "support/scenarios.hpp"

#include <random>

using namespace eas;

namespace {

const std::filesystem::path kFixtures = EAS_FIXTURES;

Question mcq(std::string id, std::string key = "B", Bloom bloom = Bloom::Knowledge) {
    return {std::move(id), "GK", QuestionKind::MultipleChoice, "Which one?",
            {{"A", "one"}, {"B", "two"}, {"C", "three"}, {"D", "four"}}, std::move(key), bloom, "fac", {}};
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::BadRequest;
}

}  // namespace

TEST_CASE("add_question accepts a minimal valid item and bumps the version") {
    QuestionBank bank;
    auto next = add_question(bank, mcq("Q1"));
    CHECK(next.questions.size() == 1);
    CHECK(next.version == bank.version + 1);
    CHECK(next.subject == "GK");
}

TEST_CASE("add_question rejects bad items and leaves the bank unchanged") {
    const auto bank = add_question({}, mcq("Q1"));
    CHECK(code_of([&] { add_question(bank, mcq("Q2", "E")); }) == ErrorCode::InvalidChoiceSet);
    CHECK(code_of([&] { add_question(bank, mcq("Q1")); }) == ErrorCode::DuplicateId);
    auto blank = mcq("Q3");
    blank.stem = "  \t ";
    CHECK(code_of([&] { add_question(bank, blank); }) == ErrorCode::EmptyStem);
    auto three = mcq("Q4");
    three.choices.pop_back();
    CHECK(code_of([&] { add_question(bank, three); }) == ErrorCode::InvalidChoiceSet);
    auto tf = mcq("Q5", "T");
    tf.kind = QuestionKind::TrueFalse;
    CHECK(code_of([&] { add_question(bank, tf); }) == ErrorCode::InvalidChoiceSet);
    tf.choices = true_false_choices();
    CHECK(add_question(bank, tf).questions.size() == 2);
    auto other = mcq("Q6");
    other.subject = "MATH";
    CHECK(code_of([&] { add_question(bank, other); }) == ErrorCode::BadRequest);
    CHECK(bank.questions.size() == 1);
    CHECK(bank.version == 1);
}

TEST_CASE("importing the 50-item fixture and exporting it again") {
    const auto text = testing::read_text(kFixtures / "bank50.csv");
    const auto result = import_csv(text);
    CHECK(result.issues.empty());
    REQUIRE(result.bank.questions.size() == 50);
    CHECK(result.bank.subject == "GK");
    const auto exported = export_csv(result.bank);
    CHECK(exported == text);  // fixture is already in canonical form
    CHECK(export_csv(result.bank) == exported);
    CHECK(import_csv(exported).bank == result.bank);
}

TEST_CASE("header-only file gives an empty bank") {
    const auto r = import_csv(std::string(kQuestionCsvHeader) + "\n");
    CHECK(r.bank.questions.empty());
    CHECK(r.issues.empty());
    CHECK(export_csv(r.bank) == std::string(kQuestionCsvHeader) + "\n");
}

TEST_CASE("a bad header aborts the import") {
    CHECK(code_of([] { import_csv("id,subject,kind\nQ1,GK,MCQ\n"); }) == ErrorCode::MalformedHeader);
    CHECK(code_of([] { import_csv(""); }) == ErrorCode::MalformedHeader);
}

TEST_CASE("one bad row is isolated with its line number and reason") {
    std::string text(kQuestionCsvHeader);
    text += "\nQ1,GK,MCQ,s1,a,b,c,d,A,KNOWLEDGE\n"
            "Q2,GK,MCQ,s2,a,b,c,d,B,XX\n"
            "Q3,GK,TF,s3,True,False,,,T,EVALUATION\n"
            "Q4,GK,MCQ,\"s4, quoted\",a,b,c,d,D,SYNTHESIS\n";
    const auto r = import_csv(text);
    CHECK(r.bank.questions.size() == 3);
    REQUIRE(r.issues.size() == 1);
    CHECK(r.issues[0].line == 3);
    CHECK(r.issues[0].reason.rfind("UnknownBloom", 0) == 0);
}

TEST_CASE("per-row reasons") {
    std::string text(kQuestionCsvHeader);
    text += "\nQ1,GK,ESSAY,s,a,b,c,d,A,KNOWLEDGE\n"
            "Q2,GK,MCQ,s,a,b,c\n"
            "Q3,GK,MCQ,s,a,b,c,d,E,KNOWLEDGE\n"
            "Q4,GK,TF,s,True,False,x,,T,KNOWLEDGE\n"
            "Q5,GK,MCQ,,a,b,c,d,A,KNOWLEDGE\n"
            "Q6,GK,MCQ,s,a,b,c,d,A,KNOWLEDGE\n"
            "Q6,GK,MCQ,s,a,b,c,d,A,KNOWLEDGE\n"
            "Q7,MATH,MCQ,s,a,b,c,d,A,KNOWLEDGE\n";
    const auto r = import_csv(text);
    CHECK(r.bank.questions.size() == 1);
    REQUIRE(r.issues.size() == 7);
    const char* prefixes[] = {"UnknownKind", "MalformedRow", "InvalidChoiceSet", "InvalidChoiceSet",
                              "EmptyStem", "DuplicateId", "SubjectMismatch"};
    for (std::size_t i = 0; i < 7; ++i) {
        CAPTURE(r.issues[i].reason);
        CHECK(r.issues[i].line == i + 2 + (i >= 5 ? 1 : 0));
        CHECK(r.issues[i].reason.rfind(prefixes[i], 0) == 0);
    }
}

TEST_CASE("round trip property over random banks with awkward text") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "abc ,\"\n'xyz";
    auto text = [&](int max) {
        std::string s = "t";
        for (int i = 0, n = static_cast<int>(rng() % max); i < n; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
        return s;
    };
    for (int trial = 0; trial < 200; ++trial) {
        QuestionBank bank;
        for (int i = 0, n = static_cast<int>(rng() % 8); i < n; ++i) {
            Question q = mcq("Q" + std::to_string(i), std::string(1, "ABCD"[rng() % 4]), kAllBloom[rng() % 6]);
            q.stem = text(12);
            if (rng() % 3 == 0) {
                q.kind = QuestionKind::TrueFalse;
                q.choices = {{"T", text(5)}, {"F", text(5)}};
                q.correct_label = rng() % 2 ? "T" : "F";
            } else {
                for (auto& c : q.choices) c.text = text(6);
            }
            q.author.clear();
            bank = add_question(bank, q);
        }
        const auto back = import_csv(export_csv(bank));
        CHECK(back.issues.empty());
        CHECK(back.bank.questions == bank.questions);
        CHECK(back.bank.subject == bank.subject);
    }
}

TEST_CASE("random malformed rows are never stored") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> kinds{"MCQ", "TF", "mcq", "", "XX"};
    const std::vector<std::string> keys{"A", "B", "D", "E", "T", "F", "", "a"};
    const std::vector<std::string> blooms{"KNOWLEDGE", "EVALUATION", "knowledge", "", "XX"};
    const std::vector<std::string> texts{"", " ", "x", "two words"};
    for (int trial = 0; trial < 100; ++trial) {
        std::string csv_text(kQuestionCsvHeader);
        csv_text += "\n";
        for (int row = 0; row < 20; ++row) {
            csv_text += "Q" + std::to_string(rng() % 15) + ",GK," + kinds[rng() % kinds.size()] + "," +
                        texts[rng() % texts.size()];
            for (int c = 0; c < 4; ++c) csv_text += "," + texts[rng() % texts.size()];
            csv_text += "," + keys[rng() % keys.size()] + "," + blooms[rng() % blooms.size()] + "\n";
        }
        const auto r = import_csv(csv_text);
        for (const auto& q : r.bank.questions) CHECK_NOTHROW(validate(q));
        CHECK(r.bank.version == r.bank.questions.size());
        std::set<std::string> ids;
        for (const auto& q : r.bank.questions) CHECK(ids.insert(q.id).second);
    }
}

TEST_CASE("bloom and kind wire names") {
    for (Bloom b : kAllBloom) CHECK(parse_bloom(to_string(b)) == b);
    CHECK(to_string(Bloom::Knowledge) == "KNOWLEDGE");
    CHECK_FALSE(parse_bloom("XX"));
    CHECK(parse_question_kind("TF") == QuestionKind::TrueFalse);
    CHECK(parse_question_kind("MCQ") == QuestionKind::MultipleChoice);
}
