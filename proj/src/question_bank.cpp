#include "eas/question_bank.hpp"

#include "eas/csv.hpp"
#include "eas/error.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace eas {

std::string_view to_string(Bloom b) {
    switch (b) {
        case Bloom::Knowledge: return "KNOWLEDGE";
        case Bloom::Comprehension: return "COMPREHENSION";
        case Bloom::Application: return "APPLICATION";
        case Bloom::Analysis: return "ANALYSIS";
        case Bloom::Synthesis: return "SYNTHESIS";
        case Bloom::Evaluation: return "EVALUATION";
    }
    return "KNOWLEDGE";
}

std::optional<Bloom> parse_bloom(std::string_view s) {
    for (Bloom b : kAllBloom)
        if (to_string(b) == s) return b;
    return std::nullopt;
}

std::string_view to_string(QuestionKind k) {
    return k == QuestionKind::TrueFalse ? "TF" : "MCQ";
}

std::optional<QuestionKind> parse_question_kind(std::string_view s) {
    if (s == "MCQ") return QuestionKind::MultipleChoice;
    if (s == "TF") return QuestionKind::TrueFalse;
    return std::nullopt;
}

std::vector<Choice> true_false_choices() { return {{"T", "True"}, {"F", "False"}}; }

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

void validate(const Question& q) {
    if (blank(q.id)) throw Error(ErrorCode::BadRequest, "question id is empty");
    if (blank(q.stem)) throw Error(ErrorCode::EmptyStem, "question " + q.id + " has an empty stem");

    const std::vector<std::string> expected =
        q.kind == QuestionKind::MultipleChoice ? std::vector<std::string>{"A", "B", "C", "D"}
                                               : std::vector<std::string>{"T", "F"};
    if (q.choices.size() != expected.size())
        throw Error(ErrorCode::InvalidChoiceSet,
                    "question " + q.id + " needs exactly " + std::to_string(expected.size()) +
                        " choices");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (q.choices[i].label != expected[i])
            throw Error(ErrorCode::InvalidChoiceSet,
                        "question " + q.id + " choice " + std::to_string(i + 1) +
                            " must be labelled " + expected[i]);
        if (q.kind == QuestionKind::MultipleChoice && blank(q.choices[i].text))
            throw Error(ErrorCode::InvalidChoiceSet,
                        "question " + q.id + " choice " + expected[i] + " has no text");
    }
    if (std::find(expected.begin(), expected.end(), q.correct_label) == expected.end())
        throw Error(ErrorCode::InvalidChoiceSet,
                    "question " + q.id + " answer key '" + q.correct_label +
                        "' is not one of its choice labels");
}

const Question* QuestionBank::find(std::string_view id) const {
    auto it = std::find_if(questions.begin(), questions.end(),
                           [&](const Question& q) { return q.id == id; });
    return it == questions.end() ? nullptr : &*it;
}

QuestionBank add_question(QuestionBank bank, Question q) {
    validate(q);
    if (bank.find(q.id)) throw Error(ErrorCode::DuplicateId, "duplicate question id " + q.id);
    if (bank.subject.empty() && bank.questions.empty()) bank.subject = q.subject;
    if (q.subject != bank.subject)
        throw Error(ErrorCode::BadRequest,
                    "question " + q.id + " has subject '" + q.subject + "' but the bank holds '" +
                        bank.subject + "'");
    bank.questions.push_back(std::move(q));
    ++bank.version;
    return bank;
}

namespace {

constexpr std::size_t kColumns = 10;

std::vector<std::string> header_fields() {
    std::vector<std::string> out;
    std::string_view rest = kQuestionCsvHeader;
    while (!rest.empty()) {
        auto comma = rest.find(',');
        out.emplace_back(rest.substr(0, comma));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

std::string issue(ErrorCode code, const std::string& detail) {
    return std::string(to_string(code)) + ": " + detail;
}

}  // namespace

ImportResult import_csv(std::istream& in, const ImportOptions& options) {
    csv::Reader reader(in);
    auto head = reader.next();
    if (!head || head->fields != header_fields())
        throw Error(ErrorCode::MalformedHeader,
                    "expected header '" + std::string(kQuestionCsvHeader) + "'");

    ImportResult result{options.base, {}};
    while (auto rec = reader.next()) {
        auto& f = rec->fields;
        auto reject = [&](std::string reason) {
            result.issues.push_back({rec->line, std::move(reason)});
        };
        if (f.size() == 1 && f[0].empty()) continue;  // blank line
        if (reader.last_unterminated()) {
            reject("MalformedRow: unterminated quoted field");
            continue;
        }
        if (f.size() != kColumns) {
            reject("MalformedRow: expected 10 fields, found " + std::to_string(f.size()));
            continue;
        }
        auto kind = parse_question_kind(f[2]);
        if (!kind) {
            reject("UnknownKind: '" + f[2] + "'");
            continue;
        }
        auto bloom = parse_bloom(f[9]);
        if (!bloom) {
            reject("UnknownBloom: '" + f[9] + "'");
            continue;
        }
        Question q;
        q.id = f[0];
        q.subject = f[1];
        q.kind = *kind;
        q.stem = f[3];
        q.correct_label = f[8];
        q.bloom = *bloom;
        q.author = options.author;
        q.created_at = options.created_at;
        if (q.kind == QuestionKind::MultipleChoice) {
            q.choices = {{"A", f[4]}, {"B", f[5]}, {"C", f[6]}, {"D", f[7]}};
        } else {
            if (!f[6].empty() || !f[7].empty()) {
                reject(issue(ErrorCode::InvalidChoiceSet,
                             "true/false row must leave choice_c and choice_d empty"));
                continue;
            }
            q.choices = {{"T", blank(f[4]) ? "True" : f[4]}, {"F", blank(f[5]) ? "False" : f[5]}};
        }
        try {
            result.bank = add_question(result.bank, std::move(q));  // copy: a throw keeps the bank
        } catch (const Error& e) {
            reject(e.code() == ErrorCode::BadRequest && !blank(f[0])
                       ? "SubjectMismatch: " + std::string(e.what())
                       : issue(e.code(), e.what()));
        }
    }
    return result;
}

ImportResult import_csv(std::string_view text, const ImportOptions& options) {
    std::istringstream in{std::string(text)};
    return import_csv(in, options);
}

std::string export_csv(const QuestionBank& bank) {
    std::string out(kQuestionCsvHeader);
    out.push_back('\n');
    for (const auto& q : bank.questions) {
        std::vector<std::string> row{q.id, q.subject, std::string(to_string(q.kind)), q.stem};
        for (std::size_t i = 0; i < 4; ++i)
            row.push_back(i < q.choices.size() ? q.choices[i].text : std::string{});
        row.push_back(q.correct_label);
        row.emplace_back(to_string(q.bloom));
        out += csv::format_row(row);
    }
    return out;
}

}  // namespace eas
