#pragma once

#include "eas/time_util.hpp"

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eas {

enum class Bloom { Knowledge, Comprehension, Application, Analysis, Synthesis, Evaluation };

inline constexpr std::array<Bloom, 6> kAllBloom = {Bloom::Knowledge,   Bloom::Comprehension,
                                                   Bloom::Application, Bloom::Analysis,
                                                   Bloom::Synthesis,   Bloom::Evaluation};

/// Upper-case wire names: KNOWLEDGE, COMPREHENSION, ...
std::string_view to_string(Bloom b);
std::optional<Bloom> parse_bloom(std::string_view s);

enum class QuestionKind { MultipleChoice, TrueFalse };

/// Wire names: MCQ, TF
std::string_view to_string(QuestionKind k);
std::optional<QuestionKind> parse_question_kind(std::string_view s);

struct Choice {
    std::string label;
    std::string text;

    bool operator==(const Choice&) const = default;
};

/// An auto-scorable item. Multiple choice items carry exactly four choices
/// labelled A-D; true/false items carry T and F.
struct Question {
    std::string id;
    std::string subject;
    QuestionKind kind = QuestionKind::MultipleChoice;
    std::string stem;
    std::vector<Choice> choices;
    std::string correct_label;
    Bloom bloom = Bloom::Knowledge;
    std::string author;
    Timestamp created_at{};

    bool operator==(const Question&) const = default;
};

/// Throws Error{EmptyStem | InvalidChoiceSet | BadRequest} for the first
/// violated invariant.
void validate(const Question& q);

struct QuestionBank {
    std::string subject;
    std::vector<Question> questions;
    std::uint64_t version = 0;

    const Question* find(std::string_view id) const;
    std::size_t size() const { return questions.size(); }

    bool operator==(const QuestionBank&) const = default;
};

/// Returns a copy of `bank` with `q` appended and the version bumped.
/// An empty bank with no subject adopts the subject of its first question.
/// Errors: DuplicateId, InvalidChoiceSet, EmptyStem, BadRequest (subject).
QuestionBank add_question(QuestionBank bank, Question q);

inline constexpr std::string_view kQuestionCsvHeader =
    "id,subject,kind,stem,choice_a,choice_b,choice_c,choice_d,correct,bloom";

struct ImportIssue {
    std::size_t line = 0;
    std::string reason;  ///< a stable code such as UnknownBloom, followed by detail
    bool operator==(const ImportIssue&) const = default;
};

struct ImportResult {
    QuestionBank bank;
    std::vector<ImportIssue> issues;
};

struct ImportOptions {
    std::string author;
    Timestamp created_at{};
    /// Rows are added onto this bank, so ids clashing with it are reported
    /// per line like any other bad row.
    QuestionBank base{};
};

/// Reads the question CSV. A bad header throws Error{MalformedHeader}; each
/// bad row is reported and skipped.
ImportResult import_csv(std::istream& in, const ImportOptions& options = {});
ImportResult import_csv(std::string_view text, const ImportOptions& options = {});

/// Deterministic; author and created_at are not part of the interchange format.
std::string export_csv(const QuestionBank& bank);

/// Canonical choices for a true/false item.
std::vector<Choice> true_false_choices();

}  // namespace eas
