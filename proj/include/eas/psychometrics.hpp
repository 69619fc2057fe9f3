#pragma once

#include "eas/exam_session.hpp"
#include "eas/question_bank.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eas::psychometrics {

struct MatrixItem {
    std::string question_id;
    Bloom bloom = Bloom::Knowledge;

    bool operator==(const MatrixItem&) const = default;
};

/// Examinee x item table of dichotomous outcomes (1 = correct).
struct ResponseMatrix {
    std::string exam_id;
    std::string subject;
    std::vector<Examinee> examinees;
    std::vector<MatrixItem> items;
    std::vector<std::vector<std::uint8_t>> cells;

    std::size_t rows() const { return examinees.size(); }
    std::size_t columns() const { return items.size(); }
    int row_total(std::size_t row) const;
    int column_total(std::size_t column) const;
    std::size_t column_of(std::string_view question_id) const;  ///< throws UnknownItem

    bool operator==(const ResponseMatrix&) const = default;
};

/// Throws Error{InvalidMatrix} unless rectangular with 0/1 cells.
void validate(const ResponseMatrix& m);

/// (year_level, section, name) ascending, case-insensitive, then examinee_id.
bool canonical_less(const Examinee& a, const Examinee& b);

/// Returns the matrix with rows in canonical order.
ResponseMatrix canonical_order(ResponseMatrix m);

/// Builds the matrix from finalized results. Items missing from a result's
/// outcomes count as 0. Errors: UnknownExaminee, MixedExams.
ResponseMatrix tabulate(std::span<const TestResult> results, std::span<const Examinee> roster,
                        std::span<const MatrixItem> items, std::string subject = {});

/// Interpretation cut points. Defaults: difficulty <=0.25 / <=0.75 / above;
/// discrimination 0.20 / 0.30 / 0.40.
struct Bands {
    double difficult_max = 0.25;
    double average_max = 0.75;
    double marginal_min = 0.20;
    double reasonably_good_min = 0.30;
    double very_good_min = 0.40;
};

enum class DifficultyLevel { Difficult, Average, Easy };
enum class DiscriminationLevel { Poor, Marginal, ReasonablyGood, VeryGood };

std::string_view to_string(DifficultyLevel d);
std::string_view to_string(DiscriminationLevel d);

DifficultyLevel interpret_difficulty(double p, const Bands& bands = {});
DiscriminationLevel interpret_discrimination(double d, const Bands& bands = {});

struct DifficultyRecord {
    std::string question_id;
    int n_correct = 0;
    int n_total = 0;
    double p = 0.0;
    DifficultyLevel interpretation = DifficultyLevel::Difficult;

    bool operator==(const DifficultyRecord&) const = default;
};

struct DiscriminationRecord {
    std::string question_id;
    int upper_correct = 0;
    int lower_correct = 0;
    int group_size = 0;
    double d = 0.0;
    DiscriminationLevel interpretation = DiscriminationLevel::Poor;

    bool operator==(const DiscriminationRecord&) const = default;
};

inline constexpr double kKelleyFraction = 0.27;

struct GroupPartition {
    std::vector<std::string> upper;
    std::vector<std::string> lower;
    double fraction = kKelleyFraction;

    bool operator==(const GroupPartition&) const = default;
};

/// max(1, round(fraction * n)) with half-up rounding.
int group_size(std::size_t n, double fraction);

/// Errors: UnknownItem, EmptyMatrix.
DifficultyRecord difficulty(const ResponseMatrix& m, std::string_view question_id,
                            const Bands& bands = {});

/// Ranks by total descending, ties by examinee_id ascending.
/// Errors: TooFewExaminees, BadRequest (fraction outside (0, 1]).
GroupPartition partition_upper_lower(const ResponseMatrix& m, double fraction = kKelleyFraction);

/// Errors: UnknownItem, PartitionMismatch.
DiscriminationRecord discrimination(const ResponseMatrix& m, std::string_view question_id,
                                    const GroupPartition& partition, const Bands& bands = {});

struct BloomCounts {
    long n_correct = 0;
    long n_incorrect = 0;
    bool operator==(const BloomCounts&) const = default;
};

struct ItemRecord {
    std::string question_id;
    Bloom bloom = Bloom::Knowledge;
    DifficultyRecord difficulty;
    DiscriminationRecord discrimination;

    bool operator==(const ItemRecord&) const = default;
};

struct CohortKeys {
    std::vector<std::string> year_levels;  // distinct, sorted
    std::vector<std::string> sections;     // distinct, sorted
    std::string subject;

    bool operator==(const CohortKeys&) const = default;
};

struct ItemAnalysisReport {
    std::string exam_id;
    std::vector<ItemRecord> items;  // matrix column order
    GroupPartition partition;
    std::map<Bloom, BloomCounts> bloom_rollup;  // all six categories present
    CohortKeys cohort;

    bool operator==(const ItemAnalysisReport&) const = default;
};

/// The full pipeline. Pure function of the matrix and parameters.
ItemAnalysisReport analyze(const ResponseMatrix& m, double fraction = kKelleyFraction,
                           const Bands& bands = {});

/// Header `examinee_id,name,year_level,section,<question ids...>,total`.
std::string export_matrix_csv(const ResponseMatrix& m);

}  // namespace eas::psychometrics

namespace eas::psychometrics {

/// num/den rounded half away from zero to `decimals` places, exact integer
/// arithmetic; used for every displayed p and D.
std::string display_ratio(long long num, long long den, int decimals = 2);

}  // namespace eas::psychometrics
