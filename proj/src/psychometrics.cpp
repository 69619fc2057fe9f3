#include "eas/psychometrics.hpp"

#include "eas/csv.hpp"
#include "eas/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace eas::psychometrics {

int ResponseMatrix::row_total(std::size_t row) const {
    return std::accumulate(cells[row].begin(), cells[row].end(), 0);
}

int ResponseMatrix::column_total(std::size_t column) const {
    int total = 0;
    for (const auto& row : cells) total += row[column];
    return total;
}

std::size_t ResponseMatrix::column_of(std::string_view question_id) const {
    for (std::size_t j = 0; j < items.size(); ++j)
        if (items[j].question_id == question_id) return j;
    throw Error(ErrorCode::UnknownItem, "item " + std::string(question_id) + " is not in the matrix");
}

void validate(const ResponseMatrix& m) {
    if (m.cells.size() != m.examinees.size())
        throw Error(ErrorCode::InvalidMatrix, "row count does not match examinee list");
    for (const auto& row : m.cells) {
        if (row.size() != m.items.size())
            throw Error(ErrorCode::InvalidMatrix, "matrix is not rectangular");
        for (auto c : row)
            if (c > 1) throw Error(ErrorCode::InvalidMatrix, "cells must be 0 or 1");
    }
}

namespace {

int compare_ci(std::string_view a, std::string_view b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const int ca = std::tolower(static_cast<unsigned char>(a[i]));
        const int cb = std::tolower(static_cast<unsigned char>(b[i]));
        if (ca != cb) return ca < cb ? -1 : 1;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

}  // namespace

bool canonical_less(const Examinee& a, const Examinee& b) {
    if (int c = compare_ci(a.year_level, b.year_level)) return c < 0;
    if (int c = compare_ci(a.section, b.section)) return c < 0;
    if (int c = compare_ci(a.name, b.name)) return c < 0;
    return a.examinee_id < b.examinee_id;
}

ResponseMatrix canonical_order(ResponseMatrix m) {
    std::vector<std::size_t> order(m.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return canonical_less(m.examinees[a], m.examinees[b]);
    });
    ResponseMatrix out;
    out.exam_id = std::move(m.exam_id);
    out.subject = std::move(m.subject);
    out.items = std::move(m.items);
    for (auto i : order) {
        out.examinees.push_back(std::move(m.examinees[i]));
        out.cells.push_back(std::move(m.cells[i]));
    }
    return out;
}

ResponseMatrix tabulate(std::span<const TestResult> results, std::span<const Examinee> roster,
                        std::span<const MatrixItem> items, std::string subject) {
    std::unordered_map<std::string, const Examinee*> by_id;
    for (const auto& e : roster) by_id.emplace(e.examinee_id, &e);

    ResponseMatrix m;
    m.subject = std::move(subject);
    m.items.assign(items.begin(), items.end());
    std::set<std::string> seen;
    for (const auto& r : results) {
        if (m.exam_id.empty()) m.exam_id = r.exam_id;
        if (r.exam_id != m.exam_id)
            throw Error(ErrorCode::MixedExams,
                        "results from exams " + m.exam_id + " and " + r.exam_id + " mixed");
        auto e = by_id.find(r.examinee_id);
        if (e == by_id.end())
            throw Error(ErrorCode::UnknownExaminee,
                        "result for " + r.examinee_id + " has no roster entry");
        if (!seen.insert(r.examinee_id).second)
            throw Error(ErrorCode::BadRequest, "two results for examinee " + r.examinee_id);
        std::vector<std::uint8_t> row;
        row.reserve(items.size());
        for (const auto& item : items) {
            auto o = r.item_outcomes.find(item.question_id);
            row.push_back(o != r.item_outcomes.end() && o->second == 1 ? 1 : 0);
        }
        m.examinees.push_back(*e->second);
        m.cells.push_back(std::move(row));
    }
    return canonical_order(std::move(m));
}

std::string_view to_string(DifficultyLevel d) {
    switch (d) {
        case DifficultyLevel::Difficult: return "Difficult";
        case DifficultyLevel::Average: return "Average";
        case DifficultyLevel::Easy: return "Easy";
    }
    return "Difficult";
}

std::string_view to_string(DiscriminationLevel d) {
    switch (d) {
        case DiscriminationLevel::Poor: return "Poor";
        case DiscriminationLevel::Marginal: return "Marginal";
        case DiscriminationLevel::ReasonablyGood: return "ReasonablyGood";
        case DiscriminationLevel::VeryGood: return "VeryGood";
    }
    return "Poor";
}

DifficultyLevel interpret_difficulty(double p, const Bands& bands) {
    if (p <= bands.difficult_max) return DifficultyLevel::Difficult;
    if (p <= bands.average_max) return DifficultyLevel::Average;
    return DifficultyLevel::Easy;
}

DiscriminationLevel interpret_discrimination(double d, const Bands& bands) {
    if (d >= bands.very_good_min) return DiscriminationLevel::VeryGood;
    if (d >= bands.reasonably_good_min) return DiscriminationLevel::ReasonablyGood;
    if (d >= bands.marginal_min) return DiscriminationLevel::Marginal;
    return DiscriminationLevel::Poor;
}

int group_size(std::size_t n, double fraction) {
    const auto rounded = static_cast<int>(std::floor(fraction * static_cast<double>(n) + 0.5 + 1e-9));
    return std::max(1, rounded);
}

DifficultyRecord difficulty(const ResponseMatrix& m, std::string_view question_id,
                            const Bands& bands) {
    const auto col = m.column_of(question_id);
    if (m.rows() == 0) throw Error(ErrorCode::EmptyMatrix, "no examinees in the matrix");
    DifficultyRecord r;
    r.question_id = std::string(question_id);
    r.n_correct = m.column_total(col);
    r.n_total = static_cast<int>(m.rows());
    r.p = static_cast<double>(r.n_correct) / static_cast<double>(r.n_total);
    r.interpretation = interpret_difficulty(r.p, bands);
    return r;
}

GroupPartition partition_upper_lower(const ResponseMatrix& m, double fraction) {
    if (m.rows() < 2)
        throw Error(ErrorCode::TooFewExaminees, "upper/lower groups need at least two examinees");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw Error(ErrorCode::BadRequest, "group fraction must lie in (0, 1]");

    std::vector<std::pair<int, const std::string*>> ranked;
    ranked.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        ranked.emplace_back(m.row_total(i), &m.examinees[i].examinee_id);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return *a.second < *b.second;
    });

    const auto size = static_cast<std::size_t>(group_size(m.rows(), fraction));
    GroupPartition g;
    g.fraction = fraction;
    for (std::size_t i = 0; i < size; ++i) g.upper.push_back(*ranked[i].second);
    for (std::size_t i = ranked.size() - size; i < ranked.size(); ++i)
        g.lower.push_back(*ranked[i].second);
    return g;
}

DiscriminationRecord discrimination(const ResponseMatrix& m, std::string_view question_id,
                                    const GroupPartition& partition, const Bands& bands) {
    const auto col = m.column_of(question_id);
    const auto size = partition.upper.size();
    if (size == 0 || partition.lower.size() != size ||
        static_cast<int>(size) != group_size(m.rows(), partition.fraction))
        throw Error(ErrorCode::PartitionMismatch, "partition sizes do not fit this matrix");

    std::unordered_map<std::string_view, std::size_t> row_of;
    for (std::size_t i = 0; i < m.rows(); ++i) row_of.emplace(m.examinees[i].examinee_id, i);
    auto count = [&](const std::vector<std::string>& ids) {
        int correct = 0;
        for (const auto& id : ids) {
            auto r = row_of.find(id);
            if (r == row_of.end())
                throw Error(ErrorCode::PartitionMismatch,
                            "partition member " + id + " is not in the matrix");
            correct += m.cells[r->second][col];
        }
        return correct;
    };

    DiscriminationRecord r;
    r.question_id = std::string(question_id);
    r.upper_correct = count(partition.upper);
    r.lower_correct = count(partition.lower);
    r.group_size = static_cast<int>(size);
    r.d = static_cast<double>(r.upper_correct - r.lower_correct) / static_cast<double>(size);
    r.interpretation = interpret_discrimination(r.d, bands);
    return r;
}

ItemAnalysisReport analyze(const ResponseMatrix& input, double fraction, const Bands& bands) {
    validate(input);
    const ResponseMatrix m = canonical_order(input);

    ItemAnalysisReport report;
    report.exam_id = m.exam_id;
    report.partition = partition_upper_lower(m, fraction);
    for (Bloom b : kAllBloom) report.bloom_rollup[b] = {};

    for (const auto& item : m.items) {
        ItemRecord rec;
        rec.question_id = item.question_id;
        rec.bloom = item.bloom;
        rec.difficulty = difficulty(m, item.question_id, bands);
        rec.discrimination = discrimination(m, item.question_id, report.partition, bands);
        auto& roll = report.bloom_rollup[item.bloom];
        roll.n_correct += rec.difficulty.n_correct;
        roll.n_incorrect += rec.difficulty.n_total - rec.difficulty.n_correct;
        report.items.push_back(std::move(rec));
    }

    std::set<std::string> years, sections;
    for (const auto& e : m.examinees) {
        years.insert(e.year_level);
        sections.insert(e.section);
    }
    report.cohort.year_levels.assign(years.begin(), years.end());
    report.cohort.sections.assign(sections.begin(), sections.end());
    report.cohort.subject = m.subject;
    return report;
}

std::string export_matrix_csv(const ResponseMatrix& input) {
    validate(input);
    const ResponseMatrix m = canonical_order(input);
    std::vector<std::string> header{"examinee_id", "name", "year_level", "section"};
    for (const auto& item : m.items) header.push_back(item.question_id);
    header.emplace_back("total");
    std::string out = csv::format_row(header);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto& e = m.examinees[i];
        std::vector<std::string> row{e.examinee_id, e.name, e.year_level, e.section};
        for (auto c : m.cells[i]) row.push_back(c ? "1" : "0");
        row.push_back(std::to_string(m.row_total(i)));
        out += csv::format_row(row);
    }
    return out;
}

}  // namespace eas::psychometrics

namespace eas::psychometrics {

std::string display_ratio(long long num, long long den, int decimals) {
    if (den == 0) throw Error(ErrorCode::BadRequest, "zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const bool negative = num < 0;
    const long long mag = negative ? -num : num;
    long long scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    const long long scaled = (2 * mag * scale + den) / (2 * den);
    std::string digits = std::to_string(scaled / scale);
    if (decimals > 0) {
        std::string frac = std::to_string(scaled % scale);
        frac.insert(0, static_cast<std::size_t>(decimals) - frac.size(), '0');
        digits += "." + frac;
    }
    return (negative && scaled != 0 ? "-" : "") + digits;
}

}  // namespace eas::psychometrics
