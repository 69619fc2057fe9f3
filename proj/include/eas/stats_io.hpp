#pragma once

#include "eas/eval_stats.hpp"

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eas::stats {

inline constexpr std::string_view kSummaryCsvHeader = "criterion,group,n,mean,sd";
inline constexpr std::string_view kRatingsCsvHeader = "respondent_id,group,criterion,score";

/// One evaluation criterion (e.g. Functionality) with its respondent groups
/// in first-appearance order.
struct CriterionData {
    std::string criterion;
    std::vector<GroupSummary> groups;
    /// Present when the published total row was supplied in summary mode.
    std::optional<GroupSummary> total;
    /// Per-group observations in raw mode (respondent averages).
    std::vector<std::vector<double>> raw;

    bool raw_mode() const { return !raw.empty(); }
};

/// Reads either CSV schema, chosen by header. A summary row whose group is
/// "Total" is taken as the criterion's published total. Ratings rows are
/// averaged per respondent per criterion before grouping.
/// Errors: MalformedHeader, BadRequest (with line number).
std::vector<CriterionData> read_stats_csv(std::istream& in);

/// Per-criterion group rows plus a Total row, columns named after the
/// descriptive-statistics table.
std::string descriptives_csv(const std::vector<CriterionData>& data);

/// Between / Within / Total rows per criterion.
std::string anova_csv(const std::vector<CriterionData>& data);

/// Pairwise Tukey HSD rows per criterion.
std::string tukey_csv(const std::vector<CriterionData>& data);

inline constexpr std::string_view kDescriptivesHeader =
    "Software Criterion,Group,N,Mean,Std. Deviation,Std. Error,"
    "95% Confidence Interval for Mean Lower Bound,95% Confidence Interval for Mean Upper Bound,"
    "Minimum,Maximum";
inline constexpr std::string_view kAnovaHeader =
    "Software Criterion,Source,Sum of Squares,df,Mean Square,F,Sig.";
inline constexpr std::string_view kTukeyHeader =
    "Software Criterion,Group A,Group B,Mean Difference,Std. Error,q,Sig.";

}  // namespace eas::stats
