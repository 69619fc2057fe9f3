#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eas::stats {

struct GroupSummary {
    std::string group_label;
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;
};

struct DescriptiveRow {
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<double> min;  // raw-data mode only
    std::optional<double> max;
};

/// Sample statistics with a two-sided 95% Student-t interval.
/// Errors: TooFewSamples (n < 2).
DescriptiveRow describe(std::span<const double> samples);

/// Same interval from published (n, mean, sd). Errors: InvalidSummary.
DescriptiveRow describe_from_summary(int n, double mean, double sd);

GroupSummary summarize(std::string label, std::span<const double> samples);

/// Pools group summaries into one (n = sum, mean = weighted, sd from the
/// total sum of squares).
GroupSummary combine(std::span<const GroupSummary> groups, std::string label = "Total");

struct AnovaRow {
    double ss_between = 0.0;
    double ss_within = 0.0;
    double ss_total = 0.0;
    int df_between = 0;
    int df_within = 0;
    int df_total = 0;
    double ms_between = 0.0;
    double ms_within = 0.0;
    double f = 0.0;  ///< +infinity when ss_within == 0 < ss_between
    double p = 1.0;
    bool degenerate_within = false;
};

/// Errors: TooFewGroups (k < 2), InvalidSummary (a group with n < 2).
/// Zero within-group variance is reported through degenerate_within.
AnovaRow one_way_anova_from_summary(std::span<const GroupSummary> groups);
AnovaRow one_way_anova(std::span<const std::vector<double>> groups);

struct TukeyPair {
    std::string group_a;
    std::string group_b;
    double diff = 0.0;  ///< mean_a - mean_b
    double se = 0.0;    ///< sqrt(ms_within / 2 * (1/n_a + 1/n_b))
    double q = 0.0;
    double p = 1.0;
};

/// One entry per unordered pair (i < j), a = group i.
/// Errors: TooFewGroups, DegenerateWithin (ms_within <= 0).
std::vector<TukeyPair> tukey_hsd(std::span<const GroupSummary> groups, double ms_within,
                                 double df_within);

enum class Rating { Poor, Fair, Good, VeryGood, Excellent };
std::string_view to_string(Rating r);

/// 1.00-1.50 Poor, 1.51-2.50 Fair, 2.51-3.50 Good (3.01-3.50 fills the gap
/// in the published scale), 3.51-4.50 Very Good, 4.51-5.00 Excellent.
/// Each band includes its upper end. Errors: OutOfScale.
Rating likert_interpret(double mean);

/// Plain average of the six per-criterion totals. Errors: WrongArity.
double overall_mean(std::span<const double> criterion_totals);

/// Half-up rounding to a number of decimals, on the decimal representation.
double round_half_up(double value, int decimals);

}  // namespace eas::stats
