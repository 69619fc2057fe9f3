#include "eas/eval_stats.hpp"

#include "eas/error.hpp"
#include "eas/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace eas::stats {

namespace {

DescriptiveRow interval(int n, double mean, double sd) {
    DescriptiveRow row;
    row.n = n;
    row.mean = mean;
    row.sd = sd;
    row.se = sd / std::sqrt(static_cast<double>(n));
    const double t = special::student_t_quantile(0.975, n - 1.0);
    row.ci_low = mean - t * row.se;
    row.ci_high = mean + t * row.se;
    return row;
}

double mean_of(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double squared_deviations(std::span<const double> xs, double centre) {
    double ss = 0.0;
    for (double x : xs) ss += (x - centre) * (x - centre);
    return ss;
}

void finish(AnovaRow& row) {
    row.ms_between = row.ss_between / row.df_between;
    row.ms_within = row.ss_within / row.df_within;
    if (row.ss_within == 0.0) {
        row.degenerate_within = true;
        if (row.ss_between > 0.0) {
            row.f = std::numeric_limits<double>::infinity();
            row.p = 0.0;
        } else {
            row.f = 0.0;
            row.p = 1.0;
        }
        return;
    }
    row.f = row.ms_between / row.ms_within;
    row.p = special::f_sf(row.f, row.df_between, row.df_within);
}

}  // namespace

DescriptiveRow describe(std::span<const double> samples) {
    if (samples.size() < 2)
        throw Error(ErrorCode::TooFewSamples, "descriptive statistics need at least two samples");
    const double mean = mean_of(samples);
    const double sd = std::sqrt(squared_deviations(samples, mean) / (samples.size() - 1.0));
    auto row = interval(static_cast<int>(samples.size()), mean, sd);
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    row.min = *lo;
    row.max = *hi;
    return row;
}

DescriptiveRow describe_from_summary(int n, double mean, double sd) {
    if (n < 2 || !(sd >= 0.0) || !std::isfinite(mean) || !std::isfinite(sd))
        throw Error(ErrorCode::InvalidSummary, "summary needs n >= 2, finite mean and sd >= 0");
    return interval(n, mean, sd);
}

GroupSummary summarize(std::string label, std::span<const double> samples) {
    if (samples.empty()) throw Error(ErrorCode::TooFewSamples, "group " + label + " is empty");
    const double mean = mean_of(samples);
    const double sd = samples.size() > 1
                          ? std::sqrt(squared_deviations(samples, mean) / (samples.size() - 1.0))
                          : 0.0;
    return {std::move(label), static_cast<int>(samples.size()), mean, sd};
}

GroupSummary combine(std::span<const GroupSummary> groups, std::string label) {
    if (groups.empty()) throw Error(ErrorCode::TooFewGroups, "nothing to combine");
    int n = 0;
    double weighted = 0.0;
    for (const auto& g : groups) {
        n += g.n;
        weighted += g.n * g.mean;
    }
    const double grand = weighted / n;
    double ss = 0.0;
    for (const auto& g : groups)
        ss += (g.n - 1.0) * g.sd * g.sd + g.n * (g.mean - grand) * (g.mean - grand);
    return {std::move(label), n, grand, n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

AnovaRow one_way_anova_from_summary(std::span<const GroupSummary> groups) {
    if (groups.size() < 2) throw Error(ErrorCode::TooFewGroups, "ANOVA needs at least two groups");
    int n = 0;
    double weighted = 0.0;
    for (const auto& g : groups) {
        if (g.n < 2 || !(g.sd >= 0.0))
            throw Error(ErrorCode::InvalidSummary,
                        "group " + g.group_label + " needs n >= 2 and sd >= 0");
        n += g.n;
        weighted += g.n * g.mean;
    }
    const double grand = weighted / n;
    AnovaRow row;
    for (const auto& g : groups) {
        row.ss_between += g.n * (g.mean - grand) * (g.mean - grand);
        row.ss_within += (g.n - 1.0) * g.sd * g.sd;
    }
    row.ss_total = row.ss_between + row.ss_within;
    row.df_between = static_cast<int>(groups.size()) - 1;
    row.df_within = n - static_cast<int>(groups.size());
    row.df_total = n - 1;
    finish(row);
    return row;
}

AnovaRow one_way_anova(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw Error(ErrorCode::TooFewGroups, "ANOVA needs at least two groups");
    std::vector<double> all;
    for (const auto& g : groups) {
        if (g.size() < 2)
            throw Error(ErrorCode::InvalidSummary, "each ANOVA group needs at least two observations");
        all.insert(all.end(), g.begin(), g.end());
    }
    const double grand = mean_of(all);
    AnovaRow row;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        row.ss_between += g.size() * (m - grand) * (m - grand);
        row.ss_within += squared_deviations(g, m);
    }
    row.ss_total = squared_deviations(all, grand);
    row.df_between = static_cast<int>(groups.size()) - 1;
    row.df_within = static_cast<int>(all.size() - groups.size());
    row.df_total = static_cast<int>(all.size()) - 1;
    finish(row);
    return row;
}

std::vector<TukeyPair> tukey_hsd(std::span<const GroupSummary> groups, double ms_within,
                                 double df_within) {
    if (groups.size() < 2) throw Error(ErrorCode::TooFewGroups, "Tukey HSD needs at least two groups");
    if (!(ms_within > 0.0))
        throw Error(ErrorCode::DegenerateWithin, "Tukey HSD needs positive within-group mean square");
    const int k = static_cast<int>(groups.size());
    std::vector<TukeyPair> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            const auto& a = groups[i];
            const auto& b = groups[j];
            TukeyPair pair;
            pair.group_a = a.group_label;
            pair.group_b = b.group_label;
            pair.diff = a.mean - b.mean;
            pair.se = std::sqrt(ms_within / 2.0 * (1.0 / a.n + 1.0 / b.n));
            pair.q = std::fabs(pair.diff) / pair.se;
            pair.p = special::studentized_range_sf(pair.q, k, df_within);
            out.push_back(std::move(pair));
        }
    }
    return out;
}

std::string_view to_string(Rating r) {
    switch (r) {
        case Rating::Poor: return "Poor";
        case Rating::Fair: return "Fair";
        case Rating::Good: return "Good";
        case Rating::VeryGood: return "Very Good";
        case Rating::Excellent: return "Excellent";
    }
    return "Poor";
}

Rating likert_interpret(double mean) {
    if (!(mean >= 1.0 && mean <= 5.0))
        throw Error(ErrorCode::OutOfScale, "rating mean must lie in [1, 5]");
    if (mean <= 1.50) return Rating::Poor;
    if (mean <= 2.50) return Rating::Fair;
    if (mean <= 3.50) return Rating::Good;
    if (mean <= 4.50) return Rating::VeryGood;
    return Rating::Excellent;
}

double overall_mean(std::span<const double> criterion_totals) {
    if (criterion_totals.size() != 6)
        throw Error(ErrorCode::WrongArity, "overall mean takes exactly six criterion totals");
    return round_half_up(mean_of(criterion_totals), 5);
}

double round_half_up(double value, int decimals) {
    // Go through the shortest decimal text so 4.565849999999 (binary noise
    // around 4.56585) is treated as 4.56585.
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", value);
    const double clean = std::strtod(buf, nullptr);
    const double scale = std::pow(10.0, decimals);
    const double scaled = clean * scale;
    const double rounded = std::floor(std::fabs(scaled) + 0.5 + 1e-9) * (scaled < 0 ? -1 : 1);
    return rounded / scale;
}

}  // namespace eas::stats
