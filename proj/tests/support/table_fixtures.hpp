#pragma once

// Published evaluation summaries (three respondent groups plus the total)
// and the published descriptive and ANOVA values they should reproduce.

#include <array>
#include <string_view>

namespace eas::testing {

struct SummaryCell {
    int n;
    double mean;
    double sd;
    double se;
    double ci_low;
    double ci_high;
};

struct CriterionFixture {
    std::string_view name;
    std::array<SummaryCell, 4> rows;  // groups 1..3, then total
    double ss_between;
    double ss_within;
    double f;
    double p;
};

inline constexpr std::array<CriterionFixture, 6> kCriteria = {{
    {"Functionality",
     {{{30, 4.6, 0.35111, 0.0641, 4.4689, 4.7311},
       {10, 4.7, 0.2582, 0.08165, 4.5153, 4.8847},
       {10, 4.525, 0.43221, 0.13668, 4.2158, 4.8342},
       {50, 4.605, 0.35026, 0.04953, 4.5055, 4.7045}}},
     0.155, 5.856, 0.622, 0.541},
    {"Reliability",
     {{{30, 4.6111, 0.35106, 0.06409, 4.48, 4.7422},
       {10, 4.8333, 0.2357, 0.07454, 4.6647, 5.0019},
       {10, 4.6667, 0.3849, 0.12172, 4.3913, 4.942},
       {50, 4.6667, 0.34339, 0.04856, 4.5691, 4.7643}}},
     0.37, 5.407, 1.61, 0.211},
    {"Usability",
     {{{30, 4.6556, 0.33314, 0.06082, 4.5312, 4.78},
       {10, 4.7, 0.33148, 0.10482, 4.4629, 4.9371},
       {10, 4.5667, 0.31623, 0.1, 4.3405, 4.7929},
       {50, 4.6467, 0.32583, 0.04608, 4.5541, 4.7393}}},
     0.095, 5.107, 0.436, 0.649},
    {"Efficiency",
     {{{30, 4.45, 0.3961, 0.07232, 4.3021, 4.5979},
       {10, 4.65, 0.35746, 0.11304, 4.3943, 4.9057},
       {10, 4.4333, 0.37843, 0.11967, 4.1626, 4.704},
       {50, 4.4867, 0.38662, 0.05468, 4.3768, 4.5965}}},
     0.336, 6.989, 1.128, 0.332},
    {"Maintainability",
     {{{30, 4.4917, 0.39655, 0.0724, 4.3436, 4.6397},
       {10, 4.6, 0.35746, 0.11304, 4.3443, 4.8557},
       {10, 4.4, 0.4441, 0.14044, 4.0823, 4.7177},
       {50, 4.495, 0.39606, 0.05601, 4.3824, 4.6076}}},
     0.201, 7.485, 0.631, 0.537},
    {"Portability",
     {{{30, 4.5833, 0.3675, 0.0671, 4.4461, 4.7206},
       {10, 4.625, 0.13176, 0.04167, 4.5307, 4.7193},
       {10, 4.1, 0.39441, 0.12472, 3.8179, 4.3821},
       {50, 4.495, 0.38956, 0.05509, 4.3843, 4.6057}}},
     1.963, 5.473, 8.43, 0.001},
}};

/// Post-hoc p-values for Portability: (group 3 vs 1, group 3 vs 2, group 2 vs 1).
inline constexpr double kTukeyP31 = 0.001;
inline constexpr double kTukeyP32 = 0.003;
inline constexpr double kTukeyP21 = 0.940;

inline constexpr double kOverallMean = 4.56585;

}  // namespace eas::testing
