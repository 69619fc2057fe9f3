#pragma once

#include <cstdint>
#include <vector>

namespace eas::testing {

struct McEstimate {
    double q = 0.0;
    double p = 0.0;   // fraction of draws with Q > q
    double se = 0.0;  // binomial standard error of p
};

/// Simulates Q = (max - min of k standard normals) / sqrt(chi2_df / df)
/// `draws` times and estimates P(Q > q) for every q from the same draws.
std::vector<McEstimate> studentized_range_mc(const std::vector<double>& qs, int k, int df,
                                             std::uint64_t draws, std::uint64_t seed);

}  // namespace eas::testing
