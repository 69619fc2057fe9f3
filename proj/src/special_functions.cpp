#include "eas/special_functions.hpp"

#include "eas/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace eas::stats::special {

namespace {

// Continued fraction for I_x(a, b); converges quickly for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

struct GaussLegendre20 {
    std::array<double, 20> nodes{};
    std::array<double, 20> weights{};

    GaussLegendre20() {
        constexpr int n = 20;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::fabs(dx) < 1e-16) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

const GaussLegendre20& gauss_legendre() {
    static const GaussLegendre20 rule;
    return rule;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, int panels) {
    const auto& rule = gauss_legendre();
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width;
        double panel = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            panel += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
        total += 0.5 * width * panel;
    }
    return total;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0))
        throw Error(ErrorCode::BadRequest, "incomplete beta argument out of domain");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw Error(ErrorCode::BadRequest, "t distribution needs df > 0");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t > 0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::BadRequest, "quantile needs p in (0, 1)");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -student_t_quantile(1.0 - p, df);
    double lo = 0.0;
    double hi = 1.0;
    while (student_t_cdf(hi, df) < p) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, df) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double f_sf(double f, double df1, double df2) {
    if (!(df1 > 0.0) || !(df2 > 0.0)) throw Error(ErrorCode::BadRequest, "F distribution needs df > 0");
    if (std::isnan(f)) throw Error(ErrorCode::BadRequest, "F statistic is NaN");
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

double f_cdf(double f, double df1, double df2) { return 1.0 - f_sf(f, df1, df2); }

double normal_range_cdf(double w, int k) {
    if (w <= 0.0) return 0.0;
    if (k < 2) throw Error(ErrorCode::BadRequest, "range needs at least two draws");
    // k * integral phi(z) [Phi(z) - Phi(z - w)]^(k-1) dz; phi is negligible beyond |z| = 9.
    auto integrand = [&](double z) {
        const double inside = normal_cdf(z) - normal_cdf(z - w);
        return normal_pdf(z) * std::pow(inside, k - 1);
    };
    const double value = k * integrate(integrand, -9.0, 9.0, 36);
    return std::clamp(value, 0.0, 1.0);
}

double studentized_range_sf(double q, int k, double df) {
    if (k < 2) throw Error(ErrorCode::BadRequest, "studentized range needs k >= 2");
    if (!(df > 0.0)) throw Error(ErrorCode::BadRequest, "studentized range needs df > 0");
    if (std::isnan(q)) throw Error(ErrorCode::BadRequest, "q is NaN");
    if (q <= 0.0) return 1.0;
    if (std::isinf(q)) return 0.0;

    // Density of s = sqrt(chi2_df / df):
    //   2 (df/2)^(df/2) / Gamma(df/2) * s^(df-1) * exp(-df s^2 / 2)
    const double half = df / 2.0;
    const double log_norm = std::log(2.0) + half * std::log(half) - std::lgamma(half);
    auto density = [&](double s) {
        if (s <= 0.0) return df < 1.0 ? 0.0 : (df == 1.0 ? std::exp(log_norm) : 0.0);
        return std::exp(log_norm + (df - 1.0) * std::log(s) - half * s * s);
    };
    auto integrand = [&](double s) {
        const double dens = density(s);
        if (dens < 1e-300) return 0.0;
        return dens * (1.0 - normal_range_cdf(q * s, k));
    };

    // s concentrates around 1 with spread ~ 1/sqrt(2 df).
    const double spread = 1.0 / std::sqrt(2.0 * df);
    const double lo = std::max(0.0, 1.0 - 14.0 * spread);
    const double hi = 1.0 + 14.0 * spread + (df < 4.0 ? 6.0 : 0.0);
    const double value = integrate(integrand, lo, hi, 48);
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace eas::stats::special
