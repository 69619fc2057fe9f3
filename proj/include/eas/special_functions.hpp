#pragma once

#include <functional>

/// Distribution functions needed by the evaluation statistics, built on the
/// regularized incomplete beta function and Gauss-Legendre quadrature.
namespace eas::stats::special {

/// I_x(a, b), a > 0, b > 0, x in [0, 1]. Continued fraction (modified Lentz),
/// relative accuracy ~1e-14.
double regularized_incomplete_beta(double a, double b, double x);

double normal_cdf(double z);
double normal_pdf(double z);

/// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// Inverse of student_t_cdf by bisection; |cdf(result) - p| < 1e-12.
double student_t_quantile(double p, double df);

/// P(F > f) for the F distribution with (df1, df2) degrees of freedom.
double f_sf(double f, double df1, double df2);
double f_cdf(double f, double df1, double df2);

/// P(R <= w) for the range of k standard normal draws.
double normal_range_cdf(double w, int k);

/// P(Q > q) for the studentized range with k groups and df degrees of
/// freedom. Outer integral over the density of s = sqrt(chi2_df / df),
/// inner integral over the range; absolute error well under 1e-6.
double studentized_range_sf(double q, int k, double df);

/// Composite Gauss-Legendre integration of f over [a, b] with `panels`
/// sub-intervals of 20 nodes each.
double integrate(const std::function<double(double)>& f, double a, double b, int panels);

}  // namespace eas::stats::special
