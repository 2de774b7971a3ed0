#pragma once

namespace podtpi::special {

double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b) together with its complement,
/// each computed from the tail where the continued fraction converges, so
/// that both are accurate when the other is close to 1.
struct IncompleteBeta {
    double lower;  // I_x(a, b)
    double upper;  // 1 - I_x(a, b)
};

IncompleteBeta incomplete_beta(double a, double b, double x);

inline double beta_cdf(double x, double a, double b) { return incomplete_beta(a, b, x).lower; }
inline double beta_sf(double x, double a, double b) { return incomplete_beta(a, b, x).upper; }

/// Probability mass of Beta(a, b) on [lo, hi], taken as the difference of
/// whichever tail is smaller at the interval.
double beta_interval_mass(double a, double b, double lo, double hi);

}  // namespace podtpi::special
