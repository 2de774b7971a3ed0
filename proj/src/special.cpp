#include "podtpi/special.hpp"

#include <cmath>
#include <limits>

#include "podtpi/error.hpp"

namespace podtpi::special {

namespace {

constexpr int kMaxIter = 10000;
constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
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
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    fail(ErrorKind::kNumerical, "incomplete beta continued fraction did not converge");
}

}  // namespace

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

IncompleteBeta incomplete_beta(double a, double b, double x) {
    require(a > 0.0 && b > 0.0, "incomplete beta requires a, b > 0");
    require(x >= 0.0 && x <= 1.0, "incomplete beta requires x in [0,1]");
    if (x == 0.0) return {0.0, 1.0};
    if (x == 1.0) return {1.0, 0.0};
    const double log_front =
        a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        const double lower = front * beta_cf(a, b, x) / a;
        return {lower, 1.0 - lower};
    }
    const double upper = front * beta_cf(b, a, 1.0 - x) / b;
    return {1.0 - upper, upper};
}

double beta_interval_mass(double a, double b, double lo, double hi) {
    if (hi <= lo) return 0.0;
    const IncompleteBeta at_lo = incomplete_beta(a, b, lo);
    const IncompleteBeta at_hi = incomplete_beta(a, b, hi);
    // Subtract in the tail whose values are small to avoid cancellation.
    const double via_lower = at_hi.lower - at_lo.lower;
    const double via_upper = at_lo.upper - at_hi.upper;
    const double mass = (at_lo.upper < at_hi.lower) ? via_upper : via_lower;
    return mass > 0.0 ? mass : 0.0;
}

}  // namespace podtpi::special
