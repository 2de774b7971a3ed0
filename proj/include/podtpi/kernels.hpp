#pragma once

// Draw-parallel inner loops of the posterior-decision computation. Each
// kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant; the variant is picked once at runtime from CPUID. Both variants
// are exposed for equivalence testing.

#include <cstddef>
#include <span>

namespace podtpi::kernels {

enum class Isa { kScalar, kAvx2 };

const char* isa_name(Isa isa);

/// Best variant supported by this CPU and build.
Isa detect_isa();

/// Variant used by the dispatching entry points.
Isa active_isa();

/// Overrides dispatch; fails if the variant is unavailable. Test hook.
void set_active_isa(Isa isa);

bool isa_available(Isa isa);

// All arrays are structure-of-arrays over posterior draws. `weights` holds the
// K time-bin weights bin-major: weights[k * n_draws + j].

/// q[j] = (1 - s_j) p[j] / ((1 - s_j) p[j] + 1 - p[j]) with
/// s_j = sum_k weights[k][j] * bin_fraction[k].
void conditional_dlt_probs(std::span<const double> p, std::span<const double> weights,
                           std::span<const double> bin_fraction, std::span<double> q);

/// Average over draws of the Poisson-binomial pmf. `q` is patient-major:
/// q[i * n_draws + j]. pmf has n_patients + 1 entries.
void mixture_pmf(std::span<const double> q, std::size_t n_patients, std::size_t n_draws,
                 std::span<double> pmf);

double mean(std::span<const double> x);

namespace scalar {
void conditional_dlt_probs(std::span<const double> p, std::span<const double> weights,
                           std::span<const double> bin_fraction, std::span<double> q);
void mixture_pmf(std::span<const double> q, std::size_t n_patients, std::size_t n_draws,
                 std::span<double> pmf);
double mean(std::span<const double> x);
}  // namespace scalar

namespace avx2 {
void conditional_dlt_probs(std::span<const double> p, std::span<const double> weights,
                           std::span<const double> bin_fraction, std::span<double> q);
void mixture_pmf(std::span<const double> q, std::size_t n_patients, std::size_t n_draws,
                 std::span<double> pmf);
double mean(std::span<const double> x);
}  // namespace avx2

}  // namespace podtpi::kernels
