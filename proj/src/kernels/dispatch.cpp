#include <atomic>

#include "podtpi/error.hpp"
#include "podtpi/kernels.hpp"

namespace podtpi::kernels {

#if !defined(PODTPI_HAS_AVX2)
namespace avx2 {
void conditional_dlt_probs(std::span<const double>, std::span<const double>,
                           std::span<const double>, std::span<double>) {
    fail(ErrorKind::kInvalidArgument, "AVX2 kernels not built");
}
void mixture_pmf(std::span<const double>, std::size_t, std::size_t, std::span<double>) {
    fail(ErrorKind::kInvalidArgument, "AVX2 kernels not built");
}
double mean(std::span<const double>) { fail(ErrorKind::kInvalidArgument, "AVX2 kernels not built"); }
}  // namespace avx2
#endif

namespace {

std::atomic<int> g_active{-1};

Isa resolve() {
    int v = g_active.load(std::memory_order_acquire);
    if (v < 0) {
        v = static_cast<int>(detect_isa());
        g_active.store(v, std::memory_order_release);
    }
    return static_cast<Isa>(v);
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
    if (isa == Isa::kScalar) return true;
#if defined(PODTPI_HAS_AVX2)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect_isa() { return isa_available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar; }

Isa active_isa() { return resolve(); }

void set_active_isa(Isa isa) {
    if (!isa_available(isa))
        fail(ErrorKind::kInvalidArgument, std::string("kernel variant unavailable: ") + isa_name(isa));
    g_active.store(static_cast<int>(isa), std::memory_order_release);
}

void conditional_dlt_probs(std::span<const double> p, std::span<const double> weights,
                           std::span<const double> bin_fraction, std::span<double> q) {
    if (resolve() == Isa::kAvx2) return avx2::conditional_dlt_probs(p, weights, bin_fraction, q);
    scalar::conditional_dlt_probs(p, weights, bin_fraction, q);
}

void mixture_pmf(std::span<const double> q, std::size_t n_patients, std::size_t n_draws,
                 std::span<double> pmf) {
    if (resolve() == Isa::kAvx2) return avx2::mixture_pmf(q, n_patients, n_draws, pmf);
    scalar::mixture_pmf(q, n_patients, n_draws, pmf);
}

double mean(std::span<const double> x) {
    if (resolve() == Isa::kAvx2) return avx2::mean(x);
    return scalar::mean(x);
}

}  // namespace podtpi::kernels
