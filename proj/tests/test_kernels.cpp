#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "podtpi/kernels.hpp"

using namespace podtpi;

namespace {

struct Inputs {
    std::vector<double> p, weights, beta;
    std::size_t n;
};

Inputs random_inputs(std::size_t n, int bins, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.001, 0.999);
    Inputs in;
    in.n = n;
    in.p.resize(n);
    for (double& x : in.p) x = u(rng);
    in.weights.assign(bins * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double z = 0;
        for (int k = 0; k < bins; ++k) z += in.weights[k * n + j] = u(rng);
        for (int k = 0; k < bins; ++k) in.weights[k * n + j] /= z;
    }
    for (int k = 0; k < bins; ++k) in.beta.push_back(k == 0 ? 1.0 : u(rng) * (k < bins - 1));
    return in;
}

}  // namespace

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {
protected:
    void SetUp() override {
        if (!kernels::isa_available(kernels::Isa::kAvx2)) GTEST_SKIP() << "no AVX2 on this host";
    }
};

TEST_P(KernelEquivalence, ConditionalDltProbs) {
    const auto in = random_inputs(GetParam(), 3, GetParam() + 1);
    std::vector<double> a(in.n), b(in.n);
    kernels::scalar::conditional_dlt_probs(in.p, in.weights, in.beta, a);
    kernels::avx2::conditional_dlt_probs(in.p, in.weights, in.beta, b);
    for (std::size_t j = 0; j < in.n; ++j) EXPECT_NEAR(a[j], b[j], 1e-15);
}

TEST_P(KernelEquivalence, MixturePmf) {
    const std::size_t n = GetParam();
    for (std::size_t r : {1u, 2u, 5u, 9u}) {
        const auto in = random_inputs(n * r, 1, n + r);
        std::vector<double> a(r + 1), b(r + 1);
        kernels::scalar::mixture_pmf(in.p, r, n, a);
        kernels::avx2::mixture_pmf(in.p, r, n, b);
        for (std::size_t s = 0; s <= r; ++s) EXPECT_NEAR(a[s], b[s], 1e-13);
    }
}

TEST_P(KernelEquivalence, Mean) {
    const auto in = random_inputs(GetParam(), 1, 17);
    EXPECT_NEAR(kernels::scalar::mean(in.p), kernels::avx2::mean(in.p), 1e-14);
}

// Sizes exercise the vector body, the scalar tail and both together.
INSTANTIATE_TEST_SUITE_P(Sizes, KernelEquivalence, ::testing::Values(1, 3, 4, 7, 8, 9, 1000, 2003));

TEST(KernelDispatch, OverrideAndRestore) {
    const auto original = kernels::active_isa();
    kernels::set_active_isa(kernels::Isa::kScalar);
    EXPECT_EQ(kernels::active_isa(), kernels::Isa::kScalar);
    std::vector<double> x{1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(kernels::mean(x), 3.0);
    kernels::set_active_isa(original);
    EXPECT_EQ(kernels::active_isa(), original);
    EXPECT_TRUE(kernels::isa_available(kernels::Isa::kScalar));
}
