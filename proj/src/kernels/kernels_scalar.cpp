#include <vector>

#include "podtpi/error.hpp"
#include "podtpi/kernels.hpp"

namespace podtpi::kernels::scalar {

void conditional_dlt_probs(std::span<const double> p, std::span<const double> weights,
                           std::span<const double> bin_fraction, std::span<double> q) {
    const std::size_t n = p.size();
    const std::size_t k_bins = bin_fraction.size();
    require(weights.size() == n * k_bins && q.size() == n, "kernel size mismatch");
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < k_bins; ++k) s += weights[k * n + j] * bin_fraction[k];
        const double num = (1.0 - s) * p[j];
        q[j] = num / (num + (1.0 - p[j]));
    }
}

void mixture_pmf(std::span<const double> q, std::size_t n_patients, std::size_t n_draws,
                 std::span<double> pmf) {
    require(q.size() == n_patients * n_draws && pmf.size() == n_patients + 1,
            "kernel size mismatch");
    std::vector<double> acc(n_patients + 1, 0.0);
    std::vector<double> cur(n_patients + 1);
    for (std::size_t j = 0; j < n_draws; ++j) {
        cur.assign(n_patients + 1, 0.0);
        cur[0] = 1.0;
        for (std::size_t i = 0; i < n_patients; ++i) {
            const double qi = q[i * n_draws + j];
            for (std::size_t s = i + 1; s > 0; --s) cur[s] = cur[s] * (1.0 - qi) + cur[s - 1] * qi;
            cur[0] *= 1.0 - qi;
        }
        for (std::size_t s = 0; s <= n_patients; ++s) acc[s] += cur[s];
    }
    const double inv = n_draws > 0 ? 1.0 / static_cast<double>(n_draws) : 0.0;
    for (std::size_t s = 0; s <= n_patients; ++s) pmf[s] = acc[s] * inv;
}

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
}

}  // namespace podtpi::kernels::scalar
