#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "podtpi/error.hpp"
#include "podtpi/kernels.hpp"

namespace podtpi::kernels::avx2 {

namespace {

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void conditional_dlt_probs(std::span<const double> p, std::span<const double> weights,
                           std::span<const double> bin_fraction, std::span<double> q) {
    const std::size_t n = p.size();
    const std::size_t k_bins = bin_fraction.size();
    require(weights.size() == n * k_bins && q.size() == n, "kernel size mismatch");
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d s = _mm256_setzero_pd();
        for (std::size_t k = 0; k < k_bins; ++k) {
            const __m256d w = _mm256_loadu_pd(weights.data() + k * n + j);
            s = _mm256_fmadd_pd(w, _mm256_set1_pd(bin_fraction[k]), s);
        }
        const __m256d pj = _mm256_loadu_pd(p.data() + j);
        const __m256d num = _mm256_mul_pd(_mm256_sub_pd(one, s), pj);
        const __m256d den = _mm256_add_pd(num, _mm256_sub_pd(one, pj));
        _mm256_storeu_pd(q.data() + j, _mm256_div_pd(num, den));
    }
    for (; j < n; ++j) {
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
    const std::size_t width = n_patients + 1;
    const __m256d one = _mm256_set1_pd(1.0);
    // Four draws per lane group; buffers hold lane s at [4s, 4s + 4).
    std::vector<double> acc(4 * width, 0.0);
    std::vector<double> cur(4 * width);
    std::size_t j = 0;
    for (; j + 4 <= n_draws; j += 4) {
        std::fill(cur.begin(), cur.end(), 0.0);
        _mm256_storeu_pd(cur.data(), one);
        for (std::size_t i = 0; i < n_patients; ++i) {
            const __m256d qi = _mm256_loadu_pd(q.data() + i * n_draws + j);
            const __m256d qc = _mm256_sub_pd(one, qi);
            for (std::size_t s = i + 1; s > 0; --s) {
                const __m256d hi = _mm256_loadu_pd(cur.data() + 4 * s);
                const __m256d lo = _mm256_loadu_pd(cur.data() + 4 * (s - 1));
                _mm256_storeu_pd(cur.data() + 4 * s, _mm256_fmadd_pd(lo, qi, _mm256_mul_pd(hi, qc)));
            }
            _mm256_storeu_pd(cur.data(), _mm256_mul_pd(_mm256_loadu_pd(cur.data()), qc));
        }
        for (std::size_t s = 0; s < width; ++s)
            _mm256_storeu_pd(acc.data() + 4 * s, _mm256_add_pd(_mm256_loadu_pd(acc.data() + 4 * s),
                                                                _mm256_loadu_pd(cur.data() + 4 * s)));
    }
    std::vector<double> tail(width, 0.0);
    std::vector<double> c1(width);
    for (; j < n_draws; ++j) {
        c1.assign(width, 0.0);
        c1[0] = 1.0;
        for (std::size_t i = 0; i < n_patients; ++i) {
            const double qi = q[i * n_draws + j];
            for (std::size_t s = i + 1; s > 0; --s) c1[s] = c1[s] * (1.0 - qi) + c1[s - 1] * qi;
            c1[0] *= 1.0 - qi;
        }
        for (std::size_t s = 0; s < width; ++s) tail[s] += c1[s];
    }
    const double inv = n_draws > 0 ? 1.0 / static_cast<double>(n_draws) : 0.0;
    for (std::size_t s = 0; s < width; ++s) pmf[s] = (hsum(_mm256_loadu_pd(acc.data() + 4 * s)) + tail[s]) * inv;
}

double mean(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return 0.0;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x.data() + j));
        a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x.data() + j + 4));
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; j < n; ++j) acc += x[j];
    return acc / static_cast<double>(n);
}

}  // namespace podtpi::kernels::avx2
