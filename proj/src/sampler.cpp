#include <cmath>
#include <random>

#include "podtpi/toxmodel.hpp"

namespace podtpi::toxmodel {

namespace {

constexpr int kAdaptEvery = 50;
constexpr double kAcceptLow = 0.25;
constexpr double kAcceptHigh = 0.45;

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct PendingPatient {
    int dose;                  // 0-based
    std::vector<double> beta;  // per bin
    double s = 0.0;            // sum_k w_k beta_k at the current w
};

class Chain {
public:
    Chain(const ToxData& data, const TimeGrid& grid, const Priors& priors)
        : data_(data), priors_(priors), n_bins_(grid.n_bins()) {
        const int n_doses = data.n_doses();
        require(static_cast<int>(priors.dose.size()) == n_doses, "one beta prior per dose required");
        require(static_cast<int>(priors.bins.size()) == n_bins_, "one dirichlet weight per bin required");
        by_dose_.resize(n_doses);
        for (int d = 0; d < n_doses; ++d) {
            for (double v : data.pending[d]) {
                by_dose_[d].push_back(static_cast<int>(pending_.size()));
                pending_.push_back({d, beta_fractions(v, grid), 0.0});
            }
        }
        z_.resize(n_doses);
        p_.resize(n_doses);
        for (int d = 0; d < n_doses; ++d) {
            const double init = (data.n[d] + 0.5) / (data.n[d] + data.m[d] + 1.0);
            p_[d] = init;
            z_[d] = std::log(init / (1.0 - init));
        }
        double eta_total = 0.0;
        for (double e : priors.bins) eta_total += e;
        w_.resize(n_bins_);
        for (int k = 0; k < n_bins_; ++k) w_[k] = priors.bins[k] / eta_total;
        y_.resize(n_bins_ - 1);
        for (int k = 0; k + 1 < n_bins_; ++k) y_[k] = std::log(w_[k] / w_[n_bins_ - 1]);
        refresh_s(w_);
        w_target_ = w_log_target(w_);
        for (int d = 0; d < n_doses; ++d)
            if (!std::isfinite(p_log_target(d, z_[d])))
                fail(ErrorKind::kNumerical, "non-finite log posterior at initialization");
        if (!std::isfinite(w_target_)) fail(ErrorKind::kNumerical, "non-finite log posterior at initialization");
    }

    // Log conditional of logit(p_d), Jacobian included.
    double p_log_target(int d, double z) const {
        const double lp = log_sigmoid(z);
        const double lq = log_sigmoid(-z);
        const double p = sigmoid(z);
        double v = (priors_.dose[d].a + data_.n[d]) * lp + (priors_.dose[d].b + data_.m[d]) * lq;
        for (int i : by_dose_[d]) v += std::log1p(-p * pending_[i].s);
        return v;
    }

    // Log conditional of w on the additive log-ratio scale, Jacobian included.
    double w_log_target(const std::vector<double>& w) const {
        double v = 0.0;
        for (int k = 0; k < n_bins_; ++k) v += (priors_.bins[k] + data_.dlt_bin_counts[k]) * std::log(w[k]);
        for (const auto& pt : pending_) {
            double s = 0.0;
            for (int k = 0; k < n_bins_; ++k) s += w[k] * pt.beta[k];
            v += std::log1p(-p_[pt.dose] * s);
        }
        return v;
    }

    bool update_p(int d, double step, std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, step);
        const double z_new = z_[d] + normal(rng);
        const double log_ratio = p_log_target(d, z_new) - p_log_target(d, z_[d]);
        if (accept(log_ratio, rng)) {
            z_[d] = z_new;
            p_[d] = sigmoid(z_new);
            return true;
        }
        return false;
    }

    bool update_w(double step, std::mt19937_64& rng) {
        if (n_bins_ < 2) return false;
        std::normal_distribution<double> normal(0.0, step);
        std::vector<double> y_new(y_);
        for (double& y : y_new) y += normal(rng);
        const std::vector<double> w_new = alr_inverse(y_new);
        // The target depends on p through the pending factors.
        const double current = w_log_target(w_);
        const double proposed = w_log_target(w_new);
        if (accept(proposed - current, rng)) {
            y_ = std::move(y_new);
            w_ = w_new;
            refresh_s(w_);
            return true;
        }
        return false;
    }

    const std::vector<double>& p() const { return p_; }
    const std::vector<double>& w() const { return w_; }

private:
    static bool accept(double log_ratio, std::mt19937_64& rng) {
        if (!std::isfinite(log_ratio)) return false;
        if (log_ratio >= 0.0) return true;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        return std::log(unif(rng)) < log_ratio;
    }

    std::vector<double> alr_inverse(const std::vector<double>& y) const {
        double mx = 0.0;
        for (double v : y) mx = std::max(mx, v);
        std::vector<double> w(n_bins_);
        double total = 0.0;
        for (int k = 0; k + 1 < n_bins_; ++k) {
            w[k] = std::exp(y[k] - mx);
            total += w[k];
        }
        w[n_bins_ - 1] = std::exp(-mx);
        total += w[n_bins_ - 1];
        for (double& v : w) v /= total;
        return w;
    }

    void refresh_s(const std::vector<double>& w) {
        for (auto& pt : pending_) {
            double s = 0.0;
            for (int k = 0; k < n_bins_; ++k) s += w[k] * pt.beta[k];
            pt.s = s;
        }
    }

    const ToxData& data_;
    const Priors& priors_;
    int n_bins_;
    std::vector<PendingPatient> pending_;
    std::vector<std::vector<int>> by_dose_;
    std::vector<double> z_, p_;
    std::vector<double> y_, w_;
    double w_target_ = 0.0;
};

void adapt(double& step, int accepted, int tried) {
    if (tried == 0) return;
    const double rate = static_cast<double>(accepted) / tried;
    if (rate < kAcceptLow) step *= 0.8;
    else if (rate > kAcceptHigh) step *= 1.25;
}

}  // namespace

PosteriorDraws sample_posterior(const ToxData& data, const TimeGrid& grid,
                                const Priors& priors, const McmcConfig& config) {
    require(config.n_iter >= 1 && config.burn_in >= 0 && config.thin >= 1,
            "chain length, burn-in and thinning must be positive");
    require(config.n_iter > config.burn_in, "n_iter must exceed burn_in");
    require(config.p_step > 0.0 && config.w_step > 0.0, "proposal steps must be positive");
    require(static_cast<int>(data.dlt_bin_counts.size()) == grid.n_bins(), "data and grid disagree");

    Chain chain(data, grid, priors);
    std::mt19937_64 rng(config.seed);
    const int n_doses = data.n_doses();
    const int n_bins = grid.n_bins();

    std::vector<double> p_step(n_doses, config.p_step);
    double w_step = config.w_step;
    std::vector<int> p_acc(n_doses, 0);
    int w_acc = 0;
    int window_tries = 0;

    PosteriorDraws out;
    out.n_doses = n_doses;
    out.n_bins = n_bins;
    out.config = config;
    out.n_draws = (config.n_iter - config.burn_in + config.thin - 1) / config.thin;
    out.p.resize(static_cast<std::size_t>(n_doses) * out.n_draws);
    out.w.resize(static_cast<std::size_t>(n_bins) * out.n_draws);
    std::vector<int> kept_p_acc(n_doses, 0);
    int kept_w_acc = 0;

    int j = 0;
    for (int it = 0; it < config.n_iter; ++it) {
        const bool burning = it < config.burn_in;
        for (int d = 0; d < n_doses; ++d) {
            const bool ok = chain.update_p(d, p_step[d], rng);
            if (burning) p_acc[d] += ok;
            else kept_p_acc[d] += ok;
        }
        const bool w_ok = chain.update_w(w_step, rng);
        if (burning) w_acc += w_ok;
        else kept_w_acc += w_ok;

        if (burning && ++window_tries == kAdaptEvery) {
            for (int d = 0; d < n_doses; ++d) {
                adapt(p_step[d], p_acc[d], window_tries);
                p_acc[d] = 0;
            }
            adapt(w_step, w_acc, window_tries);
            w_acc = 0;
            window_tries = 0;
        }
        if (!burning && (it - config.burn_in) % config.thin == 0) {
            for (int d = 0; d < n_doses; ++d)
                out.p[static_cast<std::size_t>(d) * out.n_draws + j] = chain.p()[d];
            for (int k = 0; k < n_bins; ++k)
                out.w[static_cast<std::size_t>(k) * out.n_draws + j] = chain.w()[k];
            ++j;
        }
    }
    const int kept_iters = config.n_iter - config.burn_in;
    out.p_acceptance.resize(n_doses);
    for (int d = 0; d < n_doses; ++d)
        out.p_acceptance[d] = static_cast<double>(kept_p_acc[d]) / kept_iters;
    out.w_acceptance = static_cast<double>(kept_w_acc) / kept_iters;
    return out;
}

}  // namespace podtpi::toxmodel
