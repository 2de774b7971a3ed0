#include "podtpi/toxmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "podtpi/kernels.hpp"

namespace podtpi::toxmodel {

TimeGrid::TimeGrid(double window, int n_bins) {
    require(window > 0.0, "window must be positive");
    require(n_bins >= 1, "n_bins must be >= 1");
    h_.resize(n_bins + 1);
    for (int k = 0; k <= n_bins; ++k) h_[k] = k * window / n_bins;
    h_.back() = window;
}

TimeGrid::TimeGrid(std::vector<double> boundaries) : h_(std::move(boundaries)) {
    require(h_.size() >= 2 && h_.front() == 0.0, "grid must start at 0 with at least one bin");
    for (std::size_t k = 1; k < h_.size(); ++k)
        require(h_[k] > h_[k - 1], "grid boundaries must be strictly increasing");
}

int TimeGrid::bin_of(double t) const {
    require(t > 0.0 && t <= window(), "time outside (0, window]");
    for (int k = 1; k <= n_bins(); ++k)
        if (t <= h_[k]) return k;
    return n_bins();
}

double beta_fraction(double t, int k, const TimeGrid& grid) {
    require(t >= 0.0 && t <= grid.window(), "time outside [0, window]");
    require(k >= 1 && k <= grid.n_bins(), "bin index out of range");
    const auto& h = grid.boundaries();
    if (t > h[k]) return 1.0;
    if (t > h[k - 1]) return (t - h[k - 1]) / (h[k] - h[k - 1]);
    return 0.0;
}

std::vector<double> beta_fractions(double t, const TimeGrid& grid) {
    std::vector<double> out(grid.n_bins());
    for (int k = 1; k <= grid.n_bins(); ++k) out[k - 1] = beta_fraction(t, k, grid);
    return out;
}

int ToxData::pending_total() const {
    int r = 0;
    for (const auto& v : pending) r += static_cast<int>(v.size());
    return r;
}

ToxData collect_data(const TrialState& state, const TimeGrid& grid) {
    const int n_doses = state.params.n_doses;
    ToxData data;
    data.n.assign(n_doses, 0);
    data.m.assign(n_doses, 0);
    data.pending.assign(n_doses, {});
    data.dlt_bin_counts.assign(grid.n_bins(), 0);
    for (const auto& pt : state.patients) {
        const Outcome o = pt.outcome_at(state.clock, state.params.window);
        const int d = pt.dose - 1;
        switch (o.kind) {
            case OutcomeKind::kDlt:
                ++data.n[d];
                ++data.dlt_bin_counts[grid.bin_of(o.time) - 1];
                break;
            case OutcomeKind::kNoDlt: ++data.m[d]; break;
            case OutcomeKind::kPending: data.pending[d].push_back(o.time); break;
        }
    }
    return data;
}

namespace {

void check_parameters(const std::vector<double>& p, const std::vector<double>& w,
                      const ToxData& data, const TimeGrid& grid) {
    require(static_cast<int>(p.size()) == data.n_doses(), "p has wrong length");
    require(static_cast<int>(w.size()) == grid.n_bins(), "w has wrong length");
    for (double v : p) require(v > 0.0 && v < 1.0, "p must lie in (0,1)");
    for (double v : w) require(v >= 0.0, "w must be non-negative");
}

double survival_mix(const std::vector<double>& w, const std::vector<double>& beta) {
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * beta[k];
    return s;
}

}  // namespace

double log_likelihood(const std::vector<double>& p, const std::vector<double>& w,
                      const ToxData& data, const TimeGrid& grid) {
    check_parameters(p, w, data, grid);
    double ll = 0.0;
    for (int k = 0; k < grid.n_bins(); ++k)
        if (data.dlt_bin_counts[k] > 0) ll += data.dlt_bin_counts[k] * std::log(w[k]);
    for (int d = 0; d < data.n_doses(); ++d) {
        if (data.n[d] > 0) ll += data.n[d] * std::log(p[d]);
        if (data.m[d] > 0) ll += data.m[d] * std::log1p(-p[d]);
        for (double v : data.pending[d]) {
            const double factor = 1.0 - p[d] * survival_mix(w, beta_fractions(v, grid));
            if (!(factor > 0.0)) fail(ErrorKind::kNumerical, "non-positive pending survival factor");
            ll += std::log(factor);
        }
    }
    return ll;
}

LikelihoodGradient log_likelihood_gradient(const std::vector<double>& p,
                                           const std::vector<double>& w,
                                           const ToxData& data, const TimeGrid& grid) {
    check_parameters(p, w, data, grid);
    const int n_bins = grid.n_bins();
    LikelihoodGradient g;
    g.logit_p.assign(data.n_doses(), 0.0);
    std::vector<double> dw(n_bins, 0.0);
    for (int k = 0; k < n_bins; ++k) dw[k] = data.dlt_bin_counts[k] / w[k];
    for (int d = 0; d < data.n_doses(); ++d) {
        double dp = data.n[d] / p[d] - data.m[d] / (1.0 - p[d]);
        for (double v : data.pending[d]) {
            const auto beta = beta_fractions(v, grid);
            const double s = survival_mix(w, beta);
            const double factor = 1.0 - p[d] * s;
            dp -= s / factor;
            for (int k = 0; k < n_bins; ++k) dw[k] -= p[d] * beta[k] / factor;
        }
        g.logit_p[d] = dp * p[d] * (1.0 - p[d]);
    }
    double weighted = 0.0;
    for (int k = 0; k < n_bins; ++k) weighted += dw[k] * w[k];
    g.softmax_logits.resize(n_bins);
    for (int j = 0; j < n_bins; ++j) g.softmax_logits[j] = w[j] * (dw[j] - weighted);
    return g;
}

Priors Priors::from(const DesignParams& params) {
    return Priors{params.dose_priors, params.bin_prior};
}

std::string PosteriorDraws::to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "iter";
    for (int d = 1; d <= n_doses; ++d) os << ",p_" << d;
    for (int k = 1; k <= n_bins; ++k) os << ",w_" << k;
    os << '\n';
    for (int j = 0; j < n_draws; ++j) {
        os << config.burn_in + j * config.thin + 1;
        for (int d = 0; d < n_doses; ++d) os << ',' << p[static_cast<std::size_t>(d) * n_draws + j];
        for (int k = 0; k < n_bins; ++k) os << ',' << w[static_cast<std::size_t>(k) * n_draws + j];
        os << '\n';
    }
    return os.str();
}

double conditional_dlt_prob(double follow_up, double p, const std::vector<double>& w,
                            const TimeGrid& grid) {
    require(follow_up >= 0.0 && follow_up < grid.window(), "follow-up must lie in [0, window)");
    require(static_cast<int>(w.size()) == grid.n_bins(), "w has wrong length");
    const double remaining = 1.0 - survival_mix(w, beta_fractions(follow_up, grid));
    const double num = remaining * p;
    return num / (num + (1.0 - p));
}

std::vector<double> poisson_binomial_pmf(const std::vector<double>& q) {
    std::vector<double> pmf(q.size() + 1, 0.0);
    pmf[0] = 1.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        require(q[i] >= 0.0 && q[i] <= 1.0, "success probabilities must lie in [0,1]");
        for (std::size_t s = i + 1; s > 0; --s) pmf[s] = pmf[s] * (1.0 - q[i]) + pmf[s - 1] * q[i];
        pmf[0] *= 1.0 - q[i];
    }
    return pmf;
}

const char* method_name(SPosteriorMethod m) {
    return m == SPosteriorMethod::kMixture ? "mixture" : "plugin";
}

SPosteriorMethod method_from_name(const std::string& name) {
    if (name == "plugin") return SPosteriorMethod::kPlugin;
    if (name == "mixture") return SPosteriorMethod::kMixture;
    fail(ErrorKind::kInvalidArgument, "unknown s-posterior method '" + name + "'");
}

SPosterior s_posterior(const PosteriorDraws& draws, int dose,
                       const std::vector<double>& follow_ups, const TimeGrid& grid,
                       SPosteriorMethod method) {
    if (draws.n_draws < 1) fail(ErrorKind::kInvalidArgument, "no posterior draws");
    require(dose >= 1 && dose <= draws.n_doses, "dose out of range");
    require(draws.n_bins == grid.n_bins(), "draws and grid disagree on bin count");
    const std::size_t r = follow_ups.size();
    const std::size_t n = static_cast<std::size_t>(draws.n_draws);
    SPosterior out;
    if (r == 0) {
        out.pmf = {1.0};
        return out;
    }
    std::vector<double> q(r * n);
    const auto p_row = draws.p_row(dose);
    for (std::size_t i = 0; i < r; ++i) {
        const double v = follow_ups[i];
        require(v >= 0.0 && v < grid.window(), "follow-up must lie in [0, window)");
        const auto beta = beta_fractions(v, grid);
        kernels::conditional_dlt_probs(p_row, draws.w, beta, std::span<double>(q.data() + i * n, n));
        out.mean_q.push_back(kernels::mean(std::span<const double>(q.data() + i * n, n)));
    }
    if (method == SPosteriorMethod::kPlugin) {
        out.pmf = poisson_binomial_pmf(out.mean_q);
    } else {
        out.pmf.assign(r + 1, 0.0);
        kernels::mixture_pmf(q, r, n, out.pmf);
    }
    return out;
}

bool DecisionDistribution::normalized(double tol) const {
    for (double g : gamma)
        if (!(g >= 0.0)) return false;
    return std::fabs(total() - 1.0) <= tol;
}

DecisionDistribution DecisionDistribution::point_mass(Decision d) {
    DecisionDistribution out;
    out.gamma[to_int(d) + 1] = 1.0;
    out.a_star = d;
    return out;
}

DecisionDistribution pod(const std::vector<double>& s_pmf, int n, int m, int r,
                         const std::function<int(int, int)>& decide_fn) {
    require(n >= 0 && m >= 0 && r >= 0, "counts must be non-negative");
    require(static_cast<int>(s_pmf.size()) == r + 1, "pmf must cover s = 0..r");
    DecisionDistribution out;
    for (int s = 0; s <= r; ++s) {
        const int a = decide_fn(n + s, m + r - s);
        if (a < -1 || a > 1) fail(ErrorKind::kInvalidArgument, "decision function returned " + std::to_string(a));
        out.gamma[a + 1] += s_pmf[s];
    }
    // Safest decision among the maximizers.
    const double best = *std::max_element(out.gamma.begin(), out.gamma.end());
    for (int a = -1; a <= 1; ++a) {
        if (out.gamma[a + 1] == best) {
            out.a_star = decision_from_int(a);
            break;
        }
    }
    return out;
}

DecisionDistribution pod(const std::vector<double>& s_pmf, int n, int m, int r,
                         const mtpi2::DecisionRule& rule) {
    return pod(s_pmf, n, m, r, [&rule](int nn, int mm) { return to_int(rule(nn, mm)); });
}

}  // namespace podtpi::toxmodel
