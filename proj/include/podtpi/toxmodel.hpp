#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "podtpi/core.hpp"
#include "podtpi/mtpi2.hpp"

namespace podtpi::toxmodel {

/// Bin boundaries 0 = h_0 < h_1 < ... < h_K = window.
class TimeGrid {
public:
    /// Equal-width bins.
    TimeGrid(double window, int n_bins);
    explicit TimeGrid(std::vector<double> boundaries);

    int n_bins() const { return static_cast<int>(h_.size()) - 1; }
    double window() const { return h_.back(); }
    const std::vector<double>& boundaries() const { return h_; }

    /// Bin k (1-based) with h_{k-1} < t <= h_k.
    int bin_of(double t) const;

private:
    std::vector<double> h_;
};

/// Fraction of bin k (1-based) elapsed by time t: 1 past the bin, linear
/// inside it, 0 before it.
double beta_fraction(double t, int k, const TimeGrid& grid);

/// beta_fraction(t, k) for k = 1..K.
std::vector<double> beta_fractions(double t, const TimeGrid& grid);

/// Sufficient statistics of the time-to-toxicity likelihood. Dose vectors
/// are 0-based internally (index d - 1).
struct ToxData {
    std::vector<int> n;                          // observed DLTs per dose
    std::vector<int> m;                          // observed non-DLTs per dose
    std::vector<std::vector<double>> pending;    // follow-ups per dose
    std::vector<int> dlt_bin_counts;             // DLTs per time bin, all doses

    int n_doses() const { return static_cast<int>(n.size()); }
    int pending_total() const;
};

ToxData collect_data(const TrialState& state, const TimeGrid& grid);

/// Log of the likelihood over all doses, up to an additive constant.
double log_likelihood(const std::vector<double>& p, const std::vector<double>& w,
                      const ToxData& data, const TimeGrid& grid);

/// Gradient of log_likelihood with respect to logit(p_d) and to the K free
/// logits u of w = softmax(u).
struct LikelihoodGradient {
    std::vector<double> logit_p;
    std::vector<double> softmax_logits;
};

LikelihoodGradient log_likelihood_gradient(const std::vector<double>& p,
                                           const std::vector<double>& w,
                                           const ToxData& data, const TimeGrid& grid);

struct Priors {
    std::vector<BetaPrior> dose;   // theta
    std::vector<double> bins;      // eta

    static Priors from(const DesignParams& params);
};

struct McmcConfig {
    int n_iter = 3000;    // total iterations, burn-in included
    int burn_in = 1000;
    int thin = 1;
    std::uint64_t seed = 1;
    double p_step = 0.6;  // random-walk sd on logit(p)
    double w_step = 0.4;  // random-walk sd on the additive log-ratio of w
};

/// Post-burn-in draws stored structure-of-arrays.
struct PosteriorDraws {
    int n_draws = 0;
    int n_doses = 0;
    int n_bins = 0;
    std::vector<double> p;  // p[(d - 1) * n_draws + j]
    std::vector<double> w;  // w[(k - 1) * n_draws + j]
    McmcConfig config;
    std::vector<double> p_acceptance;  // post-burn-in acceptance rate per dose
    double w_acceptance = 0.0;

    std::span<const double> p_row(int dose) const {
        return {p.data() + static_cast<std::size_t>(dose - 1) * n_draws,
                static_cast<std::size_t>(n_draws)};
    }
    std::span<const double> w_row(int bin) const {
        return {w.data() + static_cast<std::size_t>(bin - 1) * n_draws,
                static_cast<std::size_t>(n_draws)};
    }

    /// CSV `iter,p_1..p_D,w_1..w_K` for sampler audits.
    std::string to_csv() const;
};

/// Metropolis-within-Gibbs: p_d one at a time on the logit scale, w jointly
/// on the additive log-ratio scale, step sizes adapted during burn-in.
PosteriorDraws sample_posterior(const ToxData& data, const TimeGrid& grid,
                                const Priors& priors, const McmcConfig& config);

double conditional_dlt_prob(double follow_up, double p, const std::vector<double>& w,
                            const TimeGrid& grid);

/// Exact pmf of a sum of independent Bernoullis by sequential convolution.
std::vector<double> poisson_binomial_pmf(const std::vector<double>& q);

/// How the pending-DLT count posterior integrates over the draws.
enum class SPosteriorMethod {
    kPlugin,   // Poisson-binomial at posterior-mean q_i
    kMixture,  // draw-average of per-draw Poisson-binomial pmfs
};

const char* method_name(SPosteriorMethod m);
SPosteriorMethod method_from_name(const std::string& name);

struct SPosterior {
    std::vector<double> pmf;     // over s = 0..r
    std::vector<double> mean_q;  // posterior mean of q_i per pending patient
};

SPosterior s_posterior(const PosteriorDraws& draws, int dose,
                       const std::vector<double>& follow_ups, const TimeGrid& grid,
                       SPosteriorMethod method = SPosteriorMethod::kPlugin);

struct DecisionDistribution {
    std::array<double, 3> gamma{};  // indexed by decision + 1
    Decision a_star = Decision::kStay;

    double operator[](Decision d) const { return gamma[to_int(d) + 1]; }
    double total() const { return gamma[0] + gamma[1] + gamma[2]; }
    bool normalized(double tol = 1e-9) const;

    static DecisionDistribution point_mass(Decision d);
};

/// Probability of each complete-data decision under the pending-count pmf.
/// a_star is the safest decision among those attaining the maximum.
DecisionDistribution pod(const std::vector<double>& s_pmf, int n, int m, int r,
                         const std::function<int(int, int)>& decide_fn);

DecisionDistribution pod(const std::vector<double>& s_pmf, int n, int m, int r,
                         const mtpi2::DecisionRule& rule);

}  // namespace podtpi::toxmodel
