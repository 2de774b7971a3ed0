#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "podtpi/core.hpp"
#include "podtpi/engine.hpp"
#include "podtpi/mtdselect.hpp"
#include "podtpi/scenarios.hpp"

namespace podtpi::sim {

struct AccrualToxSetting {
    int label = 1;
    double delta = 0.1;  // arrivals per day
    double alpha = 0.5;  // share of DLTs falling in the late part of the window
    double gamma = 0.5;  // late part as a fraction of the window
};

/// Settings 1-4. Setting 4 uses delta = 0.2 (five-day mean inter-arrival).
AccrualToxSetting setting(int label);

struct WeibullParams {
    double shape = 1.0;  // zeta
    double scale = 1.0;  // lambda
};

/// Shape and scale with Pr(T <= tau) = p and Pr(T <= (1-gamma) tau) = (1-alpha) p.
WeibullParams weibull_params(double p, double alpha, double gamma, double tau);
double weibull_cdf(double t, const WeibullParams& w);

/// DLT time from a uniform draw by inversion; infinite when p == 0.
double dlt_time_from_uniform(double u, double p, double alpha, double gamma, double tau);

/// Arrival and toxicity streams shared by every design run on the same trial
/// seed. Arrival i (turned-away ones included) consumes gap i and uniform i.
class TrialStreams {
public:
    explicit TrialStreams(std::uint64_t seed, double delta);

    double gap(std::size_t i);
    double uniform(std::size_t i);

private:
    void extend(std::size_t i);

    std::uint64_t seed_;
    double delta_;
    std::vector<double> gaps_, uniforms_;
};

enum class Inconsistency { kConsistent, kDS, kDE, kSE, kSD, kED, kES };

const char* inconsistency_name(Inconsistency c);

/// `executed` against the decision complete data would have produced.
Inconsistency classify(Decision executed, Decision complete);

struct AuditEntry {
    engine::Recommendation rec;
    int realized_s = 0;  // pending patients at the dose who turn out to have DLTs
    std::optional<Decision> complete_decision;  // A(n + s, m + r - s), assignments only
    Inconsistency type = Inconsistency::kConsistent;
};

/// Classification of an assignment decision; suspensions and terminations
/// are never inconsistent.
Inconsistency classify_inconsistency(const AuditEntry& e, const mtpi2::DecisionRule& rule);

struct SimPatient {
    int id = 0;
    int dose = 0;
    double enroll = 0.0;
    double tox_time = 0.0;  // latent Weibull time from enrollment, infinite if none
    bool dlt = false;       // tox_time within the window
};

struct TrialResult {
    std::vector<SimPatient> patients;
    std::vector<AuditEntry> audit;
    std::optional<int> selected;
    bool terminated = false;
    int turned_away = 0;
    double duration = 0.0;
};

struct SimConfig {
    DesignParams params;  // n_doses, target and max_n are taken from here
    engine::EngineConfig engine;
};

/// Design parameters used for a catalogue scenario.
DesignParams scenario_params(const ScenarioSpec& s, double pi_escalate, double pi_deescalate);

/// One trial. Seeds for the sampler derive from `seed`, so equal seeds
/// reproduce the audit exactly.
TrialResult simulate_trial(const ScenarioSpec& scenario, const AccrualToxSetting& setting,
                           const SimConfig& config, std::uint64_t seed);
TrialResult simulate_trial(const engine::Engine& engine, const ScenarioSpec& scenario,
                           const AccrualToxSetting& setting, std::uint64_t seed);

/// The dose with true probability closest to target (ties to the lower dose);
/// none when every dose is above the equivalence interval.
std::optional<int> true_mtd(const ScenarioSpec& s, double eps2);

constexpr int kInconsistencyTypes = 6;

struct Metrics {
    int scenario = 0;  // 0 for averages
    int n_trials = 0;
    double pcs = 0, pca = 0, poa = 0, pos = 0, pot = 0;
    double duration = 0;
    double termination = 0;  // percent of trials stopped by the lowest-dose rule
    std::array<double, kInconsistencyTypes> inconsistency{};  // per 1000 assignment decisions
    long decisions = 0;
    std::array<long, kInconsistencyTypes> inconsistency_counts{};

    double inconsistency_sum() const;
};

Metrics summarize(const ScenarioSpec& s, const std::vector<TrialResult>& trials, double eps2);

/// Average of per-scenario metrics, scenarios weighted equally.
Metrics average(const std::vector<Metrics>& per_scenario);

std::uint64_t trial_seed(std::uint64_t campaign_seed, int scenario_id, int trial_index);

struct OcRun {
    std::vector<Metrics> per_scenario;
    Metrics overall;
    std::vector<std::vector<TrialResult>> trials;  // kept when requested
};

struct OcOptions {
    double pi_escalate = 1.0;
    double pi_deescalate = 0.15;
    engine::DesignKind design = engine::DesignKind::kPodTpi;
    toxmodel::McmcConfig mcmc = {1500, 500, 1, 1, 0.6, 0.4};
    toxmodel::SPosteriorMethod method = toxmodel::SPosteriorMethod::kPlugin;
    int threads = 0;  // 0 = hardware concurrency
    bool keep_trials = false;
};

/// Runs every scenario; results do not depend on the thread count.
OcRun run_oc(const std::vector<ScenarioSpec>& scenarios, const AccrualToxSetting& setting,
             int n_trials, std::uint64_t seed, const OcOptions& options);

std::string metrics_csv(const std::vector<Metrics>& rows, const std::string& design);
std::string inconsistency_csv(const std::vector<Metrics>& rows, const std::string& design);

}  // namespace podtpi::sim
