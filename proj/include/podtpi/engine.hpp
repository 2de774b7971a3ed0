#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "podtpi/core.hpp"
#include "podtpi/mtpi2.hpp"
#include "podtpi/toxmodel.hpp"

namespace podtpi::engine {

enum class ActionKind { kAssign, kSuspend, kTerminate };

enum class SuspendReason {
    kNone,
    kEscalationConfidence,   // gamma_{+1} below pi_E
    kNoCompletedNonDlt,      // m_d = 0 guard on escalation
    kDeescalationRisk,       // gamma_{-1} above pi_D
    kLowestDoseSafetyPending,
    kAwaitingCompleteData,   // complete-data design waiting for outcomes
};

const char* reason_name(SuspendReason r);
const char* action_name(ActionKind k);

// Rule identifiers reported in Recommendation::triggered_rules.
inline constexpr const char* kRuleSafety1 = "safety-rule-1";
inline constexpr const char* kRuleSafety2 = "safety-rule-2";
inline constexpr const char* kRuleBoundary = "boundary-clamp";
inline constexpr const char* kRuleExclusionClamp = "exclusion-clamp";
inline constexpr const char* kRuleEscalationConfidence = "escalation-confidence";
inline constexpr const char* kRuleNoCompletedNonDlt = "m_d-zero";
inline constexpr const char* kRuleDeescalationRisk = "de-escalation-risk";

struct Recommendation {
    ActionKind kind = ActionKind::kSuspend;
    int dose = 0;                        // assigned dose when kind == kAssign
    SuspendReason reason = SuspendReason::kNone;
    toxmodel::DecisionDistribution gamma;
    Decision a_star = Decision::kStay;
    /// Decision the assignment carries out before range and exclusion
    /// clamping. Compared against the complete-data decision when auditing.
    Decision executed = Decision::kStay;
    std::vector<std::string> triggered_rules;

    // Context of the decision point.
    double time = 0.0;
    int current_dose = 0;
    DoseTally tally;
    std::vector<double> s_pmf;
    std::optional<std::uint64_t> seed;
    int n_draws = 0;
};

struct SafetyStatus {
    std::set<int> excluded;
    bool lowest_dose_unsafe = false;  // safety rule 1 condition holds
    bool lowest_dose_pending = false;
};

/// Evaluates both safety rules on observed outcomes only; exclusions are
/// recomputed from scratch so doses come back when the data allow.
SafetyStatus evaluate_safety(const TrialState& state);

/// Applies evaluate_safety to the state: updates exclusions, terminates or
/// suspends on safety rule 1, and lifts a safety suspension once cleared.
TrialState apply_safety_rules(TrialState state);

/// Dose-assignment rule at the current dose given its decision distribution.
/// Expects apply_safety_rules to have run on `state`.
Recommendation recommend(const TrialState& state, const toxmodel::DecisionDistribution& dist);

enum class DesignKind {
    kPodTpi,
    kCompleteData,  // mTPI-2 waiting for every outcome before each decision
};

struct EngineConfig {
    DesignKind design = DesignKind::kPodTpi;
    toxmodel::McmcConfig mcmc;
    toxmodel::SPosteriorMethod method = toxmodel::SPosteriorMethod::kPlugin;
};

/// Binds the design parameters to a precomputed decision table and time
/// grid. Immutable; safe to share across threads.
class Engine {
public:
    Engine(DesignParams params, EngineConfig config);

    const DesignParams& params() const { return params_; }
    const EngineConfig& config() const { return config_; }
    const mtpi2::DecisionRule& rule() const { return rule_; }
    const toxmodel::TimeGrid& grid() const { return grid_; }

    /// Posterior decision distribution at `dose`. Runs the sampler only when
    /// the dose has pending patients.
    toxmodel::DecisionDistribution decision_distribution(const TrialState& state, int dose,
                                                         std::uint64_t seed,
                                                         std::vector<double>* s_pmf = nullptr,
                                                         int* n_draws = nullptr) const;

    /// Full decision point: safety rules, then the design's assignment rule.
    Recommendation next(const TrialState& state, std::uint64_t seed) const;

private:
    DesignParams params_;
    EngineConfig config_;
    mtpi2::DecisionRule rule_;
    toxmodel::TimeGrid grid_;
};

/// Carries out a recommendation for a patient arriving at `arrival_time`.
/// Assign enrolls the patient; Suspend turns the patient away; Terminate
/// ends the trial.
TrialState step_trial(TrialState state, const Recommendation& rec, double arrival_time,
                      std::optional<int> patient_id = std::nullopt);

nlohmann::json gamma_to_json(const toxmodel::DecisionDistribution& d);
nlohmann::json recommendation_to_json(const Recommendation& rec);

}  // namespace podtpi::engine
