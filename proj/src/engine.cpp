#include "podtpi/engine.hpp"

#include <algorithm>
#include <cmath>

namespace podtpi::engine {

using toxmodel::DecisionDistribution;

const char* reason_name(SuspendReason r) {
    switch (r) {
        case SuspendReason::kNone: return "none";
        case SuspendReason::kEscalationConfidence: return "escalation-confidence";
        case SuspendReason::kNoCompletedNonDlt: return "m_d-zero";
        case SuspendReason::kDeescalationRisk: return "de-escalation-risk";
        case SuspendReason::kLowestDoseSafetyPending: return "lowest-dose-safety-pending";
        case SuspendReason::kAwaitingCompleteData: return "awaiting-complete-data";
    }
    return "?";
}

const char* action_name(ActionKind k) {
    switch (k) {
        case ActionKind::kAssign: return "assign";
        case ActionKind::kSuspend: return "suspend";
        case ActionKind::kTerminate: return "terminate";
    }
    return "?";
}

SafetyStatus evaluate_safety(const TrialState& state) {
    const auto& params = state.params;
    SafetyStatus out;
    for (int d = 1; d <= params.n_doses; ++d) {
        const DoseTally t = tally(state, d);
        if (t.observed() >= params.safety_min_n &&
            mtpi2::prob_exceeds_target(t.n, t.m, params.target) > params.safety_cutoff) {
            for (int e = d; e <= params.n_doses; ++e) out.excluded.insert(e);
            if (d == 1) {
                out.lowest_dose_unsafe = true;
                out.lowest_dose_pending = t.r > 0;
            }
            break;
        }
    }
    return out;
}

TrialState apply_safety_rules(TrialState state) {
    if (state.status.kind == TrialStatus::Kind::kTerminatedUnsafe) return state;
    const SafetyStatus safety = evaluate_safety(state);
    state.excluded_doses = safety.excluded;
    const std::string pending_reason = reason_name(SuspendReason::kLowestDoseSafetyPending);
    if (safety.lowest_dose_unsafe) {
        if (safety.lowest_dose_pending) {
            if (!state.status.finished()) {
                state.status.kind = TrialStatus::Kind::kSuspended;
                state.status.reason = pending_reason;
            }
        } else {
            state.status.kind = TrialStatus::Kind::kTerminatedUnsafe;
            state.status.reason = "lowest dose exceeds the toxicity target";
        }
    } else if (state.status.kind == TrialStatus::Kind::kSuspended &&
               state.status.reason == pending_reason) {
        state.status.kind = TrialStatus::Kind::kEnrolling;
        state.status.reason.clear();
    }
    return state;
}

namespace {

// Highest non-excluded dose not above `limit`, or 0 if none.
int highest_allowed(const TrialState& state, int limit) {
    for (int d = std::min(limit, state.params.n_doses); d >= 1; --d)
        if (!state.is_excluded(d)) return d;
    return 0;
}

Recommendation assign(const TrialState& state, Decision decision, Recommendation rec) {
    const int d = state.current_dose;
    int target = d + to_int(decision);
    if (target < 1 || target > state.params.n_doses) {
        target = std::clamp(target, 1, state.params.n_doses);
        rec.triggered_rules.push_back(kRuleBoundary);
    }
    if (state.is_excluded(target)) {
        target = highest_allowed(state, std::min(d, target));
        if (target == d) rec.triggered_rules.push_back(kRuleExclusionClamp);
        else rec.triggered_rules.push_back(kRuleSafety2);
    }
    if (target == 0) {
        rec.kind = ActionKind::kTerminate;
        rec.triggered_rules.push_back(kRuleSafety1);
        return rec;
    }
    rec.kind = ActionKind::kAssign;
    rec.dose = target;
    rec.executed = decision;
    return rec;
}

Recommendation suspend(SuspendReason reason, const char* rule, Recommendation rec) {
    rec.kind = ActionKind::kSuspend;
    rec.reason = reason;
    rec.triggered_rules.push_back(rule);
    return rec;
}

}  // namespace

Recommendation recommend(const TrialState& state, const DecisionDistribution& dist) {
    const int d = state.current_dose;
    require_dose(state.params, d);
    if (!dist.normalized()) fail(ErrorKind::kInvalidArgument, "decision distribution is not normalized");

    Recommendation rec;
    rec.time = state.clock;
    rec.current_dose = d;
    rec.tally = tally(state, d);
    rec.gamma = dist;
    rec.a_star = dist.a_star;

    if (state.status.kind == TrialStatus::Kind::kTerminatedUnsafe) {
        rec.kind = ActionKind::kTerminate;
        rec.triggered_rules.push_back(kRuleSafety1);
        return rec;
    }
    if (state.status.kind == TrialStatus::Kind::kSuspended &&
        state.status.reason == reason_name(SuspendReason::kLowestDoseSafetyPending))
        return suspend(SuspendReason::kLowestDoseSafetyPending, kRuleSafety1, std::move(rec));

    // The current dose has been excluded since the last assignment.
    if (state.is_excluded(d)) {
        rec.triggered_rules.push_back(kRuleSafety2);
        const int lower = highest_allowed(state, d - 1);
        if (lower == 0) {
            rec.kind = ActionKind::kTerminate;
            rec.triggered_rules.push_back(kRuleSafety1);
            return rec;
        }
        rec.kind = ActionKind::kAssign;
        rec.dose = lower;
        rec.executed = Decision::kDeescalate;
        return rec;
    }

    const auto& params = state.params;
    if (rec.tally.r == 0) return assign(state, dist.a_star, std::move(rec));

    switch (dist.a_star) {
        case Decision::kEscalate: {
            // Confidence shortfall computed from the complementary mass so that
            // pi_E = 1 suspends whenever any outcome could contradict escalation.
            const double against = dist[Decision::kDeescalate] + dist[Decision::kStay];
            if (against > 1.0 - params.pi_escalate)
                return suspend(SuspendReason::kEscalationConfidence, kRuleEscalationConfidence,
                               std::move(rec));
            if (rec.tally.m == 0)
                return suspend(SuspendReason::kNoCompletedNonDlt, kRuleNoCompletedNonDlt,
                               std::move(rec));
            return assign(state, Decision::kEscalate, std::move(rec));
        }
        case Decision::kStay:
            if (dist[Decision::kDeescalate] > params.pi_deescalate)
                return suspend(SuspendReason::kDeescalationRisk, kRuleDeescalationRisk, std::move(rec));
            return assign(state, Decision::kStay, std::move(rec));
        case Decision::kDeescalate:
            return assign(state, Decision::kDeescalate, std::move(rec));
    }
    return rec;
}

Engine::Engine(DesignParams params, EngineConfig config)
    : params_((params.normalize(), std::move(params))),
      config_(config),
      rule_(mtpi2::build_partition(params_.target, params_.eps1, params_.eps2), params_.max_n),
      grid_(params_.window, params_.n_bins) {}

DecisionDistribution Engine::decision_distribution(const TrialState& state, int dose,
                                                   std::uint64_t seed, std::vector<double>* s_pmf,
                                                   int* n_draws) const {
    const DoseTally t = tally(state, dose);
    std::vector<double> pmf{1.0};
    int draws = 0;
    if (t.r > 0) {
        const toxmodel::ToxData data = toxmodel::collect_data(state, grid_);
        toxmodel::McmcConfig mc = config_.mcmc;
        mc.seed = seed;
        const auto post = toxmodel::sample_posterior(data, grid_, toxmodel::Priors::from(state.params), mc);
        pmf = toxmodel::s_posterior(post, dose, t.follow_ups, grid_, config_.method).pmf;
        draws = post.n_draws;
    }
    if (s_pmf) *s_pmf = pmf;
    if (n_draws) *n_draws = draws;
    return toxmodel::pod(pmf, t.n, t.m, t.r, rule_);
}

Recommendation Engine::next(const TrialState& in, std::uint64_t seed) const {
    const TrialState state = apply_safety_rules(in);
    const int d = state.current_dose;
    const DoseTally t = tally(state, d);

    if (config_.design == DesignKind::kCompleteData && state.pending_total() > 0 &&
        !state.status.finished()) {
        Recommendation rec;
        rec.time = state.clock;
        rec.current_dose = d;
        rec.tally = t;
        rec.gamma = DecisionDistribution::point_mass(rule_(t.n, t.m));
        rec.a_star = rec.gamma.a_star;
        // Safety rules still take precedence over waiting.
        if (state.status.kind == TrialStatus::Kind::kTerminatedUnsafe) return recommend(state, rec.gamma);
        return suspend(SuspendReason::kAwaitingCompleteData, reason_name(SuspendReason::kAwaitingCompleteData),
                       std::move(rec));
    }

    std::vector<double> pmf;
    int draws = 0;
    const bool needs_posterior = t.r > 0 && !state.status.finished() && !state.is_excluded(d);
    DecisionDistribution dist = needs_posterior
                                    ? decision_distribution(state, d, seed, &pmf, &draws)
                                    : DecisionDistribution::point_mass(rule_(t.n, t.m));
    if (!needs_posterior) pmf = {1.0};
    Recommendation rec = recommend(state, dist);
    rec.s_pmf = std::move(pmf);
    rec.n_draws = draws;
    if (needs_posterior) rec.seed = seed;
    return rec;
}

TrialState step_trial(TrialState state, const Recommendation& rec, double arrival_time,
                      std::optional<int> patient_id) {
    if (state.status.finished())
        fail(ErrorKind::kConflict, std::string("trial is ") + status_name(state.status.kind));
    state = apply_event(std::move(state), Event::clock_advance(arrival_time));
    switch (rec.kind) {
        case ActionKind::kAssign: {
            state.status = {};
            const int id = patient_id ? *patient_id : state.next_patient_id();
            state = apply_event(std::move(state), Event::enrollment(arrival_time, id, rec.dose));
            break;
        }
        case ActionKind::kSuspend:
            state.status.kind = TrialStatus::Kind::kSuspended;
            state.status.reason = reason_name(rec.reason);
            ++state.turned_away;
            break;
        case ActionKind::kTerminate:
            state.status.kind = TrialStatus::Kind::kTerminatedUnsafe;
            state.status.reason = "lowest dose exceeds the toxicity target";
            break;
    }
    return state;
}

nlohmann::json gamma_to_json(const DecisionDistribution& d) {
    return {{"-1", d.gamma[0]}, {"0", d.gamma[1]}, {"1", d.gamma[2]}};
}

nlohmann::json recommendation_to_json(const Recommendation& rec) {
    nlohmann::json j = {
        {"time", rec.time},
        {"dose", rec.current_dose},
        {"n", rec.tally.n},
        {"m", rec.tally.m},
        {"r", rec.tally.r},
        {"follow_ups", rec.tally.follow_ups},
        {"gamma", gamma_to_json(rec.gamma)},
        {"a_star", to_int(rec.a_star)},
        {"action", action_name(rec.kind)},
        {"rules", rec.triggered_rules},
        {"s_pmf", rec.s_pmf},
        {"n_draws", rec.n_draws},
    };
    if (rec.kind == ActionKind::kAssign) {
        j["assigned_dose"] = rec.dose;
        j["decision"] = to_int(rec.executed);
        j["decision_name"] = decision_name(rec.executed);
    }
    if (rec.kind == ActionKind::kSuspend) j["suspend_reason"] = reason_name(rec.reason);
    j["seed"] = rec.seed ? nlohmann::json(*rec.seed) : nlohmann::json(nullptr);
    return j;
}

}  // namespace podtpi::engine
