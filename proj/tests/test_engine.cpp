#include <gtest/gtest.h>

#include <fstream>

#include "podtpi/engine.hpp"
#include "podtpi/event_log.hpp"
#include "podtpi/special.hpp"

using namespace podtpi;
using namespace podtpi::engine;
using toxmodel::DecisionDistribution;

namespace {

DecisionDistribution dist(double de, double st, double es) {
    DecisionDistribution d;
    d.gamma = {de, st, es};
    const double best = std::max({de, st, es});
    d.a_star = de == best ? Decision::kDeescalate : st == best ? Decision::kStay : Decision::kEscalate;
    return d;
}

// Dose-2 history with `dlts` observed DLTs, `non` completed non-DLTs and
// pending patients at the given follow-ups, evaluated at day 100.
TrialState history(int dlts, int non, std::vector<double> pending, int n_doses = 3, int dose = 2) {
    DesignParams p = DesignParams::make(n_doses, 0.3, 0.05, 0.05);
    TrialState s = TrialState::start(p);
    int id = 0;
    for (int i = 0; i < dlts; ++i) {
        s = apply_event(s, Event::enrollment(0, ++id, dose));
    }
    for (int i = 0; i < non; ++i) s = apply_event(s, Event::enrollment(0, ++id, dose));
    for (int i = 1; i <= dlts; ++i) s = apply_event(s, Event::dlt(5, i, 5));
    std::sort(pending.rbegin(), pending.rend());
    for (double v : pending) s = apply_event(s, Event::enrollment(100 - v, ++id, dose));
    return apply_safety_rules(apply_event(s, Event::clock_advance(100)));
}

TrialState load_events(const std::string& file) {
    const auto params = design_from_json(json::parse(std::ifstream(std::string(PODTPI_DATA_DIR) + "/example_design.json")));
    return replay(params, read_event_log(std::string(PODTPI_DATA_DIR) + "/" + file));
}

}  // namespace

TEST(Recommend, TrialOneShapeDeescalates) {
    const TrialState s = history(2, 2, {15, 8});
    const auto rec = recommend(s, dist(0.58, 0.42, 0.0));
    EXPECT_EQ(rec.kind, ActionKind::kAssign);
    EXPECT_EQ(rec.dose, 1);
    EXPECT_EQ(rec.executed, Decision::kDeescalate);
}

TEST(Recommend, TrialTwoShapeSuspendsUnderFullEscalationConfidence) {
    const TrialState s = history(1, 3, {15, 8});
    const auto rec = recommend(s, dist(0.03, 0.30, 0.67));
    EXPECT_EQ(rec.kind, ActionKind::kSuspend);
    EXPECT_EQ(rec.reason, SuspendReason::kEscalationConfidence);
}

TEST(Recommend, NoPendingIsPlainDecisionTable) {
    const TrialState s = history(1, 2, {});
    const auto rec = recommend(s, DecisionDistribution::point_mass(Decision::kStay));
    EXPECT_EQ(rec.kind, ActionKind::kAssign);
    EXPECT_EQ(rec.dose, 2);
}

TEST(Recommend, StaySuspendsWhenDeescalationRiskHigh) {
    const TrialState s = history(1, 2, {10});
    EXPECT_EQ(recommend(s, dist(0.2, 0.8, 0.0)).kind, ActionKind::kSuspend);
    EXPECT_EQ(recommend(s, dist(0.1, 0.9, 0.0)).kind, ActionKind::kAssign);
}

TEST(Recommend, EscalationNeedsACompletedNonDlt) {
    const TrialState s = history(0, 0, {20, 10});
    const auto rec = recommend(s, dist(0.0, 0.0, 1.0));
    EXPECT_EQ(rec.kind, ActionKind::kSuspend);
    EXPECT_EQ(rec.reason, SuspendReason::kNoCompletedNonDlt);
}

TEST(Recommend, ClampsAtRangeEnds) {
    const TrialState top = history(0, 3, {}, 3, 3);
    const auto up = recommend(top, DecisionDistribution::point_mass(Decision::kEscalate));
    EXPECT_EQ(up.dose, 3);
    EXPECT_EQ(up.executed, Decision::kEscalate);
    const TrialState bottom = history(2, 1, {}, 3, 1);
    const auto down = recommend(bottom, DecisionDistribution::point_mass(Decision::kDeescalate));
    EXPECT_EQ(down.dose, 1);
}

TEST(Recommend, EscalationOntoExcludedDoseBecomesStay) {
    TrialState s = history(0, 3, {}, 3, 2);
    s.excluded_doses = {3};
    const auto rec = recommend(s, DecisionDistribution::point_mass(Decision::kEscalate));
    EXPECT_EQ(rec.kind, ActionKind::kAssign);
    EXPECT_EQ(rec.dose, 2);
}

TEST(Recommend, RejectsUnnormalizedDistribution) {
    const TrialState s = history(1, 2, {5});
    EXPECT_THROW(recommend(s, dist(0.5, 0.2, 0.0)), PodError);
}

TEST(Safety, LowestDoseFullyObservedTerminates) {
    const TrialState s = history(3, 0, {}, 3, 1);
    EXPECT_EQ(s.status.kind, TrialStatus::Kind::kTerminatedUnsafe);
    EXPECT_EQ(recommend(s, DecisionDistribution::point_mass(Decision::kDeescalate)).kind, ActionKind::kTerminate);
}

TEST(Safety, LowestDoseWithPendingSuspends) {
    const TrialState s = history(3, 0, {4}, 3, 1);
    EXPECT_EQ(s.status.kind, TrialStatus::Kind::kSuspended);
    EXPECT_EQ(s.status.reason, reason_name(SuspendReason::kLowestDoseSafetyPending));
}

TEST(Safety, HigherDoseExclusionPersistsAfterNonDlt) {
    TrialState s = history(3, 0, {10}, 4, 3);
    EXPECT_EQ(s.excluded_doses, (std::set<int>{3, 4}));
    // The pending patient completes without DLT: Pr(p > 0.3 | Beta(4, 2)) ~ 0.969.
    EXPECT_NEAR(mtpi2::prob_exceeds_target(3, 1, 0.3), 1.0 - special::beta_cdf(0.3, 4, 2), 1e-14);
    EXPECT_NEAR(mtpi2::prob_exceeds_target(3, 1, 0.3), 1.0 - (1.0 - 0.7 * 0.7 * 0.7 * 0.7 * 0.7 - 5 * 0.3 * 0.7 * 0.7 * 0.7 * 0.7 - 10 * 0.09 * 0.343 - 10 * 0.027 * 0.49),
                1e-12);
    s = apply_safety_rules(apply_event(s, Event::clock_advance(130)));
    EXPECT_EQ(tally(s, 3).m, 1);
    EXPECT_TRUE(s.is_excluded(3));
    EXPECT_FALSE(s.is_excluded(2));
}

TEST(Safety, ExcludedCurrentDoseForcesDeescalation) {
    TrialState s = history(3, 0, {}, 3, 2);
    ASSERT_TRUE(s.is_excluded(2));
    const auto rec = recommend(s, DecisionDistribution::point_mass(Decision::kStay));
    EXPECT_EQ(rec.kind, ActionKind::kAssign);
    EXPECT_EQ(rec.dose, 1);
}

TEST(Engine, WorkedTrialOneDeescalates) {
    const TrialState s = load_events("example_a_events.jsonl");
    const Engine eng(s.params, {});
    const auto rec = eng.next(s, 2024);
    ASSERT_EQ(rec.s_pmf.size(), 3u);
    EXPECT_NEAR(rec.s_pmf[0], 0.42, 0.05);
    EXPECT_NEAR(rec.s_pmf[1], 0.46, 0.05);
    EXPECT_NEAR(rec.s_pmf[2], 0.12, 0.05);
    EXPECT_EQ(rec.kind, ActionKind::kAssign);
    EXPECT_EQ(rec.dose, 1);
    EXPECT_EQ(rec.n_draws, 2000);
    EXPECT_EQ(rec.seed.value(), 2024u);
}

TEST(Engine, WorkedTrialTwoThenLaterArrival) {
    TrialState s = load_events("example_b_events.jsonl");
    const Engine eng(s.params, {});
    const auto rec = eng.next(s, 7);
    EXPECT_NEAR(rec.s_pmf[0], 0.67, 0.05);
    EXPECT_NEAR(rec.s_pmf[1], 0.30, 0.05);
    EXPECT_NEAR(rec.s_pmf[2], 0.03, 0.05);
    EXPECT_EQ(rec.kind, ActionKind::kSuspend);
    s = step_trial(s, rec, 63.0);
    EXPECT_EQ(s.turned_away, 1);
    EXPECT_EQ(s.status.kind, TrialStatus::Kind::kSuspended);
    // Both pending patients turn out to have DLTs before the day-77 arrival.
    s = apply_event(s, Event::dlt(68, 5, 20));
    s = apply_event(s, Event::dlt(73, 6, 18));
    s = apply_event(s, Event::clock_advance(77));
    const auto later = eng.next(s, 8);
    EXPECT_EQ(later.kind, ActionKind::kAssign);
    EXPECT_EQ(later.dose, 1);
    s = step_trial(s, later, 77.0);
    EXPECT_EQ(s.enrolled(), 7);
    EXPECT_EQ(s.current_dose, 1);
}

TEST(Engine, SameSeedReproducesRecommendation) {
    const TrialState s = load_events("example_a_events.jsonl");
    const Engine eng(s.params, {});
    EXPECT_EQ(recommendation_to_json(eng.next(s, 5)), recommendation_to_json(eng.next(s, 5)));
}

TEST(Engine, CompleteDataDesignWaits) {
    const TrialState s = load_events("example_a_events.jsonl");
    const Engine eng(s.params, {DesignKind::kCompleteData, {}, toxmodel::SPosteriorMethod::kPlugin});
    const auto rec = eng.next(s, 1);
    EXPECT_EQ(rec.kind, ActionKind::kSuspend);
    EXPECT_EQ(rec.reason, SuspendReason::kAwaitingCompleteData);
}

TEST(StepTrial, RejectsArrivalsAfterCompletion) {
    DesignParams p = DesignParams::make(3, 0.3, 0.05, 0.05);
    p.cohort_size = 1;
    p.max_n = 1;
    TrialState s = TrialState::start(p);
    Recommendation rec;
    rec.kind = ActionKind::kAssign;
    rec.dose = 1;
    s = step_trial(s, rec, 1.0);
    EXPECT_EQ(s.status.kind, TrialStatus::Kind::kCompleted);
    try {
        step_trial(s, rec, 2.0);
        FAIL();
    } catch (const PodError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kConflict);
    }
}

TEST(AuditRecord, CarriesContractFields) {
    const TrialState s = load_events("example_a_events.jsonl");
    const json j = recommendation_to_json(Engine(s.params, {}).next(s, 3));
    for (const char* key : {"time", "dose", "n", "m", "r", "follow_ups", "gamma", "a_star", "action", "rules", "s_pmf", "seed", "n_draws"})
        EXPECT_TRUE(j.contains(key)) << key;
}
