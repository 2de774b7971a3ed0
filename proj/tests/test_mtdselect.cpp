#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "podtpi/mtdselect.hpp"

using namespace podtpi;
using namespace podtpi::mtdselect;

TEST(PosteriorMoments, ClosedForms) {
    auto mv = posterior_mean_var(0, 0);
    EXPECT_DOUBLE_EQ(mv.mean, 0.5);
    EXPECT_DOUBLE_EQ(mv.var, 1.0 / 12);
    mv = posterior_mean_var(1, 2);  // Beta(2, 3)
    EXPECT_DOUBLE_EQ(mv.mean, 0.4);
    EXPECT_NEAR(mv.var, 0.04, 1e-15);
    mv = posterior_mean_var(6, 0);  // Beta(7, 1)
    EXPECT_DOUBLE_EQ(mv.mean, 7.0 / 8);
    EXPECT_NEAR(mv.var, 7.0 / 576, 1e-15);
}

TEST(Pava, SmallExamples) {
    EXPECT_EQ(pava({0.1, 0.2, 0.3}, {1, 1, 1}).p_hat, (std::vector<double>{0.1, 0.2, 0.3}));
    const auto pair = pava({0.3, 0.1}, {1, 1});
    EXPECT_NEAR(pair.p_hat[0], 0.2, 1e-15);
    EXPECT_NEAR(pair.p_hat[1], 0.2, 1e-15);
    const auto fit = pava({0.3, 0.1, 0.4}, {1, 3, 1});
    EXPECT_NEAR(fit.p_hat[0], 0.15, 1e-15);
    EXPECT_NEAR(fit.p_hat[1], 0.15, 1e-15);
    EXPECT_NEAR(fit.p_hat[2], 0.4, 1e-15);
    EXPECT_EQ(fit.block, (std::vector<int>{0, 0, 1}));
}

TEST(Pava, MatchesBruteForceProjection) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> wd(0.05, 20.0);
    for (int rep = 0; rep < 3000; ++rep) {
        const int d = 1 + rep % 6;
        std::vector<double> y(d), w(d);
        for (int i = 0; i < d; ++i) {
            y[i] = u(rng);
            w[i] = wd(rng);
        }
        const auto fit = pava(y, w).p_hat;
        const auto ref = oracle::brute_force_isotonic(y, w);
        for (int i = 0; i < d; ++i) EXPECT_NEAR(fit[i], ref[i], 1e-8);
        for (int i = 1; i < d; ++i) EXPECT_LE(fit[i - 1], fit[i]);
        // Scaling the weights leaves the fit unchanged.
        for (double& x : w) x *= 7.5;
        const auto scaled = pava(y, w).p_hat;
        for (int i = 0; i < d; ++i) EXPECT_NEAR(fit[i], scaled[i], 1e-12);
    }
}

TEST(SelectMtd, SelectionBranches) {
    const auto part = mtpi2::build_partition(0.3, 0.05, 0.05);
    auto sel = select_mtd({0.10, 0.30, 0.50}, part);
    EXPECT_EQ(sel.index.value(), 1);
    EXPECT_EQ(sel.branch, Branch::kSingleInterval);
    sel = select_mtd({0.05, 0.10, 0.15}, part);
    EXPECT_EQ(sel.index.value(), 2);
    EXPECT_EQ(sel.branch, Branch::kHighestUnder);
    sel = select_mtd({0.25, 0.25, 0.60}, part);
    EXPECT_EQ(sel.index.value(), 1);
    EXPECT_EQ(sel.branch, Branch::kClosestBelow);
    sel = select_mtd({0.27, 0.34}, part);
    EXPECT_EQ(sel.index.value(), 0);
    sel = select_mtd({0.32, 0.34}, part);
    EXPECT_EQ(sel.index.value(), 0);
    EXPECT_EQ(sel.branch, Branch::kClosest);
    sel = select_mtd({0.5, 0.7}, part);
    EXPECT_FALSE(sel.index);
    EXPECT_EQ(sel.branch, Branch::kNone);
    EXPECT_THROW(select_mtd({0.4, 0.2}, part), PodError);
}

namespace {

TrialState completed(const std::vector<std::pair<int, int>>& tallies) {
    DesignParams p = DesignParams::make(static_cast<int>(tallies.size()), 0.3, 0.05, 0.05);
    p.max_n = 100;
    TrialState s = TrialState::start(p);
    int id = 0;
    for (std::size_t d = 0; d < tallies.size(); ++d) {
        const auto [n, m] = tallies[d];
        for (int i = 0; i < n + m; ++i) s = apply_event(s, Event::enrollment(0, ++id, static_cast<int>(d) + 1));
    }
    id = 0;
    for (std::size_t d = 0; d < tallies.size(); ++d) {
        const auto [n, m] = tallies[d];
        for (int i = 0; i < n; ++i) s = apply_event(s, Event::dlt(10, id + i + 1, 10));
        id += n + m;
    }
    return apply_event(s, Event::clock_advance(40));
}

}  // namespace

TEST(Finalize, PipelineAgainstHandComputation) {
    // Tallies (n, m) = (0, 6), (2, 4), (4, 2). Dose 3 has Pr(p > 0.3) = 0.9712 under
    // Beta(5, 3), so it is excluded and left out of the fit. Beta means 1/8, 3/8 are
    // monotone; neither lies in [0.25, 0.35]; the highest underdosing dose is dose 1.
    const auto r = finalize(completed({{0, 6}, {2, 4}, {4, 2}}));
    EXPECT_EQ(r.doses, (std::vector<int>{1, 2}));
    ASSERT_EQ(r.p_hat.size(), 2u);
    EXPECT_NEAR(r.p_tilde[0], 1.0 / 8, 1e-15);
    EXPECT_NEAR(r.p_tilde[1], 3.0 / 8, 1e-15);
    EXPECT_NEAR(r.nu[1], 3.0 * 5 / (64.0 * 9), 1e-15);
    EXPECT_EQ(r.selected.value(), 1);
    EXPECT_EQ(r.branch, Branch::kHighestUnder);
}

TEST(Finalize, SelectsEquivalenceDoseAndSkipsUntreated) {
    // Dose 2 at (2, 5) has mean 3/9 = 0.333; dose 3 untreated.
    const auto r = finalize(completed({{0, 6}, {2, 5}, {0, 0}}));
    EXPECT_EQ(r.doses, (std::vector<int>{1, 2}));
    EXPECT_EQ(r.selected.value(), 2);
}

TEST(Finalize, SingleDoseTrial) {
    // (1, 5): Beta(2, 6) mean 0.25, on the closed lower edge of the interval.
    const auto r = finalize(completed({{1, 5}}));
    EXPECT_EQ(r.selected.value(), 1);
}

TEST(Finalize, TerminatedTrialHasNoMtd) {
    const auto r = finalize(completed({{3, 0}, {0, 0}}));
    EXPECT_FALSE(r.selected);
    EXPECT_EQ(r.branch, Branch::kTerminated);
    EXPECT_TRUE(report_to_json(r)["selected"].is_null());
}

TEST(Finalize, ExcludedDoseNeverSelected) {
    // Dose 3 at (3, 0) is excluded by the safety rule on final data.
    const auto r = finalize(completed({{0, 3}, {1, 5}, {3, 0}}));
    EXPECT_EQ(r.doses, (std::vector<int>{1, 2}));
    EXPECT_NE(r.selected.value_or(0), 3);
}

TEST(Finalize, RefusesPendingOutcomes) {
    DesignParams p = DesignParams::make(2, 0.3, 0.05, 0.05);
    TrialState s = TrialState::start(p);
    s = apply_event(s, Event::enrollment(0, 1, 1));
    EXPECT_THROW(finalize(s), PodError);
}
