// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "oracles.hpp"
#include "podtpi/engine.hpp"
#include "podtpi/event_log.hpp"
#include "podtpi/mtdselect.hpp"
#include "podtpi/mtpi2.hpp"
#include "podtpi/special.hpp"
#include "podtpi/simulator.hpp"
#include "podtpi/toxmodel.hpp"

using namespace podtpi;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

TrialState load_tally(const std::string& file) {
    std::ifstream in(std::string(PODTPI_DATA_DIR) + "/" + file);
    return state_from_tally_json(json::parse(in));
}

void worked_trials() {
    constexpr double tol = 0.05;
    toxmodel::McmcConfig mc;
    mc.n_iter = 3000;
    mc.burn_in = 1000;
    struct Case {
        const char* file;
        std::array<double, 3> expected;
    };
    const Case cases[] = {{"example_a_tally.json", {0.42, 0.46, 0.12}}, {"example_b_tally.json", {0.67, 0.30, 0.03}}};
    bool ok = true;
    std::string detail;
    double slowest = 0.0;
    for (int c = 0; c < 2; ++c) {
        const TrialState st = load_tally(cases[c].file);
        const engine::Engine eng(st.params, {engine::DesignKind::kPodTpi, mc, toxmodel::SPosteriorMethod::kPlugin});
        const auto t0 = std::chrono::steady_clock::now();
        const auto rec = eng.next(st, 2024);
        slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        for (int s = 0; s < 3; ++s) ok = ok && rec.s_pmf.size() == 3 && std::abs(rec.s_pmf[s] - cases[c].expected[s]) <= tol;
        if (c == 0)
            ok = ok && rec.kind == engine::ActionKind::kAssign && rec.executed == Decision::kDeescalate;
        else
            ok = ok && rec.kind == engine::ActionKind::kSuspend;
        detail += fmt("trial%d pmf=(%.3f,%.3f,%.3f) %s; ", c + 1, rec.s_pmf[0], rec.s_pmf[1], rec.s_pmf[2],
                      engine::action_name(rec.kind));
    }
    ok = ok && slowest < 10.0;
    report("worked-trials-replay", ok, detail + fmt("tol=%.2f slowest=%.2fs", tol, slowest));
}

void anchors_and_safety() {
    const auto part = mtpi2::build_partition(0.3, 0.05, 0.05);
    const bool anchors = mtpi2::decide(0, 3, part) == Decision::kEscalate &&
                         mtpi2::decide(1, 2, part) == Decision::kStay &&
                         mtpi2::decide(2, 1, part) == Decision::kDeescalate &&
                         mtpi2::decide(3, 0, part) == Decision::kDeescalate;
    const double closed = 1.0 - std::pow(0.3, 4);
    const double lib = mtpi2::prob_exceeds_target(3, 0, 0.3);

    DesignParams p;
    p.target = 0.3;
    p.eps1 = p.eps2 = 0.05;
    p.n_doses = 3;
    p.normalize();
    TrialState st = TrialState::start(p);
    for (int i = 1; i <= 3; ++i) st = apply_event(std::move(st), Event::enrollment(i, i, 1));
    for (int i = 1; i <= 3; ++i) st = apply_event(std::move(st), Event::dlt(10 + i, i, 10.0));
    st = engine::apply_safety_rules(std::move(st));
    const bool triggers = closed > 0.95 && std::abs(lib - closed) <= 1e-12 &&
                          st.status.kind == TrialStatus::Kind::kTerminatedUnsafe;
    report("decision-anchors-safety", anchors && triggers,
           fmt("anchors %s; Pr(p>0.3|3,0)=%.6f closed=%.6f tol=1e-12", anchors ? "ok" : "wrong", lib, closed));
}

void hard_safety() {
    const int ids[] = {6, 16, 26, 36, 46};
    constexpr int per_scenario = 40;
    std::vector<sim::ScenarioSpec> scs;
    for (int id : ids) scs.push_back(sim::bundled_scenario(id));
    sim::OcOptions opt;
    opt.pi_escalate = 1.0;
    opt.pi_deescalate = 0.15;
    const auto a = sim::run_oc(scs, sim::setting(1), per_scenario, 7, opt);
    opt.pi_deescalate = 0.0;
    const auto b = sim::run_oc(scs, sim::setting(1), per_scenario, 8, opt);
    auto count = [](const sim::OcRun& r, sim::Inconsistency t) {
        long c = 0;
        for (const auto& m : r.per_scenario) c += m.inconsistency_counts[static_cast<int>(t) - 1];
        return c;
    };
    using I = sim::Inconsistency;
    const long de = count(a, I::kDE) + count(b, I::kDE);
    const long se = count(a, I::kSE) + count(b, I::kSE);
    const long ds = count(b, I::kDS);
    report("hard-safety-invariants", de == 0 && se == 0 && ds == 0,
           fmt("%d trials x2 on 5 scenarios; DE=%ld SE=%ld DS(piD=0)=%ld", 5 * per_scenario, de, se, ds));
}

void oracle_equivalences() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    double pb_err = 0.0;
    for (int r = 0; r <= 12; ++r)
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> q(r);
            for (double& x : q) x = u(rng);
            const auto got = toxmodel::poisson_binomial_pmf(q);
            const auto ref = oracle::enumerate_poisson_binomial(q);
            for (int s = 0; s <= r; ++s) pb_err = std::max(pb_err, std::abs(got[s] - ref[s]));
        }

    double pava_err = 0.0;
    for (int rep = 0; rep < 2000; ++rep) {
        const int d = 1 + static_cast<int>(u(rng) * 6);
        std::vector<double> y(d), w(d);
        for (int i = 0; i < d; ++i) {
            y[i] = u(rng);
            w[i] = 0.1 + 10 * u(rng);
        }
        const auto got = mtdselect::pava(y, w).p_hat;
        const auto ref = oracle::brute_force_isotonic(y, w);
        for (int i = 0; i < d; ++i) pava_err = std::max(pava_err, std::abs(got[i] - ref[i]));
    }

    const auto part = mtpi2::build_partition(0.3, 0.05, 0.05);
    double riemann_err = 0.0;
    for (int n = 0; n <= 12; ++n)
        for (int m = 0; n + m <= 12; ++m) {
            const auto got = mtpi2::model_posterior(n, m, part).probs;
            const auto ref = oracle::riemann_model_posterior(n, m, 0.3, 0.05, 0.05, 1000000);
            for (std::size_t k = 0; k < got.size(); ++k) riemann_err = std::max(riemann_err, std::abs(got[k] - ref[k]));
        }

    const toxmodel::TimeGrid grid(28.0, 3);
    toxmodel::ToxData data;
    data.n = {2, 1};
    data.m = {4, 6};
    data.pending = {{}, {}};
    data.dlt_bin_counts = {1, 1, 1};
    toxmodel::McmcConfig mc;
    mc.n_iter = 1000 + 20 * 1500;
    mc.burn_in = 1000;
    mc.thin = 20;
    mc.seed = 3;
    const auto draws = toxmodel::sample_posterior(data, grid, {{{1, 1}, {1, 1}}, {1, 1, 1}}, mc);
    double ks_worst = 0.0;
    for (int d = 1; d <= 2; ++d) {
        const auto row = draws.p_row(d);
        const double a = 1 + data.n[d - 1], b = 1 + data.m[d - 1];
        const double ks = oracle::ks_statistic({row.begin(), row.end()},
                                               [&](double x) { return special::beta_cdf(x, a, b); });
        ks_worst = std::max(ks_worst, ks / oracle::ks_critical_1pct(row.size()));
    }

    const bool ok = pb_err <= 1e-12 && pava_err <= 1e-8 && riemann_err <= 1e-6 && ks_worst < 1.0;
    report("oracle-equivalences", ok,
           fmt("poisson-binomial %.1e (tol 1e-12); pava %.1e (tol 1e-8); riemann %.1e (tol 1e-6); "
               "KS/crit1%% %.2f (<1)",
               pb_err, pava_err, riemann_err, ks_worst));
}

void generator() {
    double worst = 0.0;
    for (double p : {0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.86})
        for (double a : {0.2, 0.5, 0.8})
            for (double g : {0.25, 0.5, 0.75}) {
                const auto w = sim::weibull_params(p, a, g, 28.0);
                worst = std::max(worst, std::abs(sim::weibull_cdf(28.0, w) - p));
                worst = std::max(worst, std::abs(sim::weibull_cdf((1 - g) * 28.0, w) - (1 - a) * p));
            }
    std::mt19937_64 rng(17);
    constexpr int n = 10000;
    bool in_ci = true;
    std::string detail;
    for (int s = 1; s <= 4; ++s) {
        const auto set = sim::setting(s);
        const double p = 0.3;
        std::uniform_real_distribution<double> u(0.0, p);
        int late = 0;
        for (int i = 0; i < n; ++i)
            late += sim::dlt_time_from_uniform(u(rng), p, set.alpha, set.gamma, 28.0) > (1 - set.gamma) * 28.0;
        const double frac = static_cast<double>(late) / n;
        const double half = 1.96 * std::sqrt(set.alpha * (1 - set.alpha) / n);
        in_ci = in_ci && std::abs(frac - set.alpha) <= half;
        detail += fmt("S%d late=%.4f (alpha %.2f +-%.4f); ", s, frac, set.alpha, half);
    }
    report("generator-correctness", worst <= 1e-10 && in_ci,
           fmt("quantile err %.1e (tol 1e-10); ", worst) + detail);
}

void desk_oc() {
    const int ids[] = {6, 16, 26, 36, 46, 56};
    constexpr int n_trials = 300;
    std::vector<sim::ScenarioSpec> scs;
    for (int id : ids) scs.push_back(sim::bundled_scenario(id));
    sim::OcOptions opt;
    opt.keep_trials = true;
    opt.design = engine::DesignKind::kPodTpi;
    const auto pod = sim::run_oc(scs, sim::setting(1), n_trials, 2024, opt);
    opt.design = engine::DesignKind::kCompleteData;
    const auto base = sim::run_oc(scs, sim::setting(1), n_trials, 2024, opt);

    long shorter = 0, total = 0;
    double gap = 0.0;
    for (std::size_t s = 0; s < scs.size(); ++s)
        for (int i = 0; i < n_trials; ++i) {
            const double dp = pod.trials[s][i].duration, db = base.trials[s][i].duration;
            shorter += dp < db;
            gap += db - dp;
            ++total;
        }
    const double frac = static_cast<double>(shorter) / total;
    const double mean_gap = gap / total;
    const double dpcs = pod.overall.pcs - base.overall.pcs;
    const bool ok = frac >= 0.95 && mean_gap >= 40.0 && std::abs(dpcs) <= 6.0;
    report("desk-operating-chars", ok,
           fmt("shorter in %.1f%% of %ld paired trials (need >=95); mean gap %.1f days (need >=40); "
               "PCS %.1f vs %.1f, |diff| %.1f (need <=6)",
               100 * frac, total, mean_gap, pod.overall.pcs, base.overall.pcs, std::abs(dpcs)));
}

void normalization() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const mtpi2::DecisionRule rule(mtpi2::build_partition(0.3, 0.05, 0.05), 40);
    double worst = 0.0;
    for (int rep = 0; rep < 10000; ++rep) {
        const int r = static_cast<int>(u(rng) * 9);
        const int n = static_cast<int>(u(rng) * 10), m = static_cast<int>(u(rng) * 12);
        std::vector<double> pmf(r + 1);
        double z = 0.0;
        for (double& x : pmf) z += x = u(rng);
        for (double& x : pmf) x /= z;
        worst = std::max(worst, std::abs(toxmodel::pod(pmf, n, m, r, rule).total() - 1.0));
    }
    report("pod-normalization", worst <= 1e-9, fmt("max |sum gamma - 1| = %.1e over 10000 (tol 1e-9)", worst));
}

}  // namespace

int main() {
    worked_trials();
    anchors_and_safety();
    hard_safety();
    oracle_equivalences();
    generator();
    desk_oc();
    normalization();
    std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
