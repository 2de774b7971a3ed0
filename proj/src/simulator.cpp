#include "podtpi/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace podtpi::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

AccrualToxSetting setting(int label) {
    switch (label) {
        case 1: return {1, 0.1, 0.5, 0.5};
        case 2: return {2, 0.2, 0.5, 0.5};
        case 3: return {3, 0.1, 0.8, 0.25};
        case 4: return {4, 0.2, 0.8, 0.25};
    }
    fail(ErrorKind::kInvalidArgument, "setting must be 1..4, got " + std::to_string(label));
}

WeibullParams weibull_params(double p, double alpha, double gamma, double tau) {
    require(p > 0.0 && p < 1.0, "p must lie in (0,1)");
    require(alpha > 0.0 && alpha < 1.0 && gamma > 0.0 && gamma < 1.0, "alpha and gamma must lie in (0,1)");
    require(tau > 0.0, "tau must be positive");
    WeibullParams w;
    w.shape = std::log(std::log1p(-p) / std::log1p(-p + alpha * p)) / std::log(1.0 / (1.0 - gamma));
    w.scale = tau / std::pow(-std::log1p(-p), 1.0 / w.shape);
    return w;
}

double weibull_cdf(double t, const WeibullParams& w) {
    if (t <= 0.0) return 0.0;
    return -std::expm1(-std::pow(t / w.scale, w.shape));
}

double dlt_time_from_uniform(double u, double p, double alpha, double gamma, double tau) {
    if (p <= 0.0) return kInf;
    const WeibullParams w = weibull_params(p, alpha, gamma, tau);
    return w.scale * std::pow(-std::log1p(-u), 1.0 / w.shape);
}

TrialStreams::TrialStreams(std::uint64_t seed, double delta) : seed_(seed), delta_(delta) {
    require(delta > 0.0, "arrival rate must be positive");
}

void TrialStreams::extend(std::size_t i) {
    if (i < gaps_.size()) return;
    // Regenerate from the start so draws never depend on access order.
    std::mt19937_64 arrivals(splitmix64(seed_ ^ 0xA5A5A5A5ULL));
    std::mt19937_64 tox(splitmix64(seed_ ^ 0x5A5A5A5AULL));
    std::exponential_distribution<double> exp(delta_);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = std::max<std::size_t>(2 * (i + 1), 64);
    gaps_.resize(n);
    uniforms_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        gaps_[k] = exp(arrivals);
        uniforms_[k] = unif(tox);
    }
}

double TrialStreams::gap(std::size_t i) {
    extend(i);
    return gaps_[i];
}

double TrialStreams::uniform(std::size_t i) {
    extend(i);
    return uniforms_[i];
}

const char* inconsistency_name(Inconsistency c) {
    switch (c) {
        case Inconsistency::kConsistent: return "consistent";
        case Inconsistency::kDS: return "DS";
        case Inconsistency::kDE: return "DE";
        case Inconsistency::kSE: return "SE";
        case Inconsistency::kSD: return "SD";
        case Inconsistency::kED: return "ED";
        case Inconsistency::kES: return "ES";
    }
    return "?";
}

Inconsistency classify(Decision executed, Decision complete) {
    if (executed == complete) return Inconsistency::kConsistent;
    switch (complete) {
        case Decision::kDeescalate:
            return executed == Decision::kStay ? Inconsistency::kDS : Inconsistency::kDE;
        case Decision::kStay:
            return executed == Decision::kEscalate ? Inconsistency::kSE : Inconsistency::kSD;
        case Decision::kEscalate:
            return executed == Decision::kDeescalate ? Inconsistency::kED : Inconsistency::kES;
    }
    return Inconsistency::kConsistent;
}

Inconsistency classify_inconsistency(const AuditEntry& e, const mtpi2::DecisionRule& rule) {
    if (e.rec.kind != engine::ActionKind::kAssign) return Inconsistency::kConsistent;
    const auto& t = e.rec.tally;
    if (t.r == 0) return Inconsistency::kConsistent;
    require(e.realized_s >= 0 && e.realized_s <= t.r, "realized pending DLT count out of range");
    return classify(e.rec.executed, rule(t.n + e.realized_s, t.m + t.r - e.realized_s));
}

DesignParams scenario_params(const ScenarioSpec& s, double pi_escalate, double pi_deescalate) {
    const double eps = s.target <= 0.10 + 1e-12 ? 0.03 : 0.05;
    DesignParams p = DesignParams::make(s.n_doses(), s.target, eps, eps);
    p.max_n = 6 * s.n_doses();
    p.pi_escalate = pi_escalate;
    p.pi_deescalate = pi_deescalate;
    p.validate();
    return p;
}

std::optional<int> true_mtd(const ScenarioSpec& s, double eps2) {
    std::optional<int> best;
    double best_gap = kInf;
    for (int d = 1; d <= s.n_doses(); ++d) {
        const double p = s.probs[d - 1];
        if (p > s.target + eps2 + 1e-12) continue;
        const double gap = std::fabs(p - s.target);
        if (gap < best_gap - 1e-12) {
            best_gap = gap;
            best = d;
        }
    }
    return best;
}

TrialResult simulate_trial(const ScenarioSpec& scenario, const AccrualToxSetting& setting,
                           const SimConfig& config, std::uint64_t seed) {
    const engine::Engine eng(config.params, config.engine);
    return simulate_trial(eng, scenario, setting, seed);
}

TrialResult simulate_trial(const engine::Engine& eng, const ScenarioSpec& scenario,
                           const AccrualToxSetting& setting, std::uint64_t seed) {
    const DesignParams& params = eng.params();
    require(params.n_doses == scenario.n_doses(), "design and scenario disagree on the number of doses");
    const double tau = params.window;

    TrialResult out;
    TrialStreams streams(seed, setting.delta);
    TrialState state = TrialState::start(params);
    std::map<int, std::size_t> by_id;

    // DLTs still to be reported, ordered by absolute time.
    std::multimap<double, int> upcoming;
    auto advance_to = [&](double t) {
        while (!upcoming.empty() && upcoming.begin()->first <= t) {
            const auto [when, id] = *upcoming.begin();
            upcoming.erase(upcoming.begin());
            state = apply_event(std::move(state), Event::dlt(when, id, out.patients[by_id.at(id)].tox_time));
        }
        state = apply_event(std::move(state), Event::clock_advance(t));
    };
    auto enroll = [&](double t, int dose, double u) {
        SimPatient pt;
        pt.id = state.next_patient_id();
        pt.dose = dose;
        pt.enroll = t;
        pt.tox_time = dlt_time_from_uniform(u, scenario.probs[dose - 1], setting.alpha, setting.gamma, tau);
        pt.tox_time = std::max(pt.tox_time, 1e-9);
        pt.dlt = pt.tox_time <= tau;
        state = apply_event(std::move(state), Event::enrollment(t, pt.id, dose));
        if (pt.dlt) upcoming.emplace(t + pt.tox_time, pt.id);
        by_id[pt.id] = out.patients.size();
        out.patients.push_back(pt);
    };

    double clock = 0.0;
    int cohort_left = 0;
    std::uint64_t decision_no = 0;
    for (std::size_t i = 0; !state.status.finished(); ++i) {
        clock += streams.gap(i);
        const double u = streams.uniform(i);
        advance_to(clock);

        if (state.enrolled() == 0) {
            enroll(clock, params.start_dose, u);
            cohort_left = params.cohort_size - 1;
            continue;
        }
        state = engine::apply_safety_rules(std::move(state));
        if (state.status.finished()) break;
        const bool safety_hold = state.status.kind == TrialStatus::Kind::kSuspended;
        if (cohort_left > 0 && !safety_hold && !state.is_excluded(state.current_dose)) {
            enroll(clock, state.current_dose, u);
            --cohort_left;
            continue;
        }
        cohort_left = 0;

        AuditEntry entry;
        entry.rec = eng.next(state, splitmix64(seed + 0x632BE59BD9B4E019ULL * ++decision_no));
        if (entry.rec.kind == engine::ActionKind::kAssign && entry.rec.tally.r > 0) {
            int s = 0;
            for (const auto& p : state.patients) {
                if (p.dose != state.current_dose) continue;
                if (p.outcome_at(state.clock, tau).kind != OutcomeKind::kPending) continue;
                s += out.patients[by_id.at(p.id)].dlt;
            }
            entry.realized_s = s;
            const auto& t = entry.rec.tally;
            entry.complete_decision = eng.rule()(t.n + s, t.m + t.r - s);
            entry.type = classify_inconsistency(entry, eng.rule());
        }
        const engine::Recommendation rec = entry.rec;
        out.audit.push_back(std::move(entry));

        switch (rec.kind) {
            case engine::ActionKind::kAssign:
                state.status = {};
                enroll(clock, rec.dose, u);
                cohort_left = params.cohort_size - 1;
                break;
            case engine::ActionKind::kSuspend:
                state = engine::step_trial(std::move(state), rec, clock);
                break;
            case engine::ActionKind::kTerminate:
                state = engine::step_trial(std::move(state), rec, clock);
                break;
        }
    }

    out.turned_away = state.turned_away;
    const double first = out.patients.front().enroll;
    if (state.status.kind == TrialStatus::Kind::kTerminatedUnsafe) {
        out.terminated = true;
        out.duration = state.clock - first;
        return out;
    }
    // Follow everyone to the end of their assessment, then select.
    double end = state.clock;
    for (const auto& p : out.patients) {
        end = std::max(end, p.enroll + std::min(p.tox_time, tau));
        // enroll + tau can round below a full window of follow-up.
        if (p.tox_time > tau)
            while (end - p.enroll < tau) end = std::nextafter(end, INFINITY);
    }
    advance_to(end);
    out.duration = end - first;
    const auto report = mtdselect::finalize(state);
    out.selected = report.selected;
    out.terminated = report.branch == mtdselect::Branch::kTerminated;
    return out;
}

double Metrics::inconsistency_sum() const {
    double s = 0.0;
    for (double v : inconsistency) s += v;
    return s;
}

Metrics summarize(const ScenarioSpec& s, const std::vector<TrialResult>& trials, double eps2) {
    Metrics m;
    m.scenario = s.id;
    m.n_trials = static_cast<int>(trials.size());
    if (trials.empty()) return m;
    const std::optional<int> mtd = true_mtd(s, eps2);
    for (const auto& t : trials) {
        const int n = static_cast<int>(t.patients.size());
        int at_mtd = 0, above = 0, dlts = 0;
        for (const auto& p : t.patients) {
            if (mtd && p.dose == *mtd) ++at_mtd;
            if (!mtd || p.dose > *mtd) ++above;
            dlts += p.dlt;
        }
        m.pcs += t.selected == mtd;
        m.pos += t.selected && (!mtd || *t.selected > *mtd);
        m.pca += static_cast<double>(at_mtd) / n;
        m.poa += static_cast<double>(above) / n;
        m.pot += static_cast<double>(dlts) / n;
        m.duration += t.duration;
        m.termination += t.terminated;
        for (const auto& e : t.audit) {
            if (e.rec.kind != engine::ActionKind::kAssign) continue;
            ++m.decisions;
            if (e.type != Inconsistency::kConsistent)
                ++m.inconsistency_counts[static_cast<int>(e.type) - 1];
        }
    }
    const double k = 100.0 / m.n_trials;
    m.pcs *= k;
    m.pos *= k;
    m.pca *= k;
    m.poa *= k;
    m.pot *= k;
    m.termination *= k;
    m.duration /= m.n_trials;
    for (int i = 0; i < kInconsistencyTypes; ++i)
        m.inconsistency[i] = m.decisions ? 1000.0 * m.inconsistency_counts[i] / m.decisions : 0.0;
    return m;
}

Metrics average(const std::vector<Metrics>& rows) {
    Metrics m;
    if (rows.empty()) return m;
    for (const auto& r : rows) {
        m.n_trials += r.n_trials;
        m.pcs += r.pcs;
        m.pca += r.pca;
        m.poa += r.poa;
        m.pos += r.pos;
        m.pot += r.pot;
        m.duration += r.duration;
        m.termination += r.termination;
        m.decisions += r.decisions;
        for (int i = 0; i < kInconsistencyTypes; ++i) {
            m.inconsistency[i] += r.inconsistency[i];
            m.inconsistency_counts[i] += r.inconsistency_counts[i];
        }
    }
    const double k = 1.0 / rows.size();
    m.pcs *= k;
    m.pca *= k;
    m.poa *= k;
    m.pos *= k;
    m.pot *= k;
    m.duration *= k;
    m.termination *= k;
    for (double& v : m.inconsistency) v *= k;
    return m;
}

std::uint64_t trial_seed(std::uint64_t campaign_seed, int scenario_id, int trial_index) {
    std::uint64_t h = splitmix64(campaign_seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(scenario_id));
    return splitmix64(h ^ (static_cast<std::uint64_t>(trial_index) << 20));
}

OcRun run_oc(const std::vector<ScenarioSpec>& scenarios, const AccrualToxSetting& setting,
             int n_trials, std::uint64_t seed, const OcOptions& options) {
    require(n_trials >= 1, "n_trials must be >= 1");
    OcRun run;
    int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, threads);

    for (const auto& sc : scenarios) {
        const DesignParams params = scenario_params(sc, options.pi_escalate, options.pi_deescalate);
        const engine::Engine eng(params, {options.design, options.mcmc, options.method});
        std::vector<TrialResult> results(n_trials);
        std::atomic<int> next{0};
        std::exception_ptr error;
        std::mutex error_mu;
        auto worker = [&] {
            for (int i = next++; i < n_trials; i = next++) {
                try {
                    results[i] = simulate_trial(eng, sc, setting, trial_seed(seed, sc.id, i));
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);

        run.per_scenario.push_back(summarize(sc, results, params.eps2));
        if (options.keep_trials) run.trials.push_back(std::move(results));
    }
    run.overall = average(run.per_scenario);
    return run;
}

namespace {

std::string fmt(double v, int digits = 1) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

std::string label(const Metrics& m) { return m.scenario ? std::to_string(m.scenario) : "average"; }

}  // namespace

std::string metrics_csv(const std::vector<Metrics>& rows, const std::string& design) {
    std::ostringstream os;
    os << "design,scenario,n_trials,PCS,PCA,POA,POS,POT,Dur,terminated\n";
    for (const auto& m : rows)
        os << design << ',' << label(m) << ',' << m.n_trials << ',' << fmt(m.pcs) << ',' << fmt(m.pca) << ','
           << fmt(m.poa) << ',' << fmt(m.pos) << ',' << fmt(m.pot) << ',' << fmt(m.duration, 0) << ','
           << fmt(m.termination) << '\n';
    return os.str();
}

std::string inconsistency_csv(const std::vector<Metrics>& rows, const std::string& design) {
    std::ostringstream os;
    os << "design,scenario,decisions,DS,DE,SE,SD,ED,ES,Sum\n";
    for (const auto& m : rows) {
        os << design << ',' << label(m) << ',' << m.decisions;
        for (double v : m.inconsistency) os << ',' << fmt(v);
        os << ',' << fmt(m.inconsistency_sum()) << '\n';
    }
    return os.str();
}

}  // namespace podtpi::sim
