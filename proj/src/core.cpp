#include "podtpi/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace podtpi {

namespace {

// Slack for comparisons against the window boundary.
constexpr double kTimeSlack = 1e-9;

std::string dose_msg(int dose) {
    std::ostringstream os;
    os << "dose index " << dose << " out of range";
    return os.str();
}

}  // namespace

Decision decision_from_int(int v) {
    switch (v) {
        case -1: return Decision::kDeescalate;
        case 0: return Decision::kStay;
        case 1: return Decision::kEscalate;
    }
    fail(ErrorKind::kInvalidArgument, "decision must be -1, 0 or 1");
}

char decision_code(Decision d) {
    switch (d) {
        case Decision::kDeescalate: return 'D';
        case Decision::kStay: return 'S';
        case Decision::kEscalate: return 'E';
    }
    return '?';
}

const char* decision_name(Decision d) {
    switch (d) {
        case Decision::kDeescalate: return "de-escalate";
        case Decision::kStay: return "stay";
        case Decision::kEscalate: return "escalate";
    }
    return "?";
}

const char* status_name(TrialStatus::Kind k) {
    switch (k) {
        case TrialStatus::Kind::kEnrolling: return "enrolling";
        case TrialStatus::Kind::kSuspended: return "suspended";
        case TrialStatus::Kind::kTerminatedUnsafe: return "terminated-unsafe";
        case TrialStatus::Kind::kCompleted: return "completed";
    }
    return "?";
}

const char* event_type_name(EventType t) {
    switch (t) {
        case EventType::kEnrollment: return "enrollment";
        case EventType::kDlt: return "dlt";
        case EventType::kCompletion: return "completion";
        case EventType::kClock: return "clock";
    }
    return "?";
}

DesignParams DesignParams::make(int n_doses, double target, double eps1, double eps2) {
    DesignParams p;
    p.n_doses = n_doses;
    p.target = target;
    p.eps1 = eps1;
    p.eps2 = eps2;
    p.max_n = 6 * n_doses;
    p.normalize();
    return p;
}

void DesignParams::normalize() {
    if (dose_priors.empty() && n_doses > 0) dose_priors.assign(n_doses, BetaPrior{});
    if (bin_prior.empty() && n_bins > 0) bin_prior.assign(n_bins, 1.0);
    validate();
}

void DesignParams::validate() const {
    require(target > 0.0 && target < 1.0, "target must lie in (0,1)");
    require(eps1 > 0.0 && eps1 < 1.0 && eps2 > 0.0 && eps2 < 1.0,
            "eps1 and eps2 must lie in (0,1)");
    require(target - eps1 > 0.0 && target + eps2 < 1.0,
            "equivalence interval must lie strictly inside (0,1)");
    require(window > 0.0, "window must be positive");
    require(n_bins >= 1, "n_bins must be >= 1");
    require(pi_escalate >= 0.33 && pi_escalate <= 1.0, "pi_escalate must lie in [0.33,1]");
    require(pi_deescalate >= 0.0 && pi_deescalate <= 0.5, "pi_deescalate must lie in [0,0.5]");
    require(n_doses >= 1, "n_doses must be >= 1");
    require(static_cast<int>(dose_priors.size()) == n_doses,
            "dose_priors must have one entry per dose");
    for (const auto& pr : dose_priors)
        require(pr.a > 0.0 && pr.b > 0.0, "beta prior parameters must be positive");
    require(static_cast<int>(bin_prior.size()) == n_bins,
            "bin_prior must have one entry per bin");
    for (double e : bin_prior) require(e > 0.0, "dirichlet prior weights must be positive");
    require(cohort_size >= 1, "cohort_size must be >= 1");
    require(max_n >= cohort_size, "max_n must be >= cohort_size");
    require(start_dose >= 1 && start_dose <= n_doses, "start_dose out of range");
    require(safety_cutoff > 0.0 && safety_cutoff < 1.0, "safety_cutoff must lie in (0,1)");
    require(safety_min_n >= 1, "safety_min_n must be >= 1");
}

void require_dose(const DesignParams& params, int dose) {
    if (dose < 1 || dose > params.n_doses) fail(ErrorKind::kInvalidArgument, dose_msg(dose));
}

Outcome PatientRecord::outcome_at(double clock, double window) const {
    if (dlt_time) return {OutcomeKind::kDlt, *dlt_time};
    const double follow = std::min(window, std::max(0.0, clock - enroll_time));
    if (follow >= window) return {OutcomeKind::kNoDlt, window};
    return {OutcomeKind::kPending, follow};
}

TrialState TrialState::start(DesignParams params) {
    params.normalize();
    TrialState s;
    s.current_dose = params.start_dose;
    s.params = std::move(params);
    return s;
}

const PatientRecord* TrialState::find(int patient_id) const {
    for (const auto& p : patients)
        if (p.id == patient_id) return &p;
    return nullptr;
}

int TrialState::next_patient_id() const {
    int id = 0;
    for (const auto& p : patients) id = std::max(id, p.id);
    return id + 1;
}

int TrialState::pending_total() const {
    int r = 0;
    for (const auto& p : patients)
        if (p.outcome_at(clock, params.window).kind == OutcomeKind::kPending) ++r;
    return r;
}

bool TrialState::has_pending_at(int dose) const {
    for (const auto& p : patients)
        if (p.dose == dose &&
            p.outcome_at(clock, params.window).kind == OutcomeKind::kPending)
            return true;
    return false;
}

Event Event::enrollment(double time, int patient_id, int dose) {
    return Event{EventType::kEnrollment, time, patient_id, dose, std::nullopt};
}

Event Event::dlt(double time, int patient_id, std::optional<double> dlt_time) {
    return Event{EventType::kDlt, time, patient_id, std::nullopt, dlt_time};
}

Event Event::completion(double time, int patient_id) {
    return Event{EventType::kCompletion, time, patient_id, std::nullopt, std::nullopt};
}

Event Event::clock_advance(double time) {
    return Event{EventType::kClock, time, std::nullopt, std::nullopt, std::nullopt};
}

TrialState apply_event(TrialState state, const Event& event) {
    if (!std::isfinite(event.time)) fail(ErrorKind::kInvalidArgument, "event time must be finite");
    if (event.time < state.clock) {
        std::ostringstream os;
        os << "event at t=" << event.time << " precedes trial clock " << state.clock;
        fail(ErrorKind::kOutOfOrder, os.str());
    }
    const double tau = state.params.window;

    auto patient_index = [&](void) -> std::size_t {
        if (!event.patient_id) fail(ErrorKind::kInvalidArgument, "event requires patient_id");
        for (std::size_t i = 0; i < state.patients.size(); ++i)
            if (state.patients[i].id == *event.patient_id) return i;
        fail(ErrorKind::kNotFound, "unknown patient " + std::to_string(*event.patient_id));
    };

    switch (event.type) {
        case EventType::kEnrollment: {
            if (!event.dose) fail(ErrorKind::kInvalidArgument, "enrollment requires dose");
            require_dose(state.params, *event.dose);
            if (state.status.finished())
                fail(ErrorKind::kConflict, std::string("trial is ") + status_name(state.status.kind));
            if (state.enrolled() >= state.params.max_n)
                fail(ErrorKind::kConflict, "maximum sample size reached");
            if (state.is_excluded(*event.dose))
                fail(ErrorKind::kConflict,
                     "dose " + std::to_string(*event.dose) + " is excluded by the safety rule");
            const int id = event.patient_id ? *event.patient_id : state.next_patient_id();
            if (state.find(id)) fail(ErrorKind::kConflict, "duplicate patient id " + std::to_string(id));
            PatientRecord rec;
            rec.id = id;
            rec.dose = *event.dose;
            rec.enroll_time = event.time;
            state.patients.push_back(rec);
            state.current_dose = *event.dose;
            break;
        }
        case EventType::kDlt: {
            const std::size_t i = patient_index();
            PatientRecord& rec = state.patients[i];
            const double elapsed = event.time - rec.enroll_time;
            if (rec.dlt_time) fail(ErrorKind::kConflict, "DLT already recorded for patient");
            if (elapsed > tau + kTimeSlack)
                fail(ErrorKind::kConflict, "patient already resolved as non-DLT");
            const double t = event.dlt_time ? *event.dlt_time : elapsed;
            if (!(t > 0.0) || t > tau + kTimeSlack)
                fail(ErrorKind::kInvalidArgument, "DLT time must lie in (0, window]");
            if (t > elapsed + kTimeSlack)
                fail(ErrorKind::kInvalidArgument, "DLT time lies after the report time");
            rec.dlt_time = std::min(t, tau);
            break;
        }
        case EventType::kCompletion: {
            const std::size_t i = patient_index();
            PatientRecord& rec = state.patients[i];
            if (rec.dlt_time) fail(ErrorKind::kConflict, "patient already has a DLT");
            if (event.time - rec.enroll_time < tau - kTimeSlack)
                fail(ErrorKind::kConflict, "assessment window not yet complete");
            rec.completion_recorded = true;
            break;
        }
        case EventType::kClock:
            break;
    }
    state.clock = event.time;
    if (state.status.kind == TrialStatus::Kind::kEnrolling &&
        state.enrolled() >= state.params.max_n) {
        state.status.kind = TrialStatus::Kind::kCompleted;
        state.status.reason = "maximum sample size reached";
    }
    return state;
}

DoseTally tally(const TrialState& state, int dose) {
    require_dose(state.params, dose);
    DoseTally t;
    for (const auto& p : state.patients) {
        if (p.dose != dose) continue;
        const Outcome o = p.outcome_at(state.clock, state.params.window);
        switch (o.kind) {
            case OutcomeKind::kDlt:
                ++t.n;
                t.dlt_times.push_back(o.time);
                break;
            case OutcomeKind::kNoDlt: ++t.m; break;
            case OutcomeKind::kPending:
                ++t.r;
                t.follow_ups.push_back(o.time);
                break;
        }
    }
    return t;
}

std::vector<Event> to_events(const TrialState& state) {
    std::vector<Event> events;
    for (const auto& p : state.patients) {
        events.push_back(Event::enrollment(p.enroll_time, p.id, p.dose));
        if (p.dlt_time) events.push_back(Event::dlt(p.enroll_time + *p.dlt_time, p.id, *p.dlt_time));
        if (p.completion_recorded)
            events.push_back(Event::completion(p.enroll_time + state.params.window, p.id));
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return std::make_tuple(a.time, a.patient_id.value_or(0), static_cast<int>(a.type)) <
               std::make_tuple(b.time, b.patient_id.value_or(0), static_cast<int>(b.type));
    });
    if (events.empty() || events.back().time < state.clock)
        events.push_back(Event::clock_advance(state.clock));
    return events;
}

TrialState replay(const DesignParams& params, const std::vector<Event>& events) {
    TrialState s = TrialState::start(params);
    for (const auto& e : events) s = apply_event(std::move(s), e);
    return s;
}

}  // namespace podtpi
