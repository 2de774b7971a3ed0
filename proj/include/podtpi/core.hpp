#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "podtpi/error.hpp"

namespace podtpi {

/// Dose-assignment decision. Values are ordered from safest to most aggressive.
enum class Decision : int { kDeescalate = -1, kStay = 0, kEscalate = 1 };

inline int to_int(Decision d) { return static_cast<int>(d); }
Decision decision_from_int(int v);
char decision_code(Decision d);  // 'D', 'S', 'E'
const char* decision_name(Decision d);

struct BetaPrior {
    double a = 1.0;
    double b = 1.0;
};

/// Every tunable of the design. Doses are indexed 1..n_doses.
struct DesignParams {
    double target = 0.30;          // p_T
    double eps1 = 0.05;
    double eps2 = 0.05;
    double window = 28.0;          // assessment window tau, days
    int n_bins = 3;                // K
    double pi_escalate = 1.0;      // pi_E
    double pi_deescalate = 0.15;   // pi_D
    std::vector<BetaPrior> dose_priors;  // theta, one per dose
    std::vector<double> bin_prior;       // eta, one per bin
    int cohort_size = 3;
    int max_n = 18;
    int n_doses = 3;
    int start_dose = 1;
    double safety_cutoff = 0.95;
    int safety_min_n = 3;

    /// Defaults with uniform priors sized to the dose and bin counts.
    static DesignParams make(int n_doses, double target, double eps1, double eps2);

    /// Fills empty prior vectors with 1s, then checks every invariant.
    void normalize();
    void validate() const;
};

enum class OutcomeKind { kPending, kDlt, kNoDlt };

/// Outcome as seen at a given clock. `time` is the DLT time for kDlt, the
/// follow-up so far for kPending and the window length for kNoDlt.
struct Outcome {
    OutcomeKind kind = OutcomeKind::kPending;
    double time = 0.0;
};

struct PatientRecord {
    int id = 0;
    int dose = 1;
    double enroll_time = 0.0;
    std::optional<double> dlt_time;  // measured from enrollment
    bool completion_recorded = false;

    Outcome outcome_at(double clock, double window) const;
};

struct DoseTally {
    int n = 0;  // observed DLTs
    int m = 0;  // observed non-DLTs
    int r = 0;  // pending
    std::vector<double> follow_ups;
    std::vector<double> dlt_times;

    int observed() const { return n + m; }
    int total() const { return n + m + r; }
};

struct TrialStatus {
    enum class Kind { kEnrolling, kSuspended, kTerminatedUnsafe, kCompleted };
    Kind kind = Kind::kEnrolling;
    std::string reason;

    bool finished() const {
        return kind == Kind::kTerminatedUnsafe || kind == Kind::kCompleted;
    }
};

const char* status_name(TrialStatus::Kind k);

struct TrialState {
    DesignParams params;
    double clock = 0.0;
    std::vector<PatientRecord> patients;
    int current_dose = 1;
    TrialStatus status;
    std::set<int> excluded_doses;
    int turned_away = 0;

    static TrialState start(DesignParams params);

    int enrolled() const { return static_cast<int>(patients.size()); }
    const PatientRecord* find(int patient_id) const;
    int next_patient_id() const;
    int pending_total() const;
    bool has_pending_at(int dose) const;
    bool is_excluded(int dose) const { return excluded_doses.count(dose) > 0; }
};

enum class EventType { kEnrollment, kDlt, kCompletion, kClock };

const char* event_type_name(EventType t);

struct Event {
    EventType type = EventType::kClock;
    double time = 0.0;
    std::optional<int> patient_id;
    std::optional<int> dose;
    std::optional<double> dlt_time;

    static Event enrollment(double time, int patient_id, int dose);
    static Event dlt(double time, int patient_id, std::optional<double> dlt_time = {});
    static Event completion(double time, int patient_id);
    static Event clock_advance(double time);

    bool operator==(const Event&) const = default;
};

/// Folds one event into the state. The input is never modified.
TrialState apply_event(TrialState state, const Event& event);

/// Per-dose counts at the state's clock.
DoseTally tally(const TrialState& state, int dose);

/// Event sequence that reproduces the patient history, sorted by
/// (time, patient id, type).
std::vector<Event> to_events(const TrialState& state);

TrialState replay(const DesignParams& params, const std::vector<Event>& events);

void require_dose(const DesignParams& params, int dose);

}  // namespace podtpi
