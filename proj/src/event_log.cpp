#include "podtpi/event_log.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace podtpi {

json event_to_json(const Event& e) {
    json j;
    j["type"] = event_type_name(e.type);
    j["time"] = e.time;
    if (e.patient_id) j["patient_id"] = *e.patient_id;
    if (e.dose) j["dose"] = *e.dose;
    if (e.dlt_time) j["dlt_time"] = *e.dlt_time;
    return j;
}

Event event_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorKind::kInvalidArgument, "event must be a JSON object");
    Event e;
    try {
        const std::string type = j.at("type").get<std::string>();
        if (type == "enrollment") e.type = EventType::kEnrollment;
        else if (type == "dlt" || type == "dlt_observed") e.type = EventType::kDlt;
        else if (type == "completion" || type == "assessment_completed") e.type = EventType::kCompletion;
        else if (type == "clock" || type == "clock_advance") e.type = EventType::kClock;
        else fail(ErrorKind::kInvalidArgument, "unknown event type '" + type + "'");
        e.time = j.at("time").get<double>();
        if (j.contains("patient_id") && !j["patient_id"].is_null())
            e.patient_id = j["patient_id"].get<int>();
        if (j.contains("dose") && !j["dose"].is_null()) e.dose = j["dose"].get<int>();
        if (j.contains("dlt_time") && !j["dlt_time"].is_null())
            e.dlt_time = j["dlt_time"].get<double>();
    } catch (const json::exception& ex) {
        fail(ErrorKind::kInvalidArgument, std::string("bad event: ") + ex.what());
    }
    return e;
}

std::string to_jsonl(const std::vector<Event>& events) {
    std::string out;
    for (const auto& e : events) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

std::vector<Event> parse_jsonl(std::istream& in) {
    std::vector<Event> events;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            fail(ErrorKind::kInvalidArgument, "line " + std::to_string(lineno) + ": invalid JSON");
        events.push_back(event_from_json(j));
    }
    return events;
}

std::vector<Event> read_event_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::kNotFound, "cannot open " + path.string());
    return parse_jsonl(in);
}

void append_event(const std::filesystem::path& path, const Event& e) {
    std::ofstream out(path, std::ios::app);
    if (!out) fail(ErrorKind::kNumerical, "cannot write " + path.string());
    out << event_to_json(e).dump() << '\n';
    out.flush();
}

json design_to_json(const DesignParams& p) {
    json priors = json::array();
    for (const auto& b : p.dose_priors) priors.push_back({b.a, b.b});
    return {
        {"target", p.target},
        {"eps1", p.eps1},
        {"eps2", p.eps2},
        {"window", p.window},
        {"n_bins", p.n_bins},
        {"pi_escalate", p.pi_escalate},
        {"pi_deescalate", p.pi_deescalate},
        {"dose_priors", priors},
        {"bin_prior", p.bin_prior},
        {"cohort_size", p.cohort_size},
        {"max_n", p.max_n},
        {"n_doses", p.n_doses},
        {"start_dose", p.start_dose},
        {"safety_cutoff", p.safety_cutoff},
        {"safety_min_n", p.safety_min_n},
    };
}

DesignParams design_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorKind::kInvalidArgument, "design must be a JSON object");
    DesignParams p;
    try {
        auto num = [&](const char* key, double& dst) {
            if (j.contains(key)) dst = j.at(key).get<double>();
        };
        auto integer = [&](const char* key, int& dst) {
            if (j.contains(key)) dst = j.at(key).get<int>();
        };
        num("target", p.target);
        if (j.contains("eps")) p.eps1 = p.eps2 = j.at("eps").get<double>();
        num("eps1", p.eps1);
        num("eps2", p.eps2);
        num("window", p.window);
        integer("n_bins", p.n_bins);
        num("pi_escalate", p.pi_escalate);
        num("pi_deescalate", p.pi_deescalate);
        integer("cohort_size", p.cohort_size);
        integer("n_doses", p.n_doses);
        p.max_n = 6 * p.n_doses;
        integer("max_n", p.max_n);
        integer("start_dose", p.start_dose);
        num("safety_cutoff", p.safety_cutoff);
        integer("safety_min_n", p.safety_min_n);
        if (j.contains("dose_priors")) {
            for (const auto& pr : j.at("dose_priors")) {
                if (!pr.is_array() || pr.size() != 2)
                    fail(ErrorKind::kInvalidArgument, "dose_priors entries must be [a, b]");
                p.dose_priors.push_back({pr[0].get<double>(), pr[1].get<double>()});
            }
        }
        if (j.contains("bin_prior")) p.bin_prior = j.at("bin_prior").get<std::vector<double>>();
    } catch (const json::exception& ex) {
        fail(ErrorKind::kInvalidArgument, std::string("bad design: ") + ex.what());
    }
    p.normalize();
    return p;
}

json tally_to_json(const DoseTally& t) {
    return {{"n", t.n}, {"m", t.m}, {"r", t.r}, {"follow_ups", t.follow_ups},
            {"dlt_times", t.dlt_times}};
}

TrialState state_from_tally_json(const json& j) {
    if (!j.is_object() || !j.contains("design") || !j.contains("tallies"))
        fail(ErrorKind::kInvalidArgument, "tally file needs 'design' and 'tallies'");
    const DesignParams params = design_from_json(j.at("design"));
    const double tau = params.window;
    struct Entry {
        double enroll;
        int dose;
        std::optional<double> dlt;
    };
    std::vector<Entry> entries;
    int current = params.start_dose;
    try {
        if (j.contains("current_dose")) current = j.at("current_dose").get<int>();
        for (const auto& t : j.at("tallies")) {
            const int d = t.at("dose").get<int>();
            require_dose(params, d);
            for (double v : t.value("follow_ups", std::vector<double>{})) {
                require(v >= 0.0 && v < tau, "follow-up must lie in [0, window)");
                entries.push_back({-v, d, std::nullopt});
            }
            for (double x : t.value("dlt_times", std::vector<double>{})) {
                require(x > 0.0 && x <= tau, "DLT time must lie in (0, window]");
                entries.push_back({-(tau + 1.0), d, x});
            }
            const int non_dlt = t.value("non_dlt", 0);
            require(non_dlt >= 0, "non_dlt must be non-negative");
            for (int k = 0; k < non_dlt; ++k) entries.push_back({-(tau + 1.0), d, std::nullopt});
        }
    } catch (const json::exception& ex) {
        fail(ErrorKind::kInvalidArgument, std::string("bad tally file: ") + ex.what());
    }
    require_dose(params, current);
    // Shift so the earliest enrollment is at time 0.
    const double clock = tau + 1.0;
    std::vector<Event> events;
    int id = 0;
    for (const auto& e : entries) {
        const double t0 = clock + e.enroll;
        events.push_back(Event::enrollment(t0, ++id, e.dose));
        if (e.dlt) events.push_back(Event::dlt(t0 + *e.dlt, id, *e.dlt));
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    DesignParams relaxed = params;
    relaxed.max_n = std::max(params.max_n, id + 1);
    TrialState state = TrialState::start(relaxed);
    for (const auto& e : events) state = apply_event(std::move(state), e);
    state = apply_event(std::move(state), Event::clock_advance(clock));
    state.params = params;
    state.current_dose = current;
    return state;
}

json state_to_json(const TrialState& s) {
    json patients = json::array();
    for (const auto& p : s.patients) {
        const Outcome o = p.outcome_at(s.clock, s.params.window);
        json pj = {{"id", p.id}, {"dose", p.dose}, {"enroll_time", p.enroll_time}};
        switch (o.kind) {
            case OutcomeKind::kDlt: pj["outcome"] = "dlt"; pj["dlt_time"] = o.time; break;
            case OutcomeKind::kNoDlt: pj["outcome"] = "no_dlt"; break;
            case OutcomeKind::kPending: pj["outcome"] = "pending"; pj["follow_up"] = o.time; break;
        }
        patients.push_back(pj);
    }
    json tallies = json::array();
    for (int d = 1; d <= s.params.n_doses; ++d) {
        json t = tally_to_json(tally(s, d));
        t["dose"] = d;
        tallies.push_back(t);
    }
    return {
        {"clock", s.clock},
        {"current_dose", s.current_dose},
        {"status", status_name(s.status.kind)},
        {"status_reason", s.status.reason},
        {"excluded_doses", std::vector<int>(s.excluded_doses.begin(), s.excluded_doses.end())},
        {"enrolled", s.enrolled()},
        {"patients", patients},
        {"tallies", tallies},
        {"design", design_to_json(s.params)},
    };
}

}  // namespace podtpi
