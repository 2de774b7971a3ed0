#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "podtpi/core.hpp"

namespace podtpi {

using json = nlohmann::json;

// One event per line: {"type", "time", "patient_id"?, "dose"?, "dlt_time"?}.
// Type strings are "enrollment", "dlt", "completion", "clock"; the long forms
// "dlt_observed", "assessment_completed" and "clock_advance" are accepted on input.
json event_to_json(const Event& e);
Event event_from_json(const json& j);

std::string to_jsonl(const std::vector<Event>& events);
std::vector<Event> parse_jsonl(std::istream& in);
std::vector<Event> read_event_log(const std::filesystem::path& path);
void append_event(const std::filesystem::path& path, const Event& e);

json design_to_json(const DesignParams& p);
/// Missing keys keep their defaults; priors default to uniform.
DesignParams design_from_json(const json& j);

json tally_to_json(const DoseTally& t);

/// Builds a state from summary data:
/// {"design": {...}, "current_dose": d, "tallies": [{"dose", "dlt_times",
/// "non_dlt", "follow_ups"}]}. Observed patients are placed before the
/// pending ones so the follow-up times hold at the returned clock.
TrialState state_from_tally_json(const json& j);
json state_to_json(const TrialState& s);

}  // namespace podtpi
