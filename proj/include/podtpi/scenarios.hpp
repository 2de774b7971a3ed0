#pragma once

#include <string>
#include <vector>

namespace podtpi::sim {

struct ScenarioSpec {
    int id = 0;
    double target = 0.3;
    std::vector<double> probs;  // true DLT probability per dose

    int n_doses() const { return static_cast<int>(probs.size()); }
};

/// Parses `scn,pT,D,p1..p6` rows; trailing empty cells are allowed.
std::vector<ScenarioSpec> parse_scenarios(const std::string& csv);
std::vector<ScenarioSpec> load_scenarios(const std::string& path);

/// The 60-scenario catalogue compiled into the library.
const std::vector<ScenarioSpec>& bundled_scenarios();
const ScenarioSpec& bundled_scenario(int id);

}  // namespace podtpi::sim
