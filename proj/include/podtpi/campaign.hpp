#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "podtpi/simulator.hpp"

namespace podtpi::sim {

/// Flat `key = value` document. Values are numbers, quoted strings, bare
/// words or `[a, b, ...]` lists; `#` starts a comment.
using ConfigDoc = std::map<std::string, std::string>;

ConfigDoc parse_config(const std::string& text);
ConfigDoc read_config(const std::string& path);

struct Campaign {
    std::vector<std::string> designs{"podtpi", "mtpi2"};
    int setting = 1;
    std::vector<int> scenario_ids;  // empty = whole catalogue
    std::string scenario_file;      // empty = bundled catalogue
    int n_trials = 100;
    std::uint64_t seed = 20240601;
    OcOptions options;
    std::string output_dir = "oc_out";
};

Campaign campaign_from_config(const ConfigDoc& doc);

std::vector<ScenarioSpec> campaign_scenarios(const Campaign& c);

engine::DesignKind design_from_name(const std::string& name);

}  // namespace podtpi::sim
