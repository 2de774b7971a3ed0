#include "podtpi/scenarios.hpp"

#include <fstream>
#include <sstream>

#include "podtpi/error.hpp"
#include "scenarios_csv.hpp"

namespace podtpi::sim {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double number(const std::string& s, int line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::kInvalidArgument, "scenario line " + std::to_string(line_no) + ": bad number '" + s + "'");
}

}  // namespace

std::vector<ScenarioSpec> parse_scenarios(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    std::vector<ScenarioSpec> out;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("scn", 0) == 0) continue;
        const auto cells = split(line);
        require(cells.size() >= 4, "scenario line " + std::to_string(line_no) + ": too few columns");
        ScenarioSpec s;
        s.id = static_cast<int>(number(cells[0], line_no));
        s.target = number(cells[1], line_no);
        const int d = static_cast<int>(number(cells[2], line_no));
        require(d >= 1 && static_cast<int>(cells.size()) >= 3 + d,
                "scenario line " + std::to_string(line_no) + ": missing dose probabilities");
        for (int k = 0; k < d; ++k) s.probs.push_back(number(cells[3 + k], line_no));
        for (std::size_t k = 1; k < s.probs.size(); ++k)
            require(s.probs[k] >= s.probs[k - 1], "scenario " + std::to_string(s.id) + ": probabilities must be non-decreasing");
        for (double p : s.probs) require(p >= 0.0 && p < 1.0, "scenario probabilities must lie in [0,1)");
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ScenarioSpec> load_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::kNotFound, "cannot open scenario file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenarios(ss.str());
}

const std::vector<ScenarioSpec>& bundled_scenarios() {
    static const std::vector<ScenarioSpec> all = parse_scenarios(kScenarioCsv);
    return all;
}

const ScenarioSpec& bundled_scenario(int id) {
    for (const auto& s : bundled_scenarios())
        if (s.id == id) return s;
    fail(ErrorKind::kNotFound, "no bundled scenario " + std::to_string(id));
}

}  // namespace podtpi::sim
