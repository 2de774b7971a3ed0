#include "podtpi/campaign.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace podtpi::sim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

std::vector<std::string> list_items(const std::string& v) {
    std::string body = v;
    if (!body.empty() && body.front() == '[') {
        require(body.back() == ']', "unterminated list '" + v + "'");
        body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> out;
    std::istringstream is(body);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = unquote(trim(item));
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_number(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::kInvalidArgument, "config key '" + key + "' expects a number, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_number(key, v);
    require(x == static_cast<int>(x), "config key '" + key + "' expects an integer");
    return static_cast<int>(x);
}

}  // namespace

ConfigDoc parse_config(const std::string& text) {
    ConfigDoc doc;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty() || line.front() == '[') continue;  // section headers are ignored
        const auto eq = line.find('=');
        require(eq != std::string::npos, "config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        require(!key.empty(), "config line " + std::to_string(line_no) + ": empty key");
        doc[key] = value;
    }
    return doc;
}

ConfigDoc read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::kNotFound, "cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

engine::DesignKind design_from_name(const std::string& name) {
    if (name == "podtpi" || name == "pod-tpi") return engine::DesignKind::kPodTpi;
    if (name == "mtpi2" || name == "mtpi-2") return engine::DesignKind::kCompleteData;
    fail(ErrorKind::kInvalidArgument, "unknown design '" + name + "'");
}

Campaign campaign_from_config(const ConfigDoc& doc) {
    static const std::set<std::string> known = {
        "designs", "setting", "scenarios", "scenario_file", "n_trials", "seed", "pi_escalate",
        "pi_deescalate", "mcmc_iter", "mcmc_burn_in", "s_posterior", "threads", "output_dir"};
    for (const auto& [k, v] : doc)
        if (!known.count(k)) fail(ErrorKind::kInvalidArgument, "unknown config key '" + k + "'");

    Campaign c;
    auto get = [&](const char* key) -> const std::string* {
        auto it = doc.find(key);
        return it == doc.end() ? nullptr : &it->second;
    };
    if (auto v = get("designs")) {
        c.designs = list_items(*v);
        for (const auto& d : c.designs) design_from_name(d);
    }
    if (auto v = get("setting")) c.setting = to_int("setting", *v);
    setting(c.setting);
    if (auto v = get("scenarios")) {
        if (unquote(*v) != "all")
            for (const auto& item : list_items(*v)) c.scenario_ids.push_back(to_int("scenarios", item));
    }
    if (auto v = get("scenario_file")) c.scenario_file = unquote(*v);
    if (auto v = get("n_trials")) c.n_trials = to_int("n_trials", *v);
    require(c.n_trials >= 1, "n_trials must be >= 1");
    if (auto v = get("seed")) c.seed = static_cast<std::uint64_t>(to_number("seed", *v));
    if (auto v = get("pi_escalate")) c.options.pi_escalate = to_number("pi_escalate", *v);
    if (auto v = get("pi_deescalate")) c.options.pi_deescalate = to_number("pi_deescalate", *v);
    if (auto v = get("mcmc_iter")) c.options.mcmc.n_iter = to_int("mcmc_iter", *v);
    if (auto v = get("mcmc_burn_in")) c.options.mcmc.burn_in = to_int("mcmc_burn_in", *v);
    require(c.options.mcmc.n_iter > c.options.mcmc.burn_in && c.options.mcmc.burn_in >= 0,
            "mcmc_iter must exceed mcmc_burn_in");
    if (auto v = get("s_posterior")) c.options.method = toxmodel::method_from_name(unquote(*v));
    if (auto v = get("threads")) c.options.threads = to_int("threads", *v);
    if (auto v = get("output_dir")) c.output_dir = unquote(*v);
    return c;
}

std::vector<ScenarioSpec> campaign_scenarios(const Campaign& c) {
    const std::vector<ScenarioSpec> all =
        c.scenario_file.empty() ? bundled_scenarios() : load_scenarios(c.scenario_file);
    if (c.scenario_ids.empty()) return all;
    std::vector<ScenarioSpec> out;
    for (int id : c.scenario_ids) {
        auto it = std::find_if(all.begin(), all.end(), [id](const ScenarioSpec& s) { return s.id == id; });
        if (it == all.end()) fail(ErrorKind::kNotFound, "scenario " + std::to_string(id) + " not in catalogue");
        out.push_back(*it);
    }
    return out;
}

}  // namespace podtpi::sim
