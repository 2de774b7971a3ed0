// podtpi command-line front end.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "podtpi/campaign.hpp"
#include "podtpi/engine.hpp"
#include "podtpi/event_log.hpp"
#include "podtpi/kernels.hpp"
#include "podtpi/mtpi2.hpp"
#include "podtpi/service.hpp"
#include "podtpi/simulator.hpp"

namespace fs = std::filesystem;
using namespace podtpi;

namespace {

int emit_error(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorKind::kNumerical, "cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::kNotFound, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_decision_table(double pt, double eps, double eps1, double eps2, int nmax, const std::string& out) {
    if (eps1 < 0) eps1 = eps;
    if (eps2 < 0) eps2 = eps;
    const auto part = mtpi2::build_partition(pt, eps1, eps2);
    const std::string csv = mtpi2::decision_table_csv(mtpi2::decision_table(part, nmax));
    if (out.empty()) std::cout << csv;
    else write_text(out, csv);
    return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_override, int threads) {
    sim::Campaign c = sim::campaign_from_config(sim::read_config(config_path));
    if (!out_override.empty()) c.output_dir = out_override;
    if (threads > 0) c.options.threads = threads;
    const auto scenarios = sim::campaign_scenarios(c);
    const sim::AccrualToxSetting setting = sim::setting(c.setting);
    fs::create_directories(c.output_dir);

    json summary = {{"setting", c.setting}, {"n_trials", c.n_trials}, {"seed", c.seed},
                    {"pi_escalate", c.options.pi_escalate}, {"pi_deescalate", c.options.pi_deescalate},
                    {"mcmc_iter", c.options.mcmc.n_iter}, {"mcmc_burn_in", c.options.mcmc.burn_in},
                    {"true_mtd", "closest to target, ties to lower dose; none above the equivalence interval"},
                    {"designs", json::object()}};
    for (const auto& name : c.designs) {
        sim::OcOptions opts = c.options;
        opts.design = sim::design_from_name(name);
        const sim::OcRun run = sim::run_oc(scenarios, setting, c.n_trials, c.seed, opts);
        std::vector<sim::Metrics> rows = run.per_scenario;
        rows.push_back(run.overall);
        write_text(fs::path(c.output_dir) / (name + "_metrics.csv"), sim::metrics_csv(rows, name));
        write_text(fs::path(c.output_dir) / (name + "_inconsistency.csv"), sim::inconsistency_csv(rows, name));
        const auto& m = run.overall;
        summary["designs"][name] = {{"PCS", m.pcs}, {"PCA", m.pca}, {"POA", m.poa}, {"POS", m.pos},
                                    {"POT", m.pot}, {"Dur", m.duration}, {"terminated", m.termination},
                                    {"DS", m.inconsistency[0]}, {"DE", m.inconsistency[1]},
                                    {"SE", m.inconsistency[2]}, {"SD", m.inconsistency[3]},
                                    {"ED", m.inconsistency[4]}, {"ES", m.inconsistency[5]}};
        std::cerr << name << ": PCS " << m.pcs << " PCA " << m.pca << " POA " << m.poa << " POS " << m.pos
                  << " POT " << m.pot << " Dur " << m.duration << '\n';
    }
    write_text(fs::path(c.output_dir) / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << '\n';
    return 0;
}

// Pulls the `average` row of every *_metrics.csv / *_inconsistency.csv under the given directories.
int run_report(const std::vector<std::string>& dirs) {
    std::ostringstream metrics, incons;
    metrics << "| run | design | PCS | PCA | POA | POS | POT | Dur |\n|---|---|---|---|---|---|---|---|\n";
    incons << "| run | design | DS | DE | SE | SD | ED | ES | Sum |\n|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& dir : dirs) {
        if (!fs::is_directory(dir)) fail(ErrorKind::kNotFound, "no run directory " + dir);
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string file = entry.path().filename().string();
            const bool is_metrics = file.ends_with("_metrics.csv");
            const bool is_incons = file.ends_with("_inconsistency.csv");
            if (!is_metrics && !is_incons) continue;
            std::istringstream is(read_text(entry.path()));
            std::string line;
            while (std::getline(is, line)) {
                std::vector<std::string> cells;
                std::istringstream ls(line);
                std::string cell;
                while (std::getline(ls, cell, ',')) cells.push_back(cell);
                if (cells.size() < 3 || cells[1] != "average") continue;
                std::ostringstream& os = is_metrics ? metrics : incons;
                os << "| " << dir << " | " << cells[0];
                const std::size_t first = 3, last = is_metrics ? 9 : 10;
                for (std::size_t k = first; k < std::min(last, cells.size()); ++k) os << " | " << cells[k];
                os << " |\n";
            }
        }
    }
    std::cout << metrics.str() << '\n' << incons.str();
    return 0;
}

httplib::Server* g_server = nullptr;

int run_serve(const std::string& host, int port, const std::string& storage, const std::string& token,
              std::uint64_t seed) {
    service::ServiceOptions opts;
    if (!storage.empty()) opts.storage = storage;
    opts.seed = seed;
    service::ConductService svc(opts);
    httplib::Server server;
    service::install_routes(server, svc, token);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) fail(ErrorKind::kConflict, "cannot bind " + host + ":" + std::to_string(port));
    std::cerr << json{{"listening", host + ":" + std::to_string(bound)}}.dump() << '\n';
    server.listen_after_bind();
    return 0;
}

int run_whatif(const std::string& tally_path, std::uint64_t seed, const std::string& method, int n_iter,
               int burn_in, const std::string& draws_csv) {
    const json doc = json::parse(read_text(tally_path));
    const TrialState state = engine::apply_safety_rules(state_from_tally_json(doc));
    toxmodel::McmcConfig mc;
    mc.n_iter = n_iter;
    mc.burn_in = burn_in;
    const engine::Engine eng(state.params,
                             {engine::DesignKind::kPodTpi, mc, toxmodel::method_from_name(method)});
    const auto rec = eng.next(state, seed);
    json out = service::recommendation_payload(eng, rec);
    if (!draws_csv.empty()) {
        mc.seed = seed;
        const auto grid = eng.grid();
        const auto draws = toxmodel::sample_posterior(toxmodel::collect_data(state, grid), grid,
                                                      toxmodel::Priors::from(state.params), mc);
        write_text(draws_csv, draws.to_csv());
        out["draws_csv"] = draws_csv;
    }
    out["isa"] = kernels::isa_name(kernels::active_isa());
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PoD-TPI dose-finding engine, simulator and conduct service"};
    app.require_subcommand(1);

    double pt = 0.3, eps = 0.05, eps1 = -1, eps2 = -1;
    int nmax = 12;
    std::string table_out;
    auto* table = app.add_subcommand("decision-table", "Export the complete-data decision table as CSV");
    table->add_option("--pt", pt, "Target DLT probability")->check(CLI::Range(0.0, 1.0));
    table->add_option("--eps", eps, "Half-width of the equivalence interval");
    table->add_option("--eps1", eps1, "Lower half-width (overrides --eps)");
    table->add_option("--eps2", eps2, "Upper half-width (overrides --eps)");
    table->add_option("--nmax", nmax, "Largest n + m")->check(CLI::PositiveNumber);
    table->add_option("-o,--out", table_out, "Output file (default stdout)");

    std::string config, sim_out;
    int threads = 0;
    auto* simulate = app.add_subcommand("simulate", "Run an operating-characteristics campaign");
    simulate->add_option("--config", config, "Campaign config file")->required()->check(CLI::ExistingFile);
    simulate->add_option("-o,--out", sim_out, "Output directory (overrides output_dir)");
    simulate->add_option("--threads", threads, "Worker threads (0 = all cores)");

    std::vector<std::string> report_dirs;
    auto* report = app.add_subcommand("report", "Compare the averaged tables of earlier runs");
    report->add_option("dirs", report_dirs, "Run output directories")->required()->check(CLI::ExistingDirectory);

    std::string host = "127.0.0.1", storage, token;
    int port = 8080;
    std::uint64_t serve_seed = 0x5eed;
    auto* serve = app.add_subcommand("serve", "Start the trial-conduct HTTP service");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port (0 = any free port)")->check(CLI::Range(0, 65535));
    serve->add_option("--storage", storage, "Directory for per-trial event logs");
    serve->add_option("--token", token, "Static bearer token required on every request");
    serve->add_option("--seed", serve_seed, "Base seed for recommendation sampling");

    std::string tally_path, method = "plugin", draws_csv;
    std::uint64_t seed = 1;
    int n_iter = 3000, burn_in = 1000;
    auto* whatif = app.add_subcommand("whatif", "One-shot decision distribution from a tally file");
    whatif->add_option("tally", tally_path, "Tally JSON file")->required()->check(CLI::ExistingFile);
    whatif->add_option("--seed", seed, "Sampler seed");
    whatif->add_option("--method", method, "Pending-count posterior: plugin or mixture")
        ->check(CLI::IsMember({"plugin", "mixture"}));
    whatif->add_option("--iter", n_iter, "MCMC iterations including burn-in")->check(CLI::PositiveNumber);
    whatif->add_option("--burn-in", burn_in, "MCMC burn-in")->check(CLI::NonNegativeNumber);
    whatif->add_option("--draws-csv", draws_csv, "Write the posterior draws to this CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return emit_error("bad_arguments", e.what(), 2);
    }

    try {
        if (*table) return run_decision_table(pt, eps, eps1, eps2, nmax, table_out);
        if (*simulate) return run_simulate(config, sim_out, threads);
        if (*report) return run_report(report_dirs);
        if (*serve) return run_serve(host, port, storage, token, serve_seed);
        if (*whatif) return run_whatif(tally_path, seed, method, n_iter, burn_in, draws_csv);
    } catch (const PodError& e) {
        const int code = e.kind() == ErrorKind::kInvalidArgument ? 2 : 1;
        return emit_error(e.kind() == ErrorKind::kInvalidArgument ? "bad_arguments" : "runtime", e.what(), code);
    } catch (const json::exception& e) {
        return emit_error("bad_arguments", e.what(), 2);
    } catch (const std::exception& e) {
        return emit_error("runtime", e.what(), 1);
    }
    return 2;
}
