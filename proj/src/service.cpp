#include "podtpi/service.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "podtpi/mtdselect.hpp"

namespace podtpi::service {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

const char* kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::kInvalidArgument: return "invalid_argument";
        case ErrorKind::kOutOfOrder: return "out_of_order";
        case ErrorKind::kConflict: return "conflict";
        case ErrorKind::kNotFound: return "not_found";
        case ErrorKind::kNumerical: return "numerical";
    }
    return "error";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::kNumerical, "cannot write " + path.string());
    out << text;
}

}  // namespace

TrialState fold_events(const DesignParams& params, const std::vector<Event>& events) {
    TrialState state = engine::apply_safety_rules(TrialState::start(params));
    for (const auto& e : events) state = engine::apply_safety_rules(apply_event(std::move(state), e));
    return state;
}

json recommendation_payload(const engine::Engine& eng, const engine::Recommendation& rec) {
    json j = engine::recommendation_to_json(rec);
    const auto& t = rec.tally;
    json rows = json::array();
    if (static_cast<int>(rec.s_pmf.size()) == t.r + 1) {
        for (int s = 0; s <= t.r; ++s) {
            const Decision a = eng.rule()(t.n + s, t.m + t.r - s);
            rows.push_back({{"s", s}, {"prob", rec.s_pmf[s]}, {"decision", to_int(a)},
                            {"decision_name", decision_name(a)}});
        }
    }
    j["per_s"] = rows;
    j["thresholds"] = {{"pi_escalate", eng.params().pi_escalate},
                       {"pi_deescalate", eng.params().pi_deescalate}};
    return j;
}

ConductService::ConductService(ServiceOptions options) : options_(std::move(options)) {
    if (options_.storage) {
        std::filesystem::create_directories(*options_.storage);
        load_storage();
    }
}

std::shared_ptr<ConductService::Entry> ConductService::make_entry(const std::string& id,
                                                                   const DesignParams& params) const {
    auto entry = std::make_shared<Entry>();
    entry->session.trial_id = id;
    entry->session.params = params;
    entry->session.state = fold_events(params, {});
    entry->engine = std::make_unique<engine::Engine>(
        params, engine::EngineConfig{engine::DesignKind::kPodTpi, options_.mcmc, options_.method});
    return entry;
}

void ConductService::load_storage() {
    for (const auto& dir : std::filesystem::directory_iterator(*options_.storage)) {
        if (!dir.is_directory()) continue;
        const auto design_path = dir.path() / "design.json";
        if (!std::filesystem::exists(design_path)) continue;
        std::ifstream in(design_path);
        const DesignParams params = design_from_json(json::parse(in));
        const std::string id = dir.path().filename().string();
        auto entry = make_entry(id, params);
        const auto log = dir.path() / "events.jsonl";
        if (std::filesystem::exists(log)) entry->session.events = read_event_log(log);
        entry->session.state = fold_events(params, entry->session.events);
        trials_[id] = entry;
        ++counter_;
    }
}

std::shared_ptr<ConductService::Entry> ConductService::find(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = trials_.find(id);
    if (it == trials_.end()) fail(ErrorKind::kNotFound, "unknown trial '" + id + "'");
    return it->second;
}

std::uint64_t ConductService::fresh_seed() {
    std::lock_guard lock(seed_mu_);
    return mix(options_.seed ^ mix(++counter_ + 0x51ED));
}

json ConductService::create_trial(const json& design) {
    if (!design.is_object()) fail(ErrorKind::kInvalidArgument, "design must be a JSON object");
    const DesignParams params = design_from_json(design);
    std::unique_lock lock(mu_);
    std::string id;
    do {
        std::ostringstream os;
        os << "trial-" << std::hex << (mix(options_.seed + ++counter_) & 0xFFFFFFFFFFULL);
        id = os.str();
    } while (trials_.count(id));
    auto entry = make_entry(id, params);
    if (options_.storage) {
        const auto dir = *options_.storage / id;
        std::filesystem::create_directories(dir);
        write_file(dir / "design.json", design_to_json(params).dump(2));
        write_file(dir / "events.jsonl", "");
    }
    trials_[id] = entry;
    return {{"trial_id", id}, {"design", design_to_json(params)}};
}

json ConductService::post_event(const std::string& id, const json& body) {
    auto entry = find(id);
    Event e = event_from_json(body);
    std::lock_guard lock(entry->mu);
    auto& session = entry->session;
    if (e.type == EventType::kEnrollment && !e.patient_id) e.patient_id = session.state.next_patient_id();
    TrialState next = engine::apply_safety_rules(apply_event(session.state, e));
    if (options_.storage) append_event(*options_.storage / id / "events.jsonl", e);
    session.events.push_back(e);
    session.state = std::move(next);
    json out = state_to_json(session.state);
    out["trial_id"] = id;
    out["event"] = event_to_json(e);
    return out;
}

json ConductService::recommendation(const std::string& id, std::optional<std::uint64_t> seed) {
    auto entry = find(id);
    const std::uint64_t s = seed ? *seed : fresh_seed();
    std::lock_guard lock(entry->mu);
    auto& session = entry->session;
    const TrialState& state = session.state;
    json out;
    if (state.status.kind == TrialStatus::Kind::kCompleted) {
        out = {{"action", "complete"}, {"time", state.clock}};
        if (state.pending_total() == 0) out["mtd"] = mtdselect::report_to_json(mtdselect::finalize(state));
    } else {
        out = recommendation_payload(*entry->engine, entry->engine->next(state, s));
    }
    out["trial_id"] = id;
    out["status"] = status_name(state.status.kind);
    out["excluded_doses"] = std::vector<int>(state.excluded_doses.begin(), state.excluded_doses.end());
    out["event_count"] = session.events.size();
    session.audit.push_back(out);
    return out;
}

json ConductService::state(const std::string& id) const {
    auto entry = find(id);
    std::lock_guard lock(entry->mu);
    json out = state_to_json(entry->session.state);
    out["trial_id"] = id;
    json events = json::array();
    for (const auto& e : entry->session.events) events.push_back(event_to_json(e));
    out["events"] = events;
    out["audit"] = entry->session.audit;
    return out;
}

json ConductService::whatif(const std::string& id, const json& body, std::optional<std::uint64_t> seed) const {
    auto entry = find(id);
    TrialState hypo;
    {
        std::lock_guard lock(entry->mu);
        hypo = entry->session.state;
    }
    if (!body.is_object() || !body.contains("outcomes") || !body["outcomes"].is_array())
        fail(ErrorKind::kInvalidArgument, "whatif body needs an 'outcomes' array");
    const double tau = hypo.params.window;
    for (const auto& o : body["outcomes"]) {
        if (!o.is_object() || !o.contains("patient_id") || !o.contains("outcome"))
            fail(ErrorKind::kInvalidArgument, "each outcome needs patient_id and outcome");
        const int pid = o["patient_id"].get<int>();
        const std::string kind = o["outcome"].get<std::string>();
        PatientRecord* rec = nullptr;
        for (auto& p : hypo.patients)
            if (p.id == pid) rec = &p;
        if (!rec) fail(ErrorKind::kNotFound, "unknown patient " + std::to_string(pid));
        const Outcome now = rec->outcome_at(hypo.clock, tau);
        if (now.kind != OutcomeKind::kPending)
            fail(ErrorKind::kConflict, "patient " + std::to_string(pid) + " is not pending");
        if (kind == "dlt") {
            double t = o.contains("dlt_time") ? o["dlt_time"].get<double>() : std::max(now.time, 1e-6);
            if (!(t > 0.0) || t > tau) fail(ErrorKind::kInvalidArgument, "dlt_time must lie in (0, window]");
            rec->dlt_time = t;
            rec->enroll_time = std::min(rec->enroll_time, hypo.clock - t);
        } else if (kind == "no_dlt") {
            rec->enroll_time = hypo.clock - tau;
        } else {
            fail(ErrorKind::kInvalidArgument, "outcome must be 'dlt' or 'no_dlt'");
        }
    }
    hypo.status = {};
    hypo = engine::apply_safety_rules(std::move(hypo));
    const std::uint64_t s = seed ? *seed : mix(entry->session.events.size() + 0xC0FFEE);
    json out = recommendation_payload(*entry->engine, entry->engine->next(hypo, s));
    out["trial_id"] = id;
    out["hypothetical"] = true;
    out["tallies"] = state_to_json(hypo)["tallies"];
    return out;
}

std::vector<std::string> ConductService::trial_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, e] : trials_) ids.push_back(id);
    return ids;
}

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kNotFound: return 404;
        case ErrorKind::kOutOfOrder: return 409;
        case ErrorKind::kConflict: return 409;
        case ErrorKind::kInvalidArgument: return 422;
        case ErrorKind::kNumerical: return 500;
    }
    return 500;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            reply(res, 200, f(req));
        } catch (const PodError& e) {
            reply(res, http_status(e.kind()), {{"error", kind_name(e.kind())}, {"message", e.what()}});
        } catch (const json::exception& e) {
            reply(res, 422, {{"error", "invalid_argument"}, {"message", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", "internal"}, {"message", e.what()}});
        }
    };
}

std::optional<std::uint64_t> seed_param(const httplib::Request& req) {
    if (!req.has_param("seed")) return std::nullopt;
    const std::string v = req.get_param_value("seed");
    try {
        std::size_t used = 0;
        const auto s = std::stoull(v, &used);
        if (used == v.size()) return s;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::kInvalidArgument, "seed must be an unsigned integer");
}

json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    return json::parse(req.body);
}

}  // namespace

void install_routes(httplib::Server& server, ConductService& service, const std::string& token) {
    if (!token.empty()) {
        server.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
            if (req.get_header_value("Authorization") == "Bearer " + token)
                return httplib::Server::HandlerResponse::Unhandled;
            reply(res, 401, {{"error", "unauthorized"}, {"message", "missing or wrong token"}});
            return httplib::Server::HandlerResponse::Handled;
        });
    }
    server.Get("/trials", guarded([&](const httplib::Request&) { return json{{"trials", service.trial_ids()}}; }));
    server.Post("/trials", guarded([&](const httplib::Request& req) { return service.create_trial(body_json(req)); }));
    server.Post(R"(/trials/([^/]+)/events)", guarded([&](const httplib::Request& req) {
                    return service.post_event(req.matches[1], body_json(req));
                }));
    server.Get(R"(/trials/([^/]+)/recommendation)", guarded([&](const httplib::Request& req) {
                   return service.recommendation(req.matches[1], seed_param(req));
               }));
    server.Get(R"(/trials/([^/]+)/state)",
               guarded([&](const httplib::Request& req) { return service.state(req.matches[1]); }));
    server.Post(R"(/trials/([^/]+)/whatif)", guarded([&](const httplib::Request& req) {
                    return service.whatif(req.matches[1], body_json(req), seed_param(req));
                }));
}

}  // namespace podtpi::service
