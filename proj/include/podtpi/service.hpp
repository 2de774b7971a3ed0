#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "podtpi/engine.hpp"
#include "podtpi/event_log.hpp"

namespace httplib {
class Server;
}

namespace podtpi::service {

/// One trial under conduct. The state is always the fold of `events`.
struct ConductSession {
    std::string trial_id;
    DesignParams params;
    std::vector<Event> events;
    TrialState state;
    std::vector<json> audit;  // one record per recommendation served
};

/// Folds events in order, re-evaluating the safety rules after each one so
/// enrollments onto excluded doses are rejected.
TrialState fold_events(const DesignParams& params, const std::vector<Event>& events);

/// Recommendation payload with the per-s decomposition of the decision
/// distribution appended.
json recommendation_payload(const engine::Engine& eng, const engine::Recommendation& rec);

struct ServiceOptions {
    std::optional<std::filesystem::path> storage;  // event-log directory; none = memory only
    std::uint64_t seed = 0x5eed;                   // base for per-request sampler seeds
    toxmodel::McmcConfig mcmc;
    toxmodel::SPosteriorMethod method = toxmodel::SPosteriorMethod::kPlugin;
};

/// Transport-independent conduct API. Writes to a trial are serialized;
/// reads work on snapshots.
class ConductService {
public:
    explicit ConductService(ServiceOptions options = {});

    json create_trial(const json& design);
    json post_event(const std::string& id, const json& event);
    json recommendation(const std::string& id, std::optional<std::uint64_t> seed = std::nullopt);
    json state(const std::string& id) const;
    json whatif(const std::string& id, const json& body,
                std::optional<std::uint64_t> seed = std::nullopt) const;
    std::vector<std::string> trial_ids() const;

private:
    struct Entry {
        mutable std::mutex mu;
        ConductSession session;
        std::unique_ptr<engine::Engine> engine;
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    std::uint64_t fresh_seed();
    void load_storage();
    std::shared_ptr<Entry> make_entry(const std::string& id, const DesignParams& params) const;

    ServiceOptions options_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<Entry>> trials_;
    std::uint64_t counter_ = 0;
    std::mutex seed_mu_;
};

/// HTTP status for an error kind: 404 not found, 409 order/state conflicts,
/// 422 invalid payloads, 500 numerical failures.
int http_status(ErrorKind kind);

/// Registers the conduct routes. A non-empty token requires
/// `Authorization: Bearer <token>` on every request.
void install_routes(httplib::Server& server, ConductService& service, const std::string& token = "");

}  // namespace podtpi::service
