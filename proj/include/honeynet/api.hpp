#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "honeynet/detection.hpp"
#include "honeynet/event_log.hpp"
#include "honeynet/gateway.hpp"
#include "honeynet/reporting.hpp"
#include "honeynet/topology.hpp"
#include "honeynet/traceback.hpp"

namespace httplib {
class Server;
}

namespace honeynet {

enum class ApiRole { ReadOnly, Operator };

std::string_view to_string(ApiRole r);
std::optional<ApiRole> parse_api_role(std::string_view text);

struct ApiSession {
    std::string token;
    ApiRole role = ApiRole::ReadOnly;
    TimeMs issued_at_ms = 0;
};

// Everything the service reads from or acts on. The log, the rule store and
// the session source must outlive the server.
struct ApiContext {
    EventLog* log = nullptr;
    RuleStore* rules = nullptr;
    Topology topology;
    DomainRegistry registry;
    NodeId traceback_origin;  // node the traces start from
    DetectionThresholds thresholds;
    TimeMs day_length_ms = 86'400'000;
    // Sessions per device for the slowloris detector; may be empty.
    std::function<std::map<std::string, std::vector<SessionState>>()> sessions;
    // Clock for rule journal stamps and session issue times.
    std::function<TimeMs()> now;
};

struct TracebackRecord {
    std::uint64_t id = 0;
    TraceResult trace;
    std::optional<FingerprintResult> fingerprint;
    std::optional<DomainRecord> domain;
};

// JSON service on top of httplib.
//
//   GET    /events?since=<id>[&follow=0]   NDJSON stream: replay, then tail
//   GET    /reports?from=<ms>&to=<ms>      reports and daily aggregates
//   POST   /traceback   {"target": ip}     runs and stores a trace (Operator)
//   GET    /traceback                      stored traces
//   GET    /firewall/rules
//   POST   /firewall/rules {"rule": text, "position"?: n, "note"?: s}   (Operator)
//   DELETE /firewall/rules/<id>                                          (Operator)
//   GET    /topology
//
// Every request needs "Authorization: Bearer <token>". Errors are JSON
// objects {"error": message, "offenders": [...]} with status 400 (bad
// request or validation), 401, 403 or 404.
class ApiServer {
public:
    ApiServer(ApiContext context, std::vector<ApiSession> sessions);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Binds and serves on a background thread. Port 0 picks a free port.
    // Returns the bound port. Throws IoError when binding fails.
    int start(const std::string& host, int port);
    // Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    std::vector<TracebackRecord> tracebacks() const;

    // Events per stream batch; a client that falls behind by more than this
    // keeps its place via the since id.
    static constexpr std::size_t kStreamBatch = 256;

private:
    void install_routes();
    std::optional<ApiSession> authenticate(const std::string& header) const;

    ApiContext ctx_;
    std::map<std::string, ApiSession> sessions_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    mutable std::mutex traces_mutex_;
    std::vector<TracebackRecord> traces_;
};

// Reports computed from the first `prefix_id` events of the log, restricted
// to [from, to): reports by start time, days that overlap the range.
struct ReportsSnapshot {
    EventId prefix_id = 0;
    std::map<std::string, std::vector<AttackReport>> reports;
    std::vector<DailyReport> daily;
};
ReportsSnapshot compute_reports(const ApiContext& ctx, TimeMs from_ms, TimeMs to_ms);

}  // namespace honeynet
