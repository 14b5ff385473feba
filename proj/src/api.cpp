#include "honeynet/api.hpp"

#include <charconv>
#include <limits>

#include "honeynet/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace honeynet {
namespace {

using json = nlohmann::json;

constexpr auto kStreamWait = std::chrono::milliseconds(200);

json event_json(const ThreatEvent& e) {
    return {{"id", e.id},
            {"timestamp_ms", e.timestamp_ms},
            {"sensor_id", e.sensor_id},
            {"source_ip", e.source.ip.to_string()},
            {"source_port", e.source.port},
            {"dest_port", e.dest_port},
            {"protocol", to_string(e.protocol)},
            {"kind", to_string(e.kind)},
            {"severity", to_string(e.severity)},
            {"payload_prefix", escape_field(e.payload_prefix)},
            {"description", escape_field(e.description)}};
}

json report_json(const AttackReport& r) {
    return {{"attack_class", to_string(r.attack_class)},
            {"sensor_id", r.sensor_id},
            {"source_ip", r.source.ip.to_string()},
            {"start_time_ms", r.start_time_ms},
            {"end_time_ms", r.end_time_ms},
            {"event_count", r.event_count},
            {"severity", to_string(r.severity)},
            {"evidence", r.evidence}};
}

json daily_json(const DailyReport& d) {
    json devices = json::object();
    for (const auto& [id, c] : d.devices) devices[id] = {{"footprint", c.footprint}, {"ddos", c.ddos}};
    return {{"day", d.day_index}, {"devices", devices}};
}

json trace_json(const TraceResult& t) {
    json hops = json::array();
    for (const auto& h : t.hops) {
        hops.push_back({{"index", h.index}, {"node", h.node}, {"ip", h.ip.to_string()}, {"rtt_ms", h.rtt_ms}});
    }
    return {{"origin", t.origin}, {"target", t.target.ip.to_string()}, {"reached", t.reached}, {"hops", hops}};
}

json record_json(const TracebackRecord& r) {
    json out = {{"id", r.id}, {"trace", trace_json(r.trace)}, {"fingerprint", nullptr}, {"domain", nullptr}};
    if (r.fingerprint) {
        out["fingerprint"] = {{"os_name", r.fingerprint->os_name},
                              {"os_version", r.fingerprint->os_version},
                              {"open_ports", r.fingerprint->open_ports},
                              {"reachable", r.fingerprint->reachable}};
    }
    if (r.domain) {
        out["domain"] = {{"ip", r.domain->ip.to_string()}, {"domain", r.domain->domain}, {"note", r.domain->note}};
    }
    return out;
}

json rule_json(const RuleEntry& e) {
    const auto& r = e.rule;
    return {{"id", e.id},
            {"text", format_rule(r)},
            {"action", to_string(r.action)},
            {"cidr", r.src_cidr.to_string()},
            {"ports_lo", r.dst_ports.lo},
            {"ports_hi", r.dst_ports.hi},
            {"protocol", r.protocol ? json(to_string(*r.protocol)) : json(nullptr)},
            {"comment", r.comment}};
}

json topology_json(const Topology& topo) {
    json nodes = json::array();
    for (const auto& n : topo.nodes()) {
        nodes.push_back({{"name", n.name},
                         {"role", to_string(n.role)},
                         {"ip", n.ip.to_string()},
                         {"os_name", n.os_name},
                         {"os_version", n.os_version},
                         {"open_ports", n.open_ports},
                         {"domain", n.domain}});
    }
    json links = json::array();
    for (const auto& l : topo.links()) links.push_back({{"a", l.a}, {"b", l.b}, {"latency_ms", l.latency_ms}});
    return {{"nodes", nodes}, {"links", links}};
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::vector<std::string>& offenders = {}) {
    send_json(res, status, {{"error", message}, {"offenders", offenders}});
}

std::optional<TimeMs> query_int(const httplib::Request& req, const std::string& key) {
    if (!req.has_param(key)) return std::nullopt;
    const auto value = req.get_param_value(key);
    TimeMs v = 0;
    auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || end != value.data() + value.size()) throw ParseError(key, "not an integer");
    return v;
}

json parse_body(const httplib::Request& req) {
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw ParseError("body", "expected a JSON object");
    return body;
}

}  // namespace

std::string_view to_string(ApiRole r) { return r == ApiRole::Operator ? "operator" : "readonly"; }

std::optional<ApiRole> parse_api_role(std::string_view text) {
    if (text == "operator") return ApiRole::Operator;
    if (text == "readonly") return ApiRole::ReadOnly;
    return std::nullopt;
}

ReportsSnapshot compute_reports(const ApiContext& ctx, TimeMs from_ms, TimeMs to_ms) {
    if (from_ms > to_ms) throw ValidationError("range is inverted", {"from", "to"});
    ReportsSnapshot snap;
    snap.prefix_id = ctx.log->last_id();
    if (from_ms == to_ms) return snap;

    auto sessions = ctx.sessions ? ctx.sessions() : std::map<std::string, std::vector<SessionState>>{};
    std::map<std::string, std::vector<ThreatEvent>> by_device;
    for (const auto& [device, _] : sessions) by_device[device];
    for (auto& e : ctx.log->read_from(0, snap.prefix_id)) by_device[e.sensor_id].push_back(std::move(e));

    std::map<std::string, std::vector<AttackReport>> all;
    for (const auto& [device, events] : by_device) {
        all[device] = classify_all(events, sessions[device], ctx.thresholds);
        auto& kept = snap.reports[device];
        for (const auto& r : all[device]) {
            if (r.start_time_ms >= from_ms && r.start_time_ms < to_ms) kept.push_back(r);
        }
    }
    for (auto& d : aggregate_daily(by_device, all, ctx.day_length_ms)) {
        TimeMs day_start = static_cast<TimeMs>(d.day_index - 1) * ctx.day_length_ms;
        TimeMs day_end = day_start + ctx.day_length_ms;
        if (day_start < to_ms && from_ms < day_end) snap.daily.push_back(std::move(d));
    }
    return snap;
}

ApiServer::ApiServer(ApiContext context, std::vector<ApiSession> sessions)
    : ctx_(std::move(context)), server_(std::make_unique<httplib::Server>()) {
    if (!ctx_.log || !ctx_.rules) throw ValidationError("api context needs a log and a rule store", {"log", "rules"});
    if (!ctx_.now) ctx_.now = [] { return TimeMs{0}; };
    for (auto& s : sessions) sessions_[s.token] = std::move(s);
    install_routes();
}

ApiServer::~ApiServer() { stop(); }

std::optional<ApiSession> ApiServer::authenticate(const std::string& header) const {
    constexpr std::string_view kPrefix = "Bearer ";
    if (header.compare(0, kPrefix.size(), kPrefix) != 0) return std::nullopt;
    auto it = sessions_.find(header.substr(kPrefix.size()));
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
}

void ApiServer::install_routes() {
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
    auto guarded = [this](bool mutating, Handler h) {
        return [this, mutating, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            auto session = authenticate(req.get_header_value("Authorization"));
            if (!session) return send_error(res, 401, "missing or unknown bearer token");
            if (mutating && session->role != ApiRole::Operator) {
                return send_error(res, 403, "operator role required");
            }
            try {
                h(req, res);
            } catch (const ValidationError& e) {
                send_error(res, 400, e.what(), e.offenders());
            } catch (const ParseError& e) {
                send_error(res, 400, e.what(), {e.field()});
            } catch (const NotFoundError& e) {
                send_error(res, 404, e.what());
            } catch (const PermissionError& e) {
                send_error(res, 403, e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        };
    };

    server_->Get("/events", guarded(false, [this](const httplib::Request& req, httplib::Response& res) {
        auto since = query_int(req, "since").value_or(0);
        if (since < 0) throw ParseError("since", "must be non-negative");
        bool follow = req.get_param_value("follow") != "0";
        auto cursor = std::make_shared<EventId>(static_cast<EventId>(since));
        res.set_chunked_content_provider(
            "application/x-ndjson", [this, cursor, follow](std::size_t, httplib::DataSink& sink) {
                auto batch = ctx_.log->read_from(*cursor, kStreamBatch);
                if (batch.empty()) {
                    if (!follow || stopping_) {
                        sink.done();
                        return true;
                    }
                    ctx_.log->wait_for_newer(*cursor, kStreamWait);
                    return true;
                }
                std::string chunk;
                for (const auto& e : batch) chunk += event_json(e).dump() + "\n";
                if (!sink.write(chunk.data(), chunk.size())) return false;
                *cursor = batch.back().id;
                return true;
            });
    }));

    server_->Get("/reports", guarded(false, [this](const httplib::Request& req, httplib::Response& res) {
        auto from = query_int(req, "from").value_or(std::numeric_limits<TimeMs>::min());
        auto to = query_int(req, "to").value_or(std::numeric_limits<TimeMs>::max());
        auto snap = compute_reports(ctx_, from, to);
        json reports = json::object();
        for (const auto& [device, list] : snap.reports) {
            json arr = json::array();
            for (const auto& r : list) arr.push_back(report_json(r));
            reports[device] = arr;
        }
        json daily = json::array();
        for (const auto& d : snap.daily) daily.push_back(daily_json(d));
        send_json(res, 200, {{"prefix_id", snap.prefix_id}, {"reports", reports}, {"daily", daily}});
    }));

    server_->Post("/traceback", guarded(true, [this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        if (!body.contains("target") || !body["target"].is_string()) throw ParseError("target", "missing");
        auto ip = Ipv4::try_parse(body["target"].get<std::string>());
        if (!ip) throw ParseError("target", "not a dotted quad");

        TracebackRecord rec;
        rec.trace = traceroute(ctx_.topology, ctx_.traceback_origin, *ip);
        if (ctx_.topology.find_by_ip(*ip)) rec.fingerprint = fingerprint(ctx_.topology, ctx_.traceback_origin, *ip);
        rec.domain = ctx_.registry.lookup(*ip);
        {
            std::lock_guard lock(traces_mutex_);
            rec.id = traces_.size() + 1;
            traces_.push_back(rec);
        }
        send_json(res, 200, record_json(rec));
    }));

    server_->Get("/traceback", guarded(false, [this](const httplib::Request&, httplib::Response& res) {
        json arr = json::array();
        for (const auto& r : tracebacks()) arr.push_back(record_json(r));
        send_json(res, 200, arr);
    }));

    server_->Get("/firewall/rules", guarded(false, [this](const httplib::Request&, httplib::Response& res) {
        auto snap = ctx_.rules->snapshot();
        json rules = json::array();
        for (const auto& e : snap->entries) rules.push_back(rule_json(e));
        send_json(res, 200,
                  {{"version", snap->version},
                   {"default_policy", to_string(ctx_.rules->default_policy())},
                   {"rules", rules}});
    }));

    server_->Post("/firewall/rules", guarded(true, [this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        if (!body.contains("rule") || !body["rule"].is_string()) throw ParseError("rule", "missing");
        auto rule = parse_rule(body["rule"].get<std::string>());
        std::string note = body.value("note", std::string{});
        std::uint64_t version = 0;
        if (body.contains("position")) {
            if (!body["position"].is_number_unsigned()) throw ParseError("position", "not a non-negative integer");
            version = ctx_.rules->add_rule(rule, body["position"].get<std::size_t>(), note, ctx_.now());
        } else {
            version = ctx_.rules->append_rule(rule, note, ctx_.now());
        }
        send_json(res, 201, {{"version", version}});
    }));

    server_->Delete(R"(/firewall/rules/(\d+))",
                    guarded(true, [this](const httplib::Request& req, httplib::Response& res) {
                        auto id = std::stoull(req.matches[1].str());
                        std::string note = req.has_param("note") ? req.get_param_value("note") : "";
                        auto version = ctx_.rules->delete_rule(id, note, ctx_.now());
                        send_json(res, 200, {{"version", version}});
                    }));

    server_->Get("/topology", guarded(false, [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, topology_json(ctx_.topology));
    }));
}

int ApiServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) throw IoError("cannot bind api to " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void ApiServer::listen(const std::string& host, int port) {
    if (!server_->listen(host, port)) throw IoError("cannot bind api to " + host + ":" + std::to_string(port));
}

void ApiServer::stop() {
    stopping_ = true;
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::vector<TracebackRecord> ApiServer::tracebacks() const {
    std::lock_guard lock(traces_mutex_);
    return traces_;
}

}  // namespace honeynet
