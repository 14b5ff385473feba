#include "honeynet/scenario.hpp"

#include <fstream>

#include "honeynet/error.hpp"

namespace honeynet {
namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::string join_events(const std::vector<ThreatEvent>& events) {
    std::string out;
    for (const auto& e : events) out += serialize_event(e) + "\n";
    return out;
}

}  // namespace

std::uint64_t stable_hash(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

Honeynet::Honeynet(Simulation& sim, HoneynetOptions options, EventLog& log, std::uint64_t seed)
    : sim_(sim), options_(std::move(options)), log_(log), seed_(seed) {
    options_.router.validate();
    options_.thresholds.validate();
    sim_.set_transcript_enabled(options_.record_transcript);
    const Topology& topo = sim_.topology();

    rules_ = std::make_unique<RuleStore>(options_.firewall_default);
    for (const auto& rule : options_.firewall_rules) rules_->append_rule(rule, "initial", 0);

    if ((decoy_node_ = topo.find_by_role(Role::Decoy))) {
        decoy_ = std::make_unique<DecoyHoneypot>(options_.decoy, log_);
        sim_.on_deliver(decoy_node_->name, [this](const PacketEnvelope& p) { on_decoy_packet(p); });
    }
    if ((sensor_node_ = topo.find_by_role(Role::Sensor))) {
        sensor_ = std::make_unique<SensorHoneypot>(options_.sensor, log_);
        sim_.on_deliver(sensor_node_->name, [this](const PacketEnvelope& p) {
            ++deliveries_[sensor_node_->name];
            sensor_->ingest(p, sim_.now());
            arm_sensor_expiry();
        });
    }
    if (const NodeInfo* router = topo.find_by_role(Role::Router)) {
        sim_.set_filter(router->name, [this](const PacketEnvelope& p, const NodeInfo&) {
            return router_forward(options_.router, buckets_, p, sim_.now()).drop;
        });
    }
    if ((firewall_node_ = topo.find_by_role(Role::Firewall))) {
        sim_.set_filter(firewall_node_->name, [this](const PacketEnvelope& p, const NodeInfo&) {
            auto verdict = rules_->evaluate(p, sim_.now());
            if (verdict.event) log_.append(*verdict.event);
            return verdict.decision.drop;
        });
    }
    if (const NodeInfo* production = topo.find_by_role(Role::Production)) {
        sim_.on_deliver(production->name, [this, name = production->name](const PacketEnvelope&) {
            ++deliveries_[name];
        });
    }
}

Attacker& Honeynet::attacker(const NodeId& node) {
    auto it = attackers_.find(node);
    if (it == attackers_.end()) {
        auto a = std::make_unique<Attacker>(sim_, node, seed_ ^ stable_hash(node));
        it = attackers_.emplace(node, std::move(a)).first;
    }
    return *it->second;
}

void Honeynet::on_decoy_packet(const PacketEnvelope& packet) {
    ++deliveries_[decoy_node_->name];
    if (auto reply = decoy_->on_packet(packet, sim_.now())) send_reply(*reply);
    arm_decoy_deadline();
}

void Honeynet::send_reply(const DecoyHoneypot::Reply& reply) {
    sim_.schedule(reply.at_ms, [this, reply] {
        PacketEnvelope p;
        p.src = NetEndpoint{decoy_node_->ip, reply.from_port};
        p.dst = reply.to;
        p.protocol = Protocol::Tcp;
        p.segment = TcpSegment::Data;
        p.kind = EventKind::HttpRequestComplete;
        p.payload = reply.bytes;
        ++decoy_replies_;
        sim_.send(std::move(p));
    });
}

void Honeynet::arm_decoy_deadline() {
    auto due = decoy_->next_deadline();
    if (!due || !decoy_timers_.insert(*due).second) return;
    sim_.schedule(*due, [this, at = *due] {
        decoy_timers_.erase(at);
        for (const auto& reply : decoy_->expire(sim_.now())) send_reply(reply);
        arm_decoy_deadline();
    });
}

void Honeynet::arm_sensor_expiry() {
    auto due = sensor_->next_expiry();
    if (!due || !sensor_timers_.insert(*due).second) return;
    sim_.schedule(*due, [this, at = *due] {
        sensor_timers_.erase(at);
        sensor_->expire_sessions(sim_.now());
        arm_sensor_expiry();
    });
}

std::vector<std::string> Honeynet::devices() const {
    std::vector<std::string> out;
    if (decoy_) out.push_back(decoy_->config().sensor_id);
    if (sensor_) out.push_back(sensor_->config().sensor_id);
    if (firewall_node_) out.emplace_back(kFirewallSensorId);
    return out;
}

std::map<std::string, std::vector<ThreatEvent>> Honeynet::events_by_device() const {
    std::map<std::string, std::vector<ThreatEvent>> out;
    for (const auto& d : devices()) out[d];
    for (auto& e : log_.snapshot()) {
        auto it = out.find(e.sensor_id);
        if (it != out.end()) it->second.push_back(std::move(e));
    }
    return out;
}

std::map<std::string, std::vector<SessionState>> Honeynet::sessions_by_device() const {
    std::map<std::string, std::vector<SessionState>> out;
    for (const auto& d : devices()) out[d];
    if (decoy_) out[decoy_->config().sensor_id] = decoy_->sessions();
    if (sensor_) out[sensor_->config().sensor_id] = sensor_->sessions();
    return out;
}

std::map<std::string, std::vector<AttackReport>> Honeynet::classify() const {
    auto events = events_by_device();
    auto sessions = sessions_by_device();
    std::map<std::string, std::vector<AttackReport>> out;
    for (const auto& [device, list] : events) out[device] = classify_all(list, sessions[device], options_.thresholds);
    return out;
}

TrafficCounters Honeynet::counters() const {
    TrafficCounters c;
    c.deliveries = deliveries_;
    for (const auto& d : sim_.drops()) ++c.drops[std::string(to_string(d.reason))];
    c.decoy_replies = decoy_replies_;
    return c;
}

std::vector<Emission> Honeynet::emissions() const {
    std::vector<Emission> out;
    for (const auto& [_, a] : attackers_) out.insert(out.end(), a->emissions().begin(), a->emissions().end());
    return out;
}

ScenarioResult run_scenario(const ScenarioScript& script, const Topology& topology, const HoneynetOptions& options) {
    script.validate(topology);
    Simulation sim(topology);
    EventLog log(ClockMode::Sim);
    Honeynet net(sim, options, log, script.seed);

    std::uint32_t step_index = 0;
    for (std::size_t d = 0; d < script.days.size(); ++d) {
        TimeMs offset = static_cast<TimeMs>(d) * script.day_length_ms;
        for (const auto& step : script.days[d]) net.attacker(step.source).run_step(step, offset, step_index++);
    }
    sim.run_until_idle();

    ScenarioResult r;
    r.events = log.snapshot();
    r.events_by_device = net.events_by_device();
    r.sessions_by_device = net.sessions_by_device();
    r.reports_by_device = net.classify();
    r.daily = aggregate_daily(r.events_by_device, r.reports_by_device, script.day_length_ms,
                              static_cast<int>(script.days.size()));
    r.emissions = net.emissions();
    r.counters = net.counters();
    return r;
}

void write_scenario_outputs(const ScenarioResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_file(dir / "events.log", join_events(result.events));
    for (const auto& [device, events] : result.events_by_device) write_file(dir / (device + ".log"), join_events(events));

    std::string reports;
    for (const auto& [_, list] : result.reports_by_device) reports += serialize_reports(list);
    write_file(dir / "reports.txt", reports);

    auto layout = TableLayout::reference();
    bool reference_devices = !result.daily.empty();
    for (const auto& col : layout.footprint_columns) {
        if (!result.daily.empty() && !result.daily.front().devices.count(col.device)) reference_devices = false;
    }
    write_file(dir / "daily.txt",
               render_tables(result.daily, reference_devices ? layout : TableLayout::from_devices(result.daily)));
    write_file(dir / "series.csv", format_series_csv(export_series(result.daily)));
}

}  // namespace honeynet
