#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "honeynet/decoy.hpp"
#include "honeynet/detection.hpp"
#include "honeynet/event_log.hpp"
#include "honeynet/gateway.hpp"
#include "honeynet/harness.hpp"
#include "honeynet/reporting.hpp"
#include "honeynet/sensor.hpp"
#include "honeynet/simulation.hpp"

namespace honeynet {

struct HoneynetOptions {
    RouterConfig router;
    std::vector<FirewallRule> firewall_rules;
    RuleAction firewall_default = RuleAction::Deny;
    DecoyConfig decoy;
    SensorConfig sensor;
    DetectionThresholds thresholds;
    bool record_transcript = false;
};

struct TrafficCounters {
    std::map<NodeId, std::uint64_t> deliveries;       // final deliveries per node
    std::map<std::string, std::uint64_t> drops;       // per DropReason name
    std::uint64_t decoy_replies = 0;

    bool operator==(const TrafficCounters&) const = default;
};

// The reference honeynet wired onto one simulation: decoy, sensor, router
// and firewall behaviour is attached to the nodes holding those roles, and
// every device appends to the shared event log. Roles missing from the
// topology are simply not wired.
class Honeynet {
public:
    Honeynet(Simulation& sim, HoneynetOptions options, EventLog& log, std::uint64_t seed);
    Honeynet(const Honeynet&) = delete;
    Honeynet& operator=(const Honeynet&) = delete;

    // The attacker on `node`, created on first use.
    Attacker& attacker(const NodeId& node);

    // Sensor ids of the wired devices: decoy, sensor, firewall.
    std::vector<std::string> devices() const;
    // Every device present, each with its slice of the shared log.
    std::map<std::string, std::vector<ThreatEvent>> events_by_device() const;
    std::map<std::string, std::vector<SessionState>> sessions_by_device() const;
    std::map<std::string, std::vector<AttackReport>> classify() const;

    TrafficCounters counters() const;
    std::vector<Emission> emissions() const;

    Simulation& sim() { return sim_; }
    EventLog& log() { return log_; }
    RuleStore& firewall_rules() { return *rules_; }
    const HoneynetOptions& options() const { return options_; }
    DecoyHoneypot* decoy() { return decoy_.get(); }
    SensorHoneypot* sensor() { return sensor_.get(); }

private:
    void on_decoy_packet(const PacketEnvelope& packet);
    void send_reply(const DecoyHoneypot::Reply& reply);
    void arm_decoy_deadline();
    void arm_sensor_expiry();

    Simulation& sim_;
    HoneynetOptions options_;
    EventLog& log_;
    std::uint64_t seed_;

    const NodeInfo* decoy_node_ = nullptr;
    const NodeInfo* sensor_node_ = nullptr;
    const NodeInfo* firewall_node_ = nullptr;

    std::unique_ptr<DecoyHoneypot> decoy_;
    std::unique_ptr<SensorHoneypot> sensor_;
    std::unique_ptr<RuleStore> rules_;
    TokenBucketState buckets_;
    std::map<NodeId, std::unique_ptr<Attacker>> attackers_;
    std::map<NodeId, std::uint64_t> deliveries_;
    std::uint64_t decoy_replies_ = 0;
    std::set<TimeMs> decoy_timers_;
    std::set<TimeMs> sensor_timers_;
};

struct ScenarioResult {
    std::vector<ThreatEvent> events;  // the whole shared log
    std::map<std::string, std::vector<ThreatEvent>> events_by_device;
    std::map<std::string, std::vector<SessionState>> sessions_by_device;
    std::map<std::string, std::vector<AttackReport>> reports_by_device;
    std::vector<DailyReport> daily;  // at least one row per scripted day
    std::vector<Emission> emissions;
    TrafficCounters counters;
};

// Runs every scripted step (day d step at d * day_length + at) on a fresh
// simulation until idle. Throws ValidationError when the script does not fit
// the topology.
ScenarioResult run_scenario(const ScenarioScript& script, const Topology& topology,
                            const HoneynetOptions& options = {});

// Writes events.log, <device>.log, reports.txt, daily.txt (reference table
// layout) and series.csv into `dir`, creating it if needed. Throws IoError.
void write_scenario_outputs(const ScenarioResult& result, const std::filesystem::path& dir);

// FNV-1a; stable across platforms, used to derive per-node seeds.
std::uint64_t stable_hash(std::string_view text);

}  // namespace honeynet
