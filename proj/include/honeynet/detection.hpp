#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "honeynet/event.hpp"
#include "honeynet/session.hpp"

namespace honeynet {

struct DetectionThresholds {
    TimeMs window_ms = 60'000;
    int portscan_min_distinct_ports = 10;
    int synscan_min_incomplete = 5;
    int udpflood_min_datagrams = 50;
    int slowloris_min_concurrent = 20;
    TimeMs slowloris_min_duration_ms = 30'000;

    // Throws ValidationError naming every non-positive field.
    void validate() const;
};

struct AttackReport {
    AttackClass attack_class = AttackClass::Footprint;
    std::string sensor_id;
    NetEndpoint source;  // port 0: aggregated over source ports
    TimeMs start_time_ms = 0;
    TimeMs end_time_ms = 0;
    std::size_t event_count = 0;
    Severity severity = Severity::Low;
    std::vector<EventId> evidence;  // ascending

    bool operator==(const AttackReport&) const = default;
};

// Scan and flood detectors group events by (source ip, window bucket) with
// buckets aligned to multiples of window_ms. Inputs must be sorted by
// timestamp. Each returns reports ordered by (start, source).

std::vector<AttackReport> detect_port_scan(std::span<const ThreatEvent> events, const DetectionThresholds& t);
std::vector<AttackReport> detect_syn_scan(std::span<const ThreatEvent> events, const DetectionThresholds& t);
// Groups by (source ip, bucket, destination port).
std::vector<AttackReport> detect_udp_flood(std::span<const ThreatEvent> events, const DetectionThresholds& t);

// A session counts toward concurrency over [opened_at, incomplete_until)
// when its handshake completed and its header never did before that end.
// The report covers the maximal interval during which the per-source count
// stays at or above the threshold; evidence is every event in `events`
// belonging to a counted session overlapping that interval.
std::vector<AttackReport> detect_slowloris(std::span<const SessionState> sessions,
                                           std::span<const ThreatEvent> events, const DetectionThresholds& t);

// Runs every detector with precedence SlowlorisDoS > UdpBroadcastFlood >
// SynScan > PortScan; each detector sees only events not yet claimed.
// Whatever is left becomes one Footprint report per source ip. Reports are
// ordered by (start, class, source).
std::vector<AttackReport> classify_all(std::span<const ThreatEvent> events, std::span<const SessionState> sessions,
                                       const DetectionThresholds& t);

// One report per line, tab separated:
//   class sensor_id source_ip source_port start end count severity evidence(comma separated)
std::string serialize_report(const AttackReport& report);
AttackReport parse_report(std::string_view line);
std::string serialize_reports(std::span<const AttackReport> reports);
std::vector<AttackReport> parse_reports(std::string_view text);

// Aligned text table, one row per report.
std::string render_report_table(std::span<const AttackReport> reports);

}  // namespace honeynet
