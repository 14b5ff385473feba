#include "honeynet/detection.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "honeynet/error.hpp"
#include "text_util.hpp"

namespace honeynet {
namespace {

TimeMs bucket_of(TimeMs t, TimeMs window) {
    // floor division so negative timestamps bucket consistently
    TimeMs q = t / window;
    if (t % window != 0 && t < 0) --q;
    return q;
}

AttackReport make_report(AttackClass cls, Ipv4 source, const std::vector<const ThreatEvent*>& evidence) {
    AttackReport r;
    r.attack_class = cls;
    r.source = NetEndpoint{source, 0};
    r.start_time_ms = evidence.front()->timestamp_ms;
    r.end_time_ms = evidence.front()->timestamp_ms;
    r.sensor_id = evidence.front()->sensor_id;
    for (const auto* e : evidence) {
        r.start_time_ms = std::min(r.start_time_ms, e->timestamp_ms);
        r.end_time_ms = std::max(r.end_time_ms, e->timestamp_ms);
        r.evidence.push_back(e->id);
    }
    std::sort(r.evidence.begin(), r.evidence.end());
    r.event_count = r.evidence.size();
    r.severity = assign_severity(evidence.front()->kind, cls);
    return r;
}

void sort_reports(std::vector<AttackReport>& reports) {
    std::stable_sort(reports.begin(), reports.end(), [](const AttackReport& a, const AttackReport& b) {
        return std::tie(a.start_time_ms, a.attack_class, a.source) < std::tie(b.start_time_ms, b.attack_class, b.source);
    });
}

bool has_port(const ThreatEvent& e) { return e.protocol != Protocol::Icmp; }
bool is_datagram(const ThreatEvent& e) {
    return e.kind == EventKind::UdpDatagram || e.kind == EventKind::UdpBroadcast;
}

}  // namespace

void DetectionThresholds::validate() const {
    std::vector<std::string> offenders;
    if (window_ms <= 0) offenders.push_back("window_ms");
    if (portscan_min_distinct_ports <= 0) offenders.push_back("portscan_min_distinct_ports");
    if (synscan_min_incomplete <= 0) offenders.push_back("synscan_min_incomplete");
    if (udpflood_min_datagrams <= 0) offenders.push_back("udpflood_min_datagrams");
    if (slowloris_min_concurrent <= 0) offenders.push_back("slowloris_min_concurrent");
    if (slowloris_min_duration_ms <= 0) offenders.push_back("slowloris_min_duration_ms");
    if (!offenders.empty()) throw ValidationError("invalid detection thresholds", offenders);
}

std::vector<AttackReport> detect_port_scan(std::span<const ThreatEvent> events, const DetectionThresholds& t) {
    t.validate();
    std::map<std::pair<Ipv4, TimeMs>, std::vector<const ThreatEvent*>> groups;
    for (const auto& e : events) {
        if (has_port(e)) groups[{e.source.ip, bucket_of(e.timestamp_ms, t.window_ms)}].push_back(&e);
    }
    std::vector<AttackReport> out;
    for (const auto& [key, group] : groups) {
        std::set<std::uint16_t> ports;
        for (const auto* e : group) ports.insert(e->dest_port);
        if (static_cast<int>(ports.size()) >= t.portscan_min_distinct_ports) {
            out.push_back(make_report(AttackClass::PortScan, key.first, group));
        }
    }
    sort_reports(out);
    return out;
}

std::vector<AttackReport> detect_syn_scan(std::span<const ThreatEvent> events, const DetectionThresholds& t) {
    t.validate();
    std::map<std::pair<Ipv4, TimeMs>, std::vector<const ThreatEvent*>> groups;
    for (const auto& e : events) {
        if (e.kind == EventKind::TcpSynIncomplete) {
            groups[{e.source.ip, bucket_of(e.timestamp_ms, t.window_ms)}].push_back(&e);
        }
    }
    std::vector<AttackReport> out;
    for (const auto& [key, group] : groups) {
        if (static_cast<int>(group.size()) >= t.synscan_min_incomplete) {
            out.push_back(make_report(AttackClass::SynScan, key.first, group));
        }
    }
    sort_reports(out);
    return out;
}

std::vector<AttackReport> detect_udp_flood(std::span<const ThreatEvent> events, const DetectionThresholds& t) {
    t.validate();
    std::map<std::tuple<Ipv4, TimeMs, std::uint16_t>, std::vector<const ThreatEvent*>> groups;
    for (const auto& e : events) {
        if (is_datagram(e)) groups[{e.source.ip, bucket_of(e.timestamp_ms, t.window_ms), e.dest_port}].push_back(&e);
    }
    std::vector<AttackReport> out;
    for (const auto& [key, group] : groups) {
        if (static_cast<int>(group.size()) >= t.udpflood_min_datagrams) {
            out.push_back(make_report(AttackClass::UdpBroadcastFlood, std::get<0>(key), group));
        }
    }
    sort_reports(out);
    return out;
}

std::vector<AttackReport> detect_slowloris(std::span<const SessionState> sessions,
                                           std::span<const ThreatEvent> events, const DetectionThresholds& t) {
    t.validate();
    std::map<EventId, const ThreatEvent*> by_id;
    for (const auto& e : events) by_id.emplace(e.id, &e);

    std::map<Ipv4, std::vector<const SessionState*>> per_source;
    for (const auto& s : sessions) {
        if (s.tcp_handshake_complete && s.incomplete_until() > s.opened_at_ms) per_source[s.source.ip].push_back(&s);
    }

    std::vector<AttackReport> out;
    for (const auto& [source, group] : per_source) {
        std::vector<std::pair<TimeMs, int>> edges;
        for (const auto* s : group) {
            edges.emplace_back(s->opened_at_ms, +1);
            edges.emplace_back(s->incomplete_until(), -1);
        }
        std::sort(edges.begin(), edges.end());

        std::vector<std::pair<TimeMs, TimeMs>> intervals;
        int count = 0;
        std::optional<TimeMs> held_since;
        for (std::size_t i = 0; i < edges.size();) {
            TimeMs at = edges[i].first;
            for (; i < edges.size() && edges[i].first == at; ++i) count += edges[i].second;
            bool holds = count >= t.slowloris_min_concurrent;
            if (holds && !held_since) held_since = at;
            if (!holds && held_since) {
                if (at - *held_since >= t.slowloris_min_duration_ms) intervals.emplace_back(*held_since, at);
                held_since.reset();
            }
        }

        for (const auto& [start, end] : intervals) {
            AttackReport r;
            r.attack_class = AttackClass::SlowlorisDoS;
            r.source = NetEndpoint{source, 0};
            r.start_time_ms = start;
            r.end_time_ms = end;
            for (const auto* s : group) {
                if (s->opened_at_ms >= end || s->incomplete_until() <= start) continue;
                for (auto id : s->event_ids) {
                    if (by_id.count(id)) r.evidence.push_back(id);
                }
            }
            std::sort(r.evidence.begin(), r.evidence.end());
            r.evidence.erase(std::unique(r.evidence.begin(), r.evidence.end()), r.evidence.end());
            r.event_count = r.evidence.size();
            EventKind kind = EventKind::HttpRequestPartial;
            if (!r.evidence.empty()) {
                const auto* first = by_id.at(r.evidence.front());
                kind = first->kind;
                r.sensor_id = first->sensor_id;
            }
            r.severity = assign_severity(kind, AttackClass::SlowlorisDoS);
            out.push_back(std::move(r));
        }
    }
    sort_reports(out);
    return out;
}

std::vector<AttackReport> classify_all(std::span<const ThreatEvent> events, std::span<const SessionState> sessions,
                                       const DetectionThresholds& t) {
    t.validate();
    std::unordered_set<EventId> claimed;
    std::vector<AttackReport> all;

    auto unclaimed = [&] {
        std::vector<ThreatEvent> rest;
        for (const auto& e : events) {
            if (!claimed.count(e.id)) rest.push_back(e);
        }
        return rest;
    };
    auto take = [&](std::vector<AttackReport> reports) {
        for (auto& r : reports) {
            if (r.evidence.empty()) continue;
            claimed.insert(r.evidence.begin(), r.evidence.end());
            all.push_back(std::move(r));
        }
    };

    take(detect_slowloris(sessions, events, t));
    take(detect_udp_flood(unclaimed(), t));
    take(detect_syn_scan(unclaimed(), t));
    take(detect_port_scan(unclaimed(), t));

    std::map<Ipv4, std::vector<const ThreatEvent*>> residual;
    for (const auto& e : events) {
        if (!claimed.count(e.id)) residual[e.source.ip].push_back(&e);
    }
    for (const auto& [source, group] : residual) all.push_back(make_report(AttackClass::Footprint, source, group));

    sort_reports(all);
    return all;
}

std::string serialize_report(const AttackReport& r) {
    std::string line;
    line += to_string(r.attack_class);
    line += '\t';
    line += escape_field(r.sensor_id);
    line += '\t' + r.source.ip.to_string();
    line += '\t' + std::to_string(r.source.port);
    line += '\t' + std::to_string(r.start_time_ms);
    line += '\t' + std::to_string(r.end_time_ms);
    line += '\t' + std::to_string(r.event_count);
    line += '\t';
    line += to_string(r.severity);
    line += '\t';
    for (std::size_t i = 0; i < r.evidence.size(); ++i) {
        if (i) line += ',';
        line += std::to_string(r.evidence[i]);
    }
    return line;
}

AttackReport parse_report(std::string_view line) {
    static const char* const kFields[] = {"class", "sensor_id", "source_ip", "source_port", "start",
                                          "end",   "count",     "severity",  "evidence"};
    auto fields = detail::split(line, '\t');
    for (std::size_t i = fields.size(); i < std::size(kFields); ++i) throw ParseError(kFields[i], "missing");
    if (fields.size() > std::size(kFields)) throw ParseError("evidence", "trailing data");

    AttackReport r;
    auto cls = parse_attack_class(fields[0]);
    if (!cls) throw ParseError("class", "unknown attack class");
    r.attack_class = *cls;
    r.sensor_id = unescape_field(fields[1], "sensor_id");
    auto ip = Ipv4::try_parse(fields[2]);
    if (!ip) throw ParseError("source_ip", "not a dotted quad");
    auto port = detail::parse_int<std::uint16_t>(fields[3]);
    if (!port) throw ParseError("source_port", "not a port");
    r.source = NetEndpoint{*ip, *port};
    auto start = detail::parse_int<TimeMs>(fields[4]);
    if (!start) throw ParseError("start", "not an integer");
    auto end = detail::parse_int<TimeMs>(fields[5]);
    if (!end || *end < *start) throw ParseError("end", "not an integer at or after start");
    r.start_time_ms = *start;
    r.end_time_ms = *end;
    auto count = detail::parse_int<std::size_t>(fields[6]);
    if (!count) throw ParseError("count", "not an integer");
    auto sev = parse_severity(fields[7]);
    if (!sev) throw ParseError("severity", "unknown severity");
    r.severity = *sev;
    if (!fields[8].empty()) {
        for (auto part : detail::split(fields[8], ',')) {
            auto id = detail::parse_int<EventId>(part);
            if (!id) throw ParseError("evidence", "bad event id");
            r.evidence.push_back(*id);
        }
    }
    if (*count != r.evidence.size()) throw ParseError("count", "does not match evidence length");
    r.event_count = *count;
    return r;
}

std::string serialize_reports(std::span<const AttackReport> reports) {
    std::string out;
    for (const auto& r : reports) {
        out += serialize_report(r);
        out += '\n';
    }
    return out;
}

std::vector<AttackReport> parse_reports(std::string_view text) {
    std::vector<AttackReport> out;
    for (auto line : detail::split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        out.push_back(parse_report(line));
    }
    return out;
}

std::string render_report_table(std::span<const AttackReport> reports) {
    const std::vector<std::string> header{"Class", "Device", "Source", "Start (ms)", "End (ms)", "Events", "Severity"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        rows.push_back({std::string(to_string(r.attack_class)), r.sensor_id, r.source.ip.to_string(),
                        std::to_string(r.start_time_ms), std::to_string(r.end_time_ms),
                        std::to_string(r.event_count), std::string(to_string(r.severity))});
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            out << row[c];
            if (c + 1 < row.size()) out << std::string(width[c] - row[c].size(), ' ');
        }
        out << '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    return out.str();
}

}  // namespace honeynet
