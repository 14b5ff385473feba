#include "honeynet/sensor.hpp"

#include <algorithm>

#include "honeynet/decoy.hpp"
#include "honeynet/error.hpp"
#include "text_util.hpp"

namespace honeynet {
namespace {

constexpr std::size_t kMaxBufferedHeader = 8 * 1024;

std::string span_text(TimeMs start, TimeMs end) {
    return "start=" + std::to_string(start) + " end=" + std::to_string(end);
}

std::set<std::uint16_t> parse_ports(std::string_view key, std::string_view value) {
    std::set<std::uint16_t> ports;
    for (auto p : detail::split(value, ',')) {
        p = detail::trim(p);
        if (p.empty()) continue;
        auto port = detail::parse_int<std::uint16_t>(p);
        if (!port) throw ParseError(std::string(key), "bad port '" + std::string(p) + "'");
        ports.insert(*port);
    }
    return ports;
}

}  // namespace

void SensorConfig::validate() const {
    std::vector<std::string> offenders;
    if (monitored_tcp_ports.empty() || monitored_tcp_ports.count(0)) offenders.push_back("monitored_tcp_ports");
    if (monitored_udp_ports.empty() || monitored_udp_ports.count(0)) offenders.push_back("monitored_udp_ports");
    if (sensor_id.empty()) offenders.push_back("sensor_id");
    if (session_idle_timeout_ms <= 0) offenders.push_back("session_idle_timeout_ms");
    if (!offenders.empty()) throw ValidationError("invalid sensor config", offenders);
}

SensorConfig SensorConfig::parse(std::string_view text) {
    SensorConfig cfg;
    for (auto raw : detail::split(text, '\n')) {
        auto line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(std::string(line), "expected key=value");
        auto key = detail::trim(line.substr(0, eq));
        auto value = detail::trim(line.substr(eq + 1));
        if (key == "tcp_ports") {
            cfg.monitored_tcp_ports = parse_ports(key, value);
        } else if (key == "udp_ports") {
            cfg.monitored_udp_ports = parse_ports(key, value);
        } else if (key == "sensor_id") {
            cfg.sensor_id = std::string(value);
        } else if (key == "session_idle_timeout_ms") {
            auto v = detail::parse_int<TimeMs>(value);
            if (!v) throw ParseError("session_idle_timeout_ms", "not an integer");
            cfg.session_idle_timeout_ms = *v;
        } else {
            throw ParseError(std::string(key), "unknown sensor setting");
        }
    }
    cfg.validate();
    return cfg;
}

SensorHoneypot::SensorHoneypot(SensorConfig config, EventLog& log) : config_(std::move(config)), log_(log) {
    config_.validate();
}

ThreatEvent SensorHoneypot::make_event(const NetEndpoint& src, std::uint16_t dst_port, EventKind kind, TimeMs now,
                                       std::string_view payload, std::string description) const {
    ThreatEvent e;
    e.timestamp_ms = now;
    e.sensor_id = config_.sensor_id;
    e.source = src;
    e.dest_port = dst_port;
    e.protocol = protocol_of(kind);
    e.kind = kind;
    e.severity = assign_severity(kind);
    e.payload_prefix = payload_prefix_of(payload);
    e.description = std::move(description);
    return e;
}

ThreatEvent SensorHoneypot::emit(ThreatEvent event, SessionState* session) {
    event.id = log_.append(event);
    if (session) session->event_ids.push_back(event.id);
    return event;
}

void SensorHoneypot::close(std::map<Key, Live>::iterator it, TimeMs now, std::vector<ThreatEvent>& out) {
    auto& s = it->second.session;
    if (!s.tcp_handshake_complete) {
        out.push_back(emit(make_event(s.source, s.dest_port, EventKind::TcpSynIncomplete, now, {},
                                      "half-open session " + span_text(s.opened_at_ms, now)),
                           &s));
    }
    s.closed_at_ms = now;
    history_.push_back(std::move(s));
    open_.erase(it);
}

void SensorHoneypot::absorb_data(Live& live, const PacketEnvelope& packet, TimeMs now,
                                 std::vector<ThreatEvent>& out) {
    auto& s = live.session;
    bool first_data = s.bytes_received == 0;
    s.tcp_handshake_complete = true;  // data rides on the final ACK
    s.last_activity_ms = now;
    s.bytes_received += packet.payload.size();
    if (live.header.size() < kMaxBufferedHeader) {
        live.header.append(packet.payload.substr(0, kMaxBufferedHeader - live.header.size()));
    }
    if (s.http_header_complete) return;

    auto scan = scan_http_header(live.header);
    s.header_lines_received = scan.complete_lines;
    if (scan.terminated) {
        s.http_header_complete = true;
        s.header_completed_at_ms = now;
        auto eol = live.header.find_first_of("\r\n");
        out.push_back(emit(make_event(s.source, s.dest_port, EventKind::HttpRequestComplete, now, live.header,
                                      live.header.substr(0, eol) + " " + span_text(s.opened_at_ms, now)),
                           &s));
    } else if (first_data) {
        out.push_back(emit(make_event(s.source, s.dest_port, EventKind::HttpRequestPartial, now, live.header,
                                      "partial request, " + std::to_string(scan.complete_lines) +
                                          " header lines " + span_text(s.opened_at_ms, now)),
                           &s));
    }
}

std::vector<ThreatEvent> SensorHoneypot::ingest(const PacketEnvelope& packet, TimeMs now) {
    std::vector<ThreatEvent> out;
    const auto& src = packet.src;
    const auto dport = packet.dst.port;

    if (packet.protocol == Protocol::Icmp) {
        ++stats_.deliveries;
        ++stats_.events;
        out.push_back(emit(make_event(src, 0, EventKind::IcmpEcho, now, packet.payload,
                                      "ICMP echo from " + src.ip.to_string()),
                           nullptr));
        return out;
    }
    if (packet.protocol == Protocol::Udp) {
        if (!config_.monitored_udp_ports.count(dport)) {
            ++stats_.unmonitored;
            return out;
        }
        ++stats_.deliveries;
        ++stats_.events;
        bool broadcast = packet.dst.ip == Ipv4::broadcast();
        out.push_back(emit(make_event(src, dport, broadcast ? EventKind::UdpBroadcast : EventKind::UdpDatagram, now,
                                      packet.payload,
                                      std::string(broadcast ? "broadcast " : "") + "datagram of " +
                                          std::to_string(packet.payload.size()) + " bytes"),
                           nullptr));
        return out;
    }

    if (!config_.monitored_tcp_ports.count(dport)) {
        ++stats_.unmonitored;
        return out;
    }
    ++stats_.deliveries;

    const Key key{src.ip.value(), src.port, dport};
    auto it = open_.find(key);

    auto open_session = [&](bool handshake) -> Live& {
        Live live;
        live.session.source = src;
        live.session.dest_port = dport;
        live.session.opened_at_ms = now;
        live.session.last_activity_ms = now;
        live.session.tcp_handshake_complete = handshake;
        return open_.insert_or_assign(key, std::move(live)).first->second;
    };

    switch (packet.segment) {
        case TcpSegment::Syn: {
            if (it != open_.end()) close(it, now, out);
            auto& live = open_session(false);
            out.push_back(emit(make_event(src, dport, EventKind::TcpSyn, now, {},
                                          "SYN to port " + std::to_string(dport)),
                               &live.session));
            ++stats_.events;
            return out;
        }
        case TcpSegment::Connect: {
            if (it != open_.end()) close(it, now, out);
            auto& live = open_session(true);
            auto& s = live.session;
            s.bytes_received = packet.payload.size();
            live.header = packet.payload.substr(0, kMaxBufferedHeader);
            auto scan = scan_http_header(live.header);
            s.header_lines_received = scan.complete_lines;
            bool complete = is_complete_http_request(live.header);
            if (complete) {
                s.http_header_complete = true;
                s.header_completed_at_ms = now;
            }
            auto eol = live.header.find_first_of("\r\n");
            out.push_back(emit(make_event(src, dport, complete ? EventKind::HttpRequestComplete : EventKind::TcpConnect,
                                          now, packet.payload,
                                          complete ? live.header.substr(0, eol) : "connect to port " + std::to_string(dport)),
                               &s));
            s.closed_at_ms = now;
            history_.push_back(std::move(s));
            open_.erase(key);
            ++stats_.events;
            return out;
        }
        case TcpSegment::Ack:
            if (it == open_.end()) {
                ++stats_.stray;
                return out;
            }
            it->second.session.tcp_handshake_complete = true;
            it->second.session.last_activity_ms = now;
            ++stats_.transitions;
            return out;
        case TcpSegment::Data:
            if (it == open_.end()) {
                ++stats_.stray;
                return out;
            }
            absorb_data(it->second, packet, now, out);
            ++(out.empty() ? stats_.transitions : stats_.events);
            return out;
        case TcpSegment::Fin:
        case TcpSegment::Rst:
            if (it == open_.end()) {
                ++stats_.stray;
                return out;
            }
            close(it, now, out);
            ++(out.empty() ? stats_.transitions : stats_.events);
            return out;
        case TcpSegment::None:
            ++stats_.stray;
            return out;
    }
    return out;
}

std::vector<ThreatEvent> SensorHoneypot::expire_sessions(TimeMs now) {
    std::vector<ThreatEvent> out;
    // Expire oldest first so TcpSynIncomplete ids follow session age.
    std::vector<std::map<Key, Live>::iterator> due;
    for (auto it = open_.begin(); it != open_.end(); ++it) {
        if (now - it->second.session.last_activity_ms > config_.session_idle_timeout_ms) due.push_back(it);
    }
    std::stable_sort(due.begin(), due.end(), [](auto a, auto b) {
        return a->second.session.opened_at_ms < b->second.session.opened_at_ms;
    });
    for (auto it : due) close(it, now, out);
    return out;
}

std::optional<TimeMs> SensorHoneypot::next_expiry() const {
    std::optional<TimeMs> best;
    for (const auto& [_, live] : open_) {
        TimeMs t = live.session.last_activity_ms + config_.session_idle_timeout_ms + 1;
        if (!best || t < *best) best = t;
    }
    return best;
}

std::vector<SessionState> SensorHoneypot::sessions() const {
    std::vector<SessionState> all = history_;
    for (const auto& [_, live] : open_) all.push_back(live.session);
    return all;
}

}  // namespace honeynet
