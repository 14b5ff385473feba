#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "honeynet/ipv4.hpp"

namespace honeynet {

using TimeMs = std::int64_t;
using EventId = std::uint64_t;

inline constexpr std::size_t kPayloadPrefixCap = 256;

enum class Protocol { Tcp, Udp, Icmp };

enum class EventKind {
    TcpConnect,
    TcpSyn,
    TcpSynIncomplete,
    UdpDatagram,
    UdpBroadcast,
    IcmpEcho,
    HttpRequestComplete,
    HttpRequestPartial,
};

enum class Severity { Low, Medium, High };

enum class AttackClass { Footprint, PortScan, SynScan, UdpBroadcastFlood, SlowlorisDoS };

// Footprinting classes are counted per event in daily reports, DDoS classes per report.
constexpr bool is_ddos_class(AttackClass c) {
    return c == AttackClass::SlowlorisDoS || c == AttackClass::UdpBroadcastFlood;
}
constexpr bool is_footprint_class(AttackClass c) { return !is_ddos_class(c); }

std::string_view to_string(Protocol p);
std::string_view to_string(EventKind k);
std::string_view to_string(Severity s);
std::string_view to_string(AttackClass c);

std::optional<Protocol> parse_protocol(std::string_view text);
std::optional<EventKind> parse_event_kind(std::string_view text);
std::optional<Severity> parse_severity(std::string_view text);
std::optional<AttackClass> parse_attack_class(std::string_view text);

// The protocol an event kind is carried on.
Protocol protocol_of(EventKind k);

struct ThreatEvent {
    EventId id = 0;
    TimeMs timestamp_ms = 0;
    std::string sensor_id;
    NetEndpoint source;
    std::uint16_t dest_port = 0;
    Protocol protocol = Protocol::Tcp;
    EventKind kind = EventKind::TcpConnect;
    Severity severity = Severity::Low;
    std::string payload_prefix;  // raw bytes, at most kPayloadPrefixCap
    std::string description;

    bool operator==(const ThreatEvent&) const = default;
};

// DDoS-class hint -> High, scan-class hint -> Medium, anything else -> Low.
Severity assign_severity(EventKind kind, std::optional<AttackClass> class_hint = std::nullopt);

// First kPayloadPrefixCap bytes of a request.
std::string payload_prefix_of(std::string_view bytes);

// Backslash escaping that keeps a record on one printable ASCII line:
// \\ \t \n \r and \xHH for every other byte outside 0x20..0x7e.
std::string escape_field(std::string_view raw);
// Throws ParseError(field_name) on a dangling or malformed escape.
std::string unescape_field(std::string_view escaped, const std::string& field_name);

// One tab-separated line, no trailing newline. Field order:
// id, timestamp_ms, sensor_id, source ip, source port, dest_port,
// protocol, kind, severity, payload_prefix, description.
std::string serialize_event(const ThreatEvent& event);
// Throws ParseError naming the first missing or malformed field.
ThreatEvent parse_event(std::string_view line);

}  // namespace honeynet
