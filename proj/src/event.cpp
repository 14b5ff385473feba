#include "honeynet/event.hpp"

#include <array>
#include <utility>

#include "honeynet/error.hpp"
#include "text_util.hpp"

namespace honeynet {
namespace {

constexpr std::array<std::pair<Protocol, std::string_view>, 3> kProtocolNames{{
    {Protocol::Tcp, "TCP"},
    {Protocol::Udp, "UDP"},
    {Protocol::Icmp, "ICMP"},
}};

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kKindNames{{
    {EventKind::TcpConnect, "TcpConnect"},
    {EventKind::TcpSyn, "TcpSyn"},
    {EventKind::TcpSynIncomplete, "TcpSynIncomplete"},
    {EventKind::UdpDatagram, "UdpDatagram"},
    {EventKind::UdpBroadcast, "UdpBroadcast"},
    {EventKind::IcmpEcho, "IcmpEcho"},
    {EventKind::HttpRequestComplete, "HttpRequestComplete"},
    {EventKind::HttpRequestPartial, "HttpRequestPartial"},
}};

constexpr std::array<std::pair<Severity, std::string_view>, 3> kSeverityNames{{
    {Severity::Low, "Low"},
    {Severity::Medium, "Medium"},
    {Severity::High, "High"},
}};

constexpr std::array<std::pair<AttackClass, std::string_view>, 5> kClassNames{{
    {AttackClass::Footprint, "Footprint"},
    {AttackClass::PortScan, "PortScan"},
    {AttackClass::SynScan, "SynScan"},
    {AttackClass::UdpBroadcastFlood, "UdpBroadcastFlood"},
    {AttackClass::SlowlorisDoS, "SlowlorisDoS"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view text) {
    for (const auto& [v, name] : table) {
        if (name == text) return v;
    }
    return std::nullopt;
}

constexpr std::array<std::string_view, 11> kFieldNames{
    "id",       "timestamp_ms", "sensor_id", "source_ip",      "source_port", "dest_port",
    "protocol", "kind",         "severity",  "payload_prefix", "description",
};

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string_view to_string(Protocol p) { return name_of(kProtocolNames, p); }
std::string_view to_string(EventKind k) { return name_of(kKindNames, k); }
std::string_view to_string(Severity s) { return name_of(kSeverityNames, s); }
std::string_view to_string(AttackClass c) { return name_of(kClassNames, c); }

std::optional<Protocol> parse_protocol(std::string_view text) { return value_of(kProtocolNames, text); }
std::optional<EventKind> parse_event_kind(std::string_view text) { return value_of(kKindNames, text); }
std::optional<Severity> parse_severity(std::string_view text) { return value_of(kSeverityNames, text); }
std::optional<AttackClass> parse_attack_class(std::string_view text) { return value_of(kClassNames, text); }

Protocol protocol_of(EventKind k) {
    switch (k) {
        case EventKind::UdpDatagram:
        case EventKind::UdpBroadcast:
            return Protocol::Udp;
        case EventKind::IcmpEcho:
            return Protocol::Icmp;
        default:
            return Protocol::Tcp;
    }
}

Severity assign_severity(EventKind /*kind*/, std::optional<AttackClass> class_hint) {
    if (!class_hint) return Severity::Low;
    switch (*class_hint) {
        case AttackClass::SlowlorisDoS:
        case AttackClass::UdpBroadcastFlood:
            return Severity::High;
        case AttackClass::PortScan:
        case AttackClass::SynScan:
            return Severity::Medium;
        case AttackClass::Footprint:
            return Severity::Low;
    }
    return Severity::Low;
}

std::string payload_prefix_of(std::string_view bytes) {
    return std::string(bytes.substr(0, kPayloadPrefixCap));
}

std::string escape_field(std::string_view raw) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(raw.size());
    for (char ch : raw) {
        auto c = static_cast<unsigned char>(ch);
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c < 0x20 || c > 0x7e) {
                    out += "\\x";
                    out.push_back(kHex[c >> 4]);
                    out.push_back(kHex[c & 0xf]);
                } else {
                    out.push_back(ch);
                }
        }
    }
    return out;
}

std::string unescape_field(std::string_view escaped, const std::string& field_name) {
    std::string out;
    out.reserve(escaped.size());
    for (std::size_t i = 0; i < escaped.size(); ++i) {
        char c = escaped[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (++i >= escaped.size()) throw ParseError(field_name, "dangling escape");
        switch (escaped[i]) {
            case '\\': out.push_back('\\'); break;
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            case 'x': {
                if (i + 2 >= escaped.size()) throw ParseError(field_name, "truncated \\x escape");
                int hi = hex_value(escaped[i + 1]);
                int lo = hex_value(escaped[i + 2]);
                if (hi < 0 || lo < 0) throw ParseError(field_name, "bad \\x escape");
                out.push_back(static_cast<char>((hi << 4) | lo));
                i += 2;
                break;
            }
            default:
                throw ParseError(field_name, std::string("unknown escape \\") + escaped[i]);
        }
    }
    return out;
}

std::string serialize_event(const ThreatEvent& e) {
    std::string line;
    line += std::to_string(e.id);
    line += '\t';
    line += std::to_string(e.timestamp_ms);
    line += '\t';
    line += escape_field(e.sensor_id);
    line += '\t';
    line += e.source.ip.to_string();
    line += '\t';
    line += std::to_string(e.source.port);
    line += '\t';
    line += std::to_string(e.dest_port);
    line += '\t';
    line += to_string(e.protocol);
    line += '\t';
    line += to_string(e.kind);
    line += '\t';
    line += to_string(e.severity);
    line += '\t';
    line += escape_field(e.payload_prefix);
    line += '\t';
    line += escape_field(e.description);
    return line;
}

ThreatEvent parse_event(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fields = detail::split(line, '\t');

    auto field = [&](std::size_t i) -> std::string_view {
        if (i >= fields.size()) throw ParseError(std::string(kFieldNames[i]), "missing");
        return fields[i];
    };
    auto bad = [](std::size_t i, std::string_view value) {
        return ParseError(std::string(kFieldNames[i]), "invalid value '" + std::string(value) + "'");
    };

    ThreatEvent e;
    auto id = detail::parse_int<EventId>(field(0));
    if (!id) throw bad(0, field(0));
    e.id = *id;

    auto ts = detail::parse_int<TimeMs>(field(1));
    if (!ts) throw bad(1, field(1));
    e.timestamp_ms = *ts;

    e.sensor_id = unescape_field(field(2), "sensor_id");

    auto ip = Ipv4::try_parse(field(3));
    if (!ip) throw bad(3, field(3));
    e.source.ip = *ip;

    auto sport = detail::parse_int<std::uint16_t>(field(4));
    if (!sport) throw bad(4, field(4));
    e.source.port = *sport;

    auto dport = detail::parse_int<std::uint16_t>(field(5));
    if (!dport) throw bad(5, field(5));
    e.dest_port = *dport;

    auto proto = parse_protocol(field(6));
    if (!proto) throw bad(6, field(6));
    e.protocol = *proto;

    auto kind = parse_event_kind(field(7));
    if (!kind) throw bad(7, field(7));
    e.kind = *kind;

    auto sev = parse_severity(field(8));
    if (!sev) throw bad(8, field(8));
    e.severity = *sev;

    e.payload_prefix = unescape_field(field(9), "payload_prefix");
    if (e.payload_prefix.size() > kPayloadPrefixCap) {
        throw ParseError("payload_prefix", "longer than " + std::to_string(kPayloadPrefixCap) + " bytes");
    }
    e.description = unescape_field(field(10), "description");

    if (fields.size() > kFieldNames.size()) throw ParseError("description", "trailing fields");
    return e;
}

}  // namespace honeynet
