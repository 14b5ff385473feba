#include "honeynet/harness.hpp"

#include <algorithm>
#include <set>

#include "honeynet/error.hpp"
#include "text_util.hpp"

namespace honeynet {
namespace {

constexpr std::uint16_t kEphemeralLo = 32768;
constexpr std::uint16_t kEphemeralHi = 60999;

std::string step_kind_name(const StepKind& kind) {
    struct Visitor {
        std::string operator()(const ConnectScan&) const { return "connect-scan"; }
        std::string operator()(const SynScan&) const { return "syn-scan"; }
        std::string operator()(const UdpFlood&) const { return "udp-flood"; }
        std::string operator()(const Slowloris&) const { return "slowloris"; }
        std::string operator()(const SingleProbe&) const { return "probe"; }
    };
    return std::visit(Visitor{}, kind);
}

std::string format_ports(const std::vector<std::uint16_t>& ports) {
    std::string out;
    for (std::size_t i = 0; i < ports.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(ports[i]);
    }
    return out;
}

std::vector<std::uint16_t> parse_port_list(std::string_view text) {
    std::vector<std::uint16_t> ports;
    for (auto part : detail::split(text, ',')) {
        part = detail::trim(part);
        auto dash = part.find('-');
        auto lo = detail::parse_int<std::uint16_t>(part.substr(0, dash));
        auto hi = dash == std::string_view::npos ? lo : detail::parse_int<std::uint16_t>(part.substr(dash + 1));
        if (!lo || !hi || *lo == 0 || *lo > *hi) throw ParseError("ports", "bad port or range '" + std::string(part) + "'");
        for (std::uint32_t p = *lo; p <= *hi; ++p) ports.push_back(static_cast<std::uint16_t>(p));
    }
    return ports;
}

TimeMs parse_at(std::string_view text) {
    if (text.find(':') == std::string_view::npos) {
        auto v = detail::parse_int<TimeMs>(text);
        if (!v) throw ParseError("at", "expected milliseconds or HH:MM:SS");
        return *v;
    }
    auto parts = detail::split(text, ':');
    if (parts.size() != 3) throw ParseError("at", "expected HH:MM:SS[.mmm]");
    auto h = detail::parse_int<TimeMs>(parts[0]);
    auto m = detail::parse_int<TimeMs>(parts[1]);
    auto sec_text = parts[2];
    TimeMs ms = 0;
    if (auto dot = sec_text.find('.'); dot != std::string_view::npos) {
        auto frac = sec_text.substr(dot + 1);
        auto f = detail::parse_int<TimeMs>(frac);
        if (!f || frac.size() != 3) throw ParseError("at", "milliseconds must have three digits");
        ms = *f;
        sec_text = sec_text.substr(0, dot);
    }
    auto s = detail::parse_int<TimeMs>(sec_text);
    if (!h || !m || !s || *m > 59 || *s > 59) throw ParseError("at", "bad clock time '" + std::string(text) + "'");
    return ((*h * 60 + *m) * 60 + *s) * 1000 + ms;
}

std::string format_at(TimeMs at) {
    if (at < 0) return std::to_string(at);
    auto two = [](TimeMs v) { return (v < 10 ? "0" : "") + std::to_string(v); };
    TimeMs ms = at % 1000;
    TimeMs s = at / 1000;
    std::string out = two(s / 3600) + ":" + two(s / 60 % 60) + ":" + two(s % 60);
    if (ms) out += "." + std::string(ms < 100 ? (ms < 10 ? "00" : "0") : "") + std::to_string(ms);
    return out;
}

std::uint16_t default_slowloris_port(const NodeInfo& target) {
    if (target.open_ports.count(80)) return 80;
    if (target.open_ports.count(8080)) return 8080;
    if (!target.open_ports.empty()) return *target.open_ports.begin();
    return 80;
}

std::string random_token(std::mt19937_64& rng, std::size_t len) {
    static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string out;
    for (std::size_t i = 0; i < len; ++i) out += kAlphabet[rng() % (sizeof(kAlphabet) - 1)];
    return out;
}

}  // namespace

void AttackStep::validate() const {
    std::vector<std::string> offenders;
    if (at_ms < 0) offenders.push_back("at");
    if (source.empty()) offenders.push_back("source");
    if (target.empty()) offenders.push_back("target");
    struct Visitor {
        std::vector<std::string>& out;
        void operator()(const ConnectScan& s) const {
            if (s.ports.empty() || std::count(s.ports.begin(), s.ports.end(), 0)) out.push_back("ports");
        }
        void operator()(const SynScan& s) const {
            if (s.ports.empty() || std::count(s.ports.begin(), s.ports.end(), 0)) out.push_back("ports");
        }
        void operator()(const UdpFlood& f) const {
            if (f.count <= 0) out.push_back("count");
            if (f.dest_port == 0) out.push_back("port");
            if (f.interval_ms <= 0) out.push_back("interval");
        }
        void operator()(const Slowloris& s) const {
            if (s.connections <= 0) out.push_back("connections");
            if (s.header_interval_ms <= 0) out.push_back("interval");
            if (s.duration_ms <= 0) out.push_back("duration");
            if (s.ramp_ms < 0) out.push_back("ramp");
        }
        void operator()(const SingleProbe& p) const {
            if (p.dest_port == 0) out.push_back("port");
        }
    };
    std::visit(Visitor{offenders}, kind);
    if (!offenders.empty()) throw ValidationError("invalid attack step", offenders);
}

void ScenarioScript::validate(const Topology& topology) const {
    std::set<std::string> offenders;
    if (day_length_ms <= 0) offenders.insert("day_length_ms");
    for (std::size_t d = 0; d < days.size(); ++d) {
        for (const auto& step : days[d]) {
            try {
                step.validate();
            } catch (const ValidationError& e) {
                for (const auto& o : e.offenders()) offenders.insert("day " + std::to_string(d + 1) + ": " + o);
            }
            if (!topology.find(step.source)) offenders.insert(step.source);
            if (!topology.find(step.target)) offenders.insert(step.target);
            if (step.at_ms >= day_length_ms) {
                offenders.insert("day " + std::to_string(d + 1) + ": step at " + std::to_string(step.at_ms) +
                                 " is past the end of the day");
            }
        }
    }
    if (!offenders.empty()) {
        throw ValidationError("scenario does not fit the topology",
                              std::vector<std::string>(offenders.begin(), offenders.end()));
    }
}

ScenarioScript ScenarioScript::parse(std::string_view text) {
    ScenarioScript script;
    script.days.clear();
    int line_no = 0;
    for (auto raw : detail::split(text, '\n')) {
        ++line_no;
        auto line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        auto tokens = detail::tokenize(line);
        const auto& head = tokens[0];
        auto where = " (line " + std::to_string(line_no) + ")";

        if (head == "seed" || head == "day_length_ms") {
            if (tokens.size() != 2) throw ParseError(head, "expects one value" + where);
            if (head == "seed") {
                auto v = detail::parse_int<std::uint64_t>(tokens[1]);
                if (!v) throw ParseError("seed", "not an integer" + where);
                script.seed = *v;
            } else {
                auto v = detail::parse_int<TimeMs>(tokens[1]);
                if (!v || *v <= 0) throw ParseError("day_length_ms", "not a positive integer" + where);
                script.day_length_ms = *v;
            }
        } else if (head == "day") {
            auto k = tokens.size() == 2 ? detail::parse_int<std::size_t>(tokens[1]) : std::nullopt;
            if (!k || *k != script.days.size() + 1) {
                throw ParseError("day", "days must be numbered 1, 2, ... in order" + where);
            }
            script.days.emplace_back();
        } else if (head == "step") {
            if (script.days.empty()) throw ParseError("day", "step before the first day line" + where);
            if (tokens.size() < 5) throw ParseError("step", "expected: step <at> <source> <target> <kind> ..." + where);
            AttackStep step;
            step.at_ms = parse_at(tokens[1]);
            step.source = tokens[2];
            step.target = tokens[3];
            const auto& kind = tokens[4];

            std::map<std::string, std::string> kv;
            std::set<std::string> flags;
            for (std::size_t i = 5; i < tokens.size(); ++i) {
                auto eq = tokens[i].find('=');
                if (eq == std::string::npos) flags.insert(tokens[i]);
                else kv[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
            }
            std::set<std::string> used;
            auto take = [&](const std::string& key) -> std::optional<std::string> {
                auto it = kv.find(key);
                if (it == kv.end()) return std::nullopt;
                used.insert(key);
                return it->second;
            };
            auto need_int = [&](const std::string& key) -> TimeMs {
                auto v = take(key);
                if (!v) throw ParseError(key, "missing for " + kind + where);
                auto n = detail::parse_int<TimeMs>(*v);
                if (!n) throw ParseError(key, "not an integer" + where);
                return *n;
            };
            auto need_port = [&](const std::string& key) -> std::uint16_t {
                auto v = need_int(key);
                if (v <= 0 || v > 65535) throw ParseError(key, "not a port" + where);
                return static_cast<std::uint16_t>(v);
            };

            if (kind == "probe") {
                step.kind = SingleProbe{need_port("port")};
            } else if (kind == "connect-scan" || kind == "syn-scan") {
                auto ports = take("ports");
                if (!ports) throw ParseError("ports", "missing for " + kind + where);
                auto list = parse_port_list(*ports);
                if (kind == "connect-scan") step.kind = ConnectScan{list};
                else step.kind = SynScan{list};
            } else if (kind == "udp-flood") {
                UdpFlood f;
                f.count = static_cast<int>(need_int("count"));
                f.dest_port = need_port("port");
                if (kv.count("interval")) f.interval_ms = need_int("interval");
                f.broadcast = flags.erase("broadcast") > 0;
                step.kind = f;
            } else if (kind == "slowloris") {
                Slowloris s;
                s.connections = static_cast<int>(need_int("connections"));
                s.header_interval_ms = need_int("interval");
                s.duration_ms = need_int("duration");
                if (kv.count("ramp")) s.ramp_ms = need_int("ramp");
                if (kv.count("port")) s.dest_port = need_port("port");
                step.kind = s;
            } else {
                throw ParseError("kind", "unknown step kind '" + kind + "'" + where);
            }
            for (const auto& [key, _] : kv) {
                if (!used.count(key)) throw ParseError(key, "not a parameter of " + kind + where);
            }
            if (!flags.empty()) throw ParseError(*flags.begin(), "not a flag of " + kind + where);
            try {
                step.validate();
            } catch (const ValidationError& e) {
                throw ParseError(e.offenders().empty() ? "step" : e.offenders().front(), e.what() + where);
            }
            script.days.back().push_back(std::move(step));
        } else {
            throw ParseError(head, "unknown directive" + where);
        }
    }
    return script;
}

std::string ScenarioScript::to_text() const {
    std::string out = "seed " + std::to_string(seed) + "\n";
    out += "day_length_ms " + std::to_string(day_length_ms) + "\n";
    for (std::size_t d = 0; d < days.size(); ++d) {
        out += "\nday " + std::to_string(d + 1) + "\n";
        for (const auto& step : days[d]) {
            out += "step " + format_at(step.at_ms) + " " + step.source + " " + step.target + " " +
                   step_kind_name(step.kind);
            struct Visitor {
                std::string operator()(const ConnectScan& s) const { return " ports=" + format_ports(s.ports); }
                std::string operator()(const SynScan& s) const { return " ports=" + format_ports(s.ports); }
                std::string operator()(const UdpFlood& f) const {
                    return " count=" + std::to_string(f.count) + " port=" + std::to_string(f.dest_port) +
                           " interval=" + std::to_string(f.interval_ms) + (f.broadcast ? " broadcast" : "");
                }
                std::string operator()(const Slowloris& s) const {
                    std::string o = " connections=" + std::to_string(s.connections) +
                                    " interval=" + std::to_string(s.header_interval_ms) +
                                    " duration=" + std::to_string(s.duration_ms) + " ramp=" + std::to_string(s.ramp_ms);
                    if (s.dest_port) o += " port=" + std::to_string(s.dest_port);
                    return o;
                }
                std::string operator()(const SingleProbe& p) const { return " port=" + std::to_string(p.dest_port); }
            };
            out += std::visit(Visitor{}, step.kind) + "\n";
        }
    }
    return out;
}

std::string format_emission(const Emission& e) {
    return std::to_string(e.at_ms) + "\t" + std::to_string(e.step) + "\t" + std::string(to_string(e.protocol)) +
           "\t" + std::string(to_string(e.segment)) + "\t" + e.src.to_string() + "\t" + e.dst.to_string() + "\t" +
           std::to_string(e.bytes);
}

Attacker::Attacker(Simulation& sim, NodeId node, std::uint64_t seed)
    : sim_(sim), node_(std::move(node)), seed_(seed) {
    const NodeInfo& self = require_node(node_);
    ip_ = self.ip;
    std::mt19937_64 rng(seed);
    port_cursor_ = static_cast<std::uint16_t>(kEphemeralLo + rng() % (kEphemeralHi - kEphemeralLo + 1));
    sim_.on_deliver(node_, [this](const PacketEnvelope& p) { on_packet(p); });
}

const NodeInfo& Attacker::require_node(const NodeId& name) const {
    const NodeInfo* info = sim_.topology().find(name);
    if (!info) throw ValidationError("unknown node '" + name + "'", {name});
    return *info;
}

std::uint16_t Attacker::next_port() {
    std::uint16_t p = port_cursor_;
    port_cursor_ = port_cursor_ >= kEphemeralHi ? kEphemeralLo : static_cast<std::uint16_t>(port_cursor_ + 1);
    return p;
}

std::mt19937_64 Attacker::step_rng(std::uint32_t step, std::uint64_t salt) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32), step,
                      static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(seq);
}

PacketEnvelope Attacker::packet_to(const NodeInfo& target, std::uint16_t src_port, std::uint16_t dst_port,
                                   Protocol proto, TcpSegment seg, EventKind kind, std::string payload) const {
    PacketEnvelope p;
    p.src = NetEndpoint{ip_, src_port};
    p.dst = NetEndpoint{target.ip, dst_port};
    p.protocol = proto;
    p.segment = seg;
    p.kind = kind;
    p.payload = std::move(payload);
    return p;
}

void Attacker::emit(PacketEnvelope packet, std::uint32_t step, const NodeId* deliver_to) {
    packet.tag = step;
    if (deliver_to) packet.deliver_to = *deliver_to;
    emissions_.push_back(Emission{sim_.now(), step, packet.protocol, packet.segment, packet.src, packet.dst,
                                  packet.payload.size()});
    sim_.send(std::move(packet));
}

std::size_t Attacker::run_footprint_scan(const NodeId& target, std::vector<std::uint16_t> ports, ScanStyle style,
                                         TimeMs start, std::uint32_t step) {
    const NodeInfo& dst = require_node(target);
    auto rng = step_rng(step, 1);
    seeded_shuffle(ports, rng);
    for (std::size_t i = 0; i < ports.size(); ++i) {
        std::uint16_t src_port = next_port();
        auto packet = packet_to(dst, src_port, ports[i], Protocol::Tcp,
                                style == ScanStyle::Syn ? TcpSegment::Syn : TcpSegment::Connect,
                                style == ScanStyle::Syn ? EventKind::TcpSyn : EventKind::TcpConnect, {});
        sim_.schedule(start + static_cast<TimeMs>(i) * kScanGapMs,
                      [this, packet = std::move(packet), step]() mutable { emit(std::move(packet), step, nullptr); });
    }
    return ports.size();
}

std::size_t Attacker::run_probe(const NodeId& target, std::uint16_t port, TimeMs start, std::uint32_t step) {
    const NodeInfo& dst = require_node(target);
    std::string request = "GET / HTTP/1.1\r\nHost: " + dst.ip.to_string() +
                          "\r\nUser-Agent: Mozilla/5.0\r\nAccept: */*\r\n\r\n";
    auto packet = packet_to(dst, next_port(), port, Protocol::Tcp, TcpSegment::Connect,
                            EventKind::HttpRequestComplete, std::move(request));
    sim_.schedule(start, [this, packet = std::move(packet), step]() mutable { emit(std::move(packet), step, nullptr); });
    return 1;
}

std::size_t Attacker::run_udp_flood(const NodeId& target, const UdpFlood& params, TimeMs start, std::uint32_t step) {
    const NodeInfo& dst = require_node(target);
    auto rng = step_rng(step, 2);
    std::uint16_t src_port = next_port();
    auto target_name = std::make_shared<NodeId>(dst.name);
    for (int i = 0; i < params.count; ++i) {
        auto packet = packet_to(dst, src_port, params.dest_port, Protocol::Udp, TcpSegment::None,
                                params.broadcast ? EventKind::UdpBroadcast : EventKind::UdpDatagram,
                                random_token(rng, 32));
        if (params.broadcast) packet.dst.ip = Ipv4::broadcast();
        sim_.schedule(start + static_cast<TimeMs>(i) * params.interval_ms,
                      [this, packet = std::move(packet), step, target_name, broadcast = params.broadcast]() mutable {
                          emit(std::move(packet), step, broadcast ? target_name.get() : nullptr);
                      });
    }
    return static_cast<std::size_t>(params.count);
}

std::size_t Attacker::run_slowloris(const NodeId& target, const Slowloris& params, TimeMs start,
                                    std::uint32_t step) {
    AttackStep probe{0, params, node_, target};
    probe.validate();
    const NodeInfo& dst = require_node(target);

    std::size_t id = campaigns_.size();
    Campaign c;
    c.target = target;
    c.params = params;
    c.step = step;
    c.dst = NetEndpoint{dst.ip, params.dest_port ? params.dest_port : default_slowloris_port(dst)};
    c.rng = step_rng(step, 3);
    campaigns_.push_back(std::move(c));

    for (int i = 0; i < params.connections; ++i) {
        std::size_t slot_index = slots_.size();
        TimeMs open_at = start + static_cast<TimeMs>(i) * params.ramp_ms;
        slots_.push_back(Slot{id, 0, open_at, false});
        campaigns_[id].slots.push_back(slot_index);

        sim_.schedule(open_at, [this, slot_index] { open_slot(slot_index, false); });
        for (TimeMs k = 1; k * params.header_interval_ms < params.duration_ms; ++k) {
            sim_.schedule(open_at + k * params.header_interval_ms, [this, slot_index] {
                auto& slot = slots_[slot_index];
                auto& camp = campaigns_[slot.campaign];
                const NodeInfo& to = require_node(camp.target);
                std::string line = "X-" + random_token(camp.rng, 4) + ": " + random_token(camp.rng, 8) + "\r\n";
                emit(packet_to(to, slot.port, camp.dst.port, Protocol::Tcp, TcpSegment::Data,
                               EventKind::HttpRequestPartial, std::move(line)),
                     camp.step, nullptr);
                ++camp.stats.headers;
            });
        }
        sim_.schedule(open_at + params.duration_ms, [this, slot_index] {
            auto& slot = slots_[slot_index];
            auto& camp = campaigns_[slot.campaign];
            slot.finished = true;
            slot_by_port_.erase(slot.port);
            emit(packet_to(require_node(camp.target), slot.port, camp.dst.port, Protocol::Tcp, TcpSegment::Fin,
                           EventKind::TcpConnect, {}),
                 camp.step, nullptr);
            ++camp.stats.closes;
        });
    }
    return id;
}

void Attacker::open_slot(std::size_t slot_index, bool reconnect) {
    auto& slot = slots_[slot_index];
    auto& camp = campaigns_[slot.campaign];
    const NodeInfo& to = require_node(camp.target);
    if (slot.port) slot_by_port_.erase(slot.port);
    slot.port = next_port();
    slot_by_port_[slot.port] = slot_index;

    emit(packet_to(to, slot.port, camp.dst.port, Protocol::Tcp, TcpSegment::Syn, EventKind::TcpSyn, {}), camp.step,
         nullptr);
    std::string first = "GET /?" + random_token(camp.rng, 6) + " HTTP/1.1\r\n";
    emit(packet_to(to, slot.port, camp.dst.port, Protocol::Tcp, TcpSegment::Data, EventKind::HttpRequestPartial,
                   std::move(first)),
         camp.step, nullptr);
    ++camp.stats.headers;
    if (reconnect) ++camp.stats.reconnects;
    else ++camp.stats.opens;
}

void Attacker::on_packet(const PacketEnvelope& packet) {
    if (packet.protocol != Protocol::Tcp || packet.payload.empty()) return;
    ++banners_received_;
    auto it = slot_by_port_.find(packet.dst.port);
    if (it == slot_by_port_.end()) return;
    std::size_t slot_index = it->second;
    auto& slot = slots_[slot_index];
    const auto& camp = campaigns_[slot.campaign];
    if (slot.finished || sim_.now() >= slot.opened_at + camp.params.duration_ms) return;
    open_slot(slot_index, true);
}

void Attacker::run_step(const AttackStep& step, TimeMs day_offset, std::uint32_t step_index) {
    step.validate();
    TimeMs start = day_offset + step.at_ms;
    struct Visitor {
        Attacker& self;
        const AttackStep& step;
        TimeMs start;
        std::uint32_t index;
        void operator()(const ConnectScan& s) const {
            self.run_footprint_scan(step.target, s.ports, ScanStyle::Connect, start, index);
        }
        void operator()(const SynScan& s) const {
            self.run_footprint_scan(step.target, s.ports, ScanStyle::Syn, start, index);
        }
        void operator()(const UdpFlood& f) const { self.run_udp_flood(step.target, f, start, index); }
        void operator()(const Slowloris& s) const { self.run_slowloris(step.target, s, start, index); }
        void operator()(const SingleProbe& p) const { self.run_probe(step.target, p.dest_port, start, index); }
    };
    std::visit(Visitor{*this, step, start, step_index}, step.kind);
}

}  // namespace honeynet
