#include "honeynet/traceback.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "honeynet/error.hpp"
#include "honeynet/simulation.hpp"
#include "text_util.hpp"

namespace honeynet {
namespace {

struct ProbeOutcome {
    std::optional<std::size_t> node;  // where the probe expired or was delivered
    TimeMs rtt_ms = 0;
    bool delivered = false;
};

// One probe on a fresh network so probes cannot interfere.
ProbeOutcome probe(const Topology& topology, const NodeInfo& origin, Ipv4 target, int ttl) {
    Simulation sim(topology);
    sim.set_transcript_enabled(false);
    ProbeOutcome out;
    PacketEnvelope p;
    p.src = NetEndpoint{origin.ip, 0};
    p.dst = NetEndpoint{target, 0};
    p.protocol = Protocol::Icmp;
    p.kind = EventKind::IcmpEcho;
    p.ttl = ttl;

    const NodeInfo* target_node = topology.find_by_ip(target);
    if (target_node) {
        sim.on_deliver(target_node->name, [&](const PacketEnvelope& pkt) {
            out.node = topology.index_of(target_node->name);
            out.delivered = true;
            out.rtt_ms = 2 * (sim.now() - pkt.sent_at_ms);
        });
    }
    sim.on_drop([&](const PacketEnvelope& pkt, const DropRecord& rec) {
        if (rec.reason != DropReason::TtlExceeded || out.node) return;
        out.node = topology.index_of(rec.node);
        out.rtt_ms = 2 * (rec.at_ms - pkt.sent_at_ms);
    });
    sim.send(std::move(p));
    sim.run_until_idle();
    return out;
}

}  // namespace

TraceResult traceroute(const Topology& topology, std::string_view origin, Ipv4 target, const TraceOptions& options) {
    const NodeInfo* from = topology.find(origin);
    if (!from) throw NotFoundError("unknown origin node '" + std::string(origin) + "'");

    TraceResult result;
    result.origin = from->name;
    result.target = NetEndpoint{target, 0};
    if (!topology.find_by_ip(target)) return result;

    std::optional<std::mt19937_64> rng;
    if (options.jitter_seed) rng.emplace(*options.jitter_seed);

    for (int ttl = 1; ttl <= options.max_hops; ++ttl) {
        auto outcome = probe(topology, *from, target, ttl);
        if (!outcome.node) break;
        const NodeInfo& node = topology.nodes()[*outcome.node];
        Hop hop;
        hop.index = ttl;
        hop.node = node.name;
        hop.ip = node.ip;
        for (auto& sample : hop.rtt_ms) {
            sample = outcome.rtt_ms;
            if (rng) sample = std::max<TimeMs>(0, sample + static_cast<TimeMs>((*rng)() % 3) - 1);
        }
        result.hops.push_back(std::move(hop));
        if (outcome.delivered) {
            result.reached = true;
            break;
        }
    }
    return result;
}

std::string render_trace(const TraceResult& trace) {
    std::ostringstream out;
    out << "traceroute from " << trace.origin << " to " << trace.target.ip.to_string() << "\n";
    for (const auto& hop : trace.hops) {
        out << (hop.index < 10 ? " " : "") << hop.index << "  " << hop.node << " (" << hop.ip.to_string() << ")";
        for (auto rtt : hop.rtt_ms) out << "  " << rtt << " ms";
        out << "\n";
    }
    if (!trace.reached) out << "target not reached\n";
    return out.str();
}

FingerprintResult fingerprint(const Topology& topology, std::string_view origin, std::string_view node) {
    const NodeInfo* info = topology.find(node);
    if (!info) throw NotFoundError("unknown node '" + std::string(node) + "'");
    if (!topology.find(origin)) throw NotFoundError("unknown origin node '" + std::string(origin) + "'");
    FingerprintResult r;
    r.os_name = info->os_name;
    r.os_version = info->os_version;
    r.open_ports = info->open_ports;
    r.open_ports.erase(0);
    r.reachable = !topology.shortest_path(origin, node).empty();
    return r;
}

FingerprintResult fingerprint(const Topology& topology, std::string_view origin, Ipv4 target) {
    const NodeInfo* info = topology.find_by_ip(target);
    if (!info) throw NotFoundError("no node has address " + target.to_string());
    return fingerprint(topology, origin, info->name);
}

DomainRegistry DomainRegistry::parse(std::string_view text) {
    DomainRegistry reg;
    std::vector<std::string> duplicates;
    for (auto raw : detail::split(text, '\n')) {
        auto line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty() || detail::trim(line).front() == '#') continue;
        auto fields = detail::split(line, '\t');
        if (fields.size() < 2) throw ParseError("domain", "expected ip<TAB>domain[<TAB>note]");
        if (fields.size() > 3) throw ParseError("note", "trailing data");
        auto ip = Ipv4::try_parse(fields[0]);
        if (!ip) throw ParseError("ip", "not a dotted quad: '" + std::string(fields[0]) + "'");
        if (fields[1].empty()) throw ParseError("domain", "empty");
        if (reg.index_.count(*ip)) {
            duplicates.push_back(ip->to_string());
            continue;
        }
        reg.add(DomainRecord{*ip, std::string(fields[1]), fields.size() == 3 ? std::string(fields[2]) : ""});
    }
    if (!duplicates.empty()) throw ValidationError("duplicate registry addresses", duplicates);
    return reg;
}

DomainRegistry DomainRegistry::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read registry " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string DomainRegistry::to_text() const {
    std::string out;
    for (const auto& r : records_) out += r.ip.to_string() + "\t" + r.domain + "\t" + r.note + "\n";
    return out;
}

void DomainRegistry::add(DomainRecord record) {
    if (index_.count(record.ip)) throw ValidationError("duplicate registry address", {record.ip.to_string()});
    if (record.domain.empty() || record.domain.find_first_of("\t\n") != std::string::npos ||
        record.note.find_first_of("\t\n") != std::string::npos) {
        throw ValidationError("registry fields must be non-empty single-line text", {record.ip.to_string()});
    }
    index_.emplace(record.ip, records_.size());
    records_.push_back(std::move(record));
}

std::optional<DomainRecord> DomainRegistry::lookup(Ipv4 ip) const {
    auto it = index_.find(ip);
    if (it == index_.end()) return std::nullopt;
    return records_[it->second];
}

std::optional<DomainRecord> DomainRegistry::lookup(std::string_view ip) const { return lookup(Ipv4::parse(ip)); }

TopologyMap build_map(std::span<const TraceResult> traces, const Topology& topology,
                      const std::map<NodeId, FingerprintResult>& fingerprints) {
    TopologyMap map;
    if (traces.empty()) return map;
    const NodeId& origin = traces.front().origin;
    std::vector<std::string> strays;
    for (const auto& t : traces) {
        if (t.origin != origin) strays.push_back(t.origin);
    }
    if (!strays.empty()) throw ValidationError("traces do not share one origin", strays);

    std::set<NodeId> seen_nodes;
    std::set<std::pair<NodeId, NodeId>> seen_edges;
    auto add_node = [&](const NodeId& name, Ipv4 ip, bool is_origin) {
        if (!seen_nodes.insert(name).second) return;
        MapNode n{name, ip, is_origin, std::nullopt};
        if (auto it = fingerprints.find(name); it != fingerprints.end()) n.fingerprint = it->second;
        map.nodes.push_back(std::move(n));
    };

    const NodeInfo* origin_info = topology.find(origin);
    add_node(origin, origin_info ? origin_info->ip : Ipv4{}, true);
    for (const auto& t : traces) {
        NodeId prev = origin;
        for (const auto& hop : t.hops) {
            add_node(hop.node, hop.ip, false);
            if (hop.node != prev) {
                auto key = std::minmax(prev, hop.node);
                if (seen_edges.emplace(key.first, key.second).second) map.edges.emplace_back(prev, hop.node);
            }
            prev = hop.node;
        }
    }
    return map;
}

}  // namespace honeynet
