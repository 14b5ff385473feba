#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "honeynet/ipv4.hpp"
#include "honeynet/topology.hpp"

namespace honeynet {

struct Hop {
    int index = 0;  // 1-based
    NodeId node;
    Ipv4 ip;
    std::array<TimeMs, 3> rtt_ms{};

    bool operator==(const Hop&) const = default;
};

struct TraceResult {
    NodeId origin;
    NetEndpoint target;
    std::vector<Hop> hops;
    bool reached = false;

    bool operator==(const TraceResult&) const = default;
};

struct TraceOptions {
    int max_hops = 32;
    // Adds a seeded offset in {-1, 0, +1} ms to every sample. Off by default,
    // in which case the three samples of a hop are identical.
    std::optional<std::uint64_t> jitter_seed;
};

// TTL-stepped probing on a private simulation of `topology` (no filters):
// a probe with TTL k expires at hop k and the expiry time gives the RTT,
// twice the one-way latency to that hop. Stops when the target answers,
// when a probe cannot be routed, or at max_hops. A target address outside
// the topology yields reached=false and no hops.
TraceResult traceroute(const Topology& topology, std::string_view origin, Ipv4 target,
                       const TraceOptions& options = {});

// traceroute-style text: a header line, then "<n>  <node> (<ip>)  <a> ms  <b> ms  <c> ms".
std::string render_trace(const TraceResult& trace);

struct FingerprintResult {
    std::string os_name;
    std::string os_version;
    std::set<std::uint16_t> open_ports;
    bool reachable = false;

    bool operator==(const FingerprintResult&) const = default;
};

// Reads the node's metadata; reachable when a path from `origin` exists.
// Throws NotFoundError for an address or name that is not a node.
FingerprintResult fingerprint(const Topology& topology, std::string_view origin, Ipv4 target);
FingerprintResult fingerprint(const Topology& topology, std::string_view origin, std::string_view node);

struct DomainRecord {
    Ipv4 ip;
    std::string domain;
    std::string note;

    bool operator==(const DomainRecord&) const = default;
};

// Local stand-in for WHOIS/DNS. File: one "ip<TAB>domain<TAB>note" record
// per line; blank lines and lines starting with '#' are ignored.
class DomainRegistry {
public:
    DomainRegistry() = default;
    // Throws ParseError for malformed lines, ValidationError for duplicate ips.
    static DomainRegistry parse(std::string_view text);
    static DomainRegistry load(const std::string& path);
    std::string to_text() const;

    void add(DomainRecord record);
    std::optional<DomainRecord> lookup(Ipv4 ip) const;
    // Throws ValidationError for a malformed address.
    std::optional<DomainRecord> lookup(std::string_view ip) const;

    const std::vector<DomainRecord>& records() const { return records_; }

private:
    std::vector<DomainRecord> records_;
    std::map<Ipv4, std::size_t> index_;
};

struct MapNode {
    NodeId name;
    Ipv4 ip;
    bool origin = false;
    std::optional<FingerprintResult> fingerprint;

    bool operator==(const MapNode&) const = default;
};

struct TopologyMap {
    std::vector<MapNode> nodes;                     // first-appearance order
    std::vector<std::pair<NodeId, NodeId>> edges;   // origin side first, first-appearance order

    bool operator==(const TopologyMap&) const = default;
};

// Union of the traces' hop paths. Throws ValidationError if the traces do
// not share one origin.
TopologyMap build_map(std::span<const TraceResult> traces, const Topology& topology,
                      const std::map<NodeId, FingerprintResult>& fingerprints);

}  // namespace honeynet
