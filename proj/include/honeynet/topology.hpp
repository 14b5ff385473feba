#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "honeynet/ipv4.hpp"
#include "honeynet/packet.hpp"

namespace honeynet {

// Switch nodes forward without logic; every other role is a device of the
// reference honeynet.
enum class Role { Attacker, Cloud, Decoy, Router, Sensor, Firewall, Production, Switch };

std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view text);

struct NodeInfo {
    NodeId name;
    Role role = Role::Switch;
    Ipv4 ip;
    std::string os_name;
    std::string os_version;
    std::set<std::uint16_t> open_ports;
    std::string domain;

    bool operator==(const NodeInfo&) const = default;
};

struct Link {
    NodeId a;
    NodeId b;
    std::int64_t latency_ms = 5;

    bool operator==(const Link&) const = default;
};

inline constexpr std::int64_t kDefaultLinkLatencyMs = 5;

// Validated, connected network graph with static hop-count shortest paths.
class Topology {
public:
    // Validates and builds. Throws ValidationError listing every offender:
    // undeclared link endpoints, duplicate names or addresses, self links,
    // negative latencies, missing metadata, disconnected nodes.
    static Topology build(std::vector<NodeInfo> nodes, std::vector<Link> links);

    // Text form, one declaration per line ('#' starts a comment):
    //   node <name> role=<role> ip=<a.b.c.d> os="<name>" version="<v>" [ports=22,80] [domain=<d>]
    //   link <a> <b> [<latency_ms>]
    static Topology parse(std::string_view text);
    std::string to_text() const;

    // Throws ValidationError unless every device role other than Switch is
    // held by exactly one node.
    void require_reference_roles() const;

    const std::vector<NodeInfo>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }

    const NodeInfo* find(std::string_view name) const;
    const NodeInfo* find_by_ip(Ipv4 ip) const;
    const NodeInfo* find_by_role(Role role) const;
    std::optional<std::size_t> index_of(std::string_view name) const;

    // Hop-count shortest path, endpoints included. Ties resolve toward the
    // neighbour declared first. Empty when either node is unknown.
    std::vector<NodeId> shortest_path(std::string_view from, std::string_view to) const;
    std::vector<std::size_t> shortest_path_indices(std::size_t from, std::size_t to) const;
    // Latency of the direct link between two nodes, if any.
    std::optional<std::int64_t> link_latency(std::size_t a, std::size_t b) const;
    const std::vector<std::pair<std::size_t, std::int64_t>>& neighbours(std::size_t node) const {
        return adjacency_[node];
    }

private:
    void compute_routes();

    std::vector<NodeInfo> nodes_;
    std::vector<Link> links_;
    std::map<std::string, std::size_t, std::less<>> by_name_;
    std::map<std::uint32_t, std::size_t> by_ip_;
    std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> adjacency_;
    // parent_[root][n] = predecessor of n on the BFS tree rooted at root.
    std::vector<std::vector<std::size_t>> parent_;
};

}  // namespace honeynet
