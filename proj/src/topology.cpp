#include "honeynet/topology.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <sstream>

#include "honeynet/error.hpp"
#include "text_util.hpp"

namespace honeynet {
namespace {

constexpr std::array<std::pair<Role, std::string_view>, 8> kRoleNames{{
    {Role::Attacker, "attacker"},
    {Role::Cloud, "cloud"},
    {Role::Decoy, "decoy"},
    {Role::Router, "router"},
    {Role::Sensor, "sensor"},
    {Role::Firewall, "firewall"},
    {Role::Production, "production"},
    {Role::Switch, "switch"},
}};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

std::string quote_if_needed(const std::string& value) {
    if (value.empty() || value.find_first_of(" \t#") != std::string::npos) return '"' + value + '"';
    return value;
}

}  // namespace

std::string_view to_string(Role r) {
    for (const auto& [role, name] : kRoleNames) {
        if (role == r) return name;
    }
    return "?";
}

std::optional<Role> parse_role(std::string_view text) {
    for (const auto& [role, name] : kRoleNames) {
        if (name == text) return role;
    }
    return std::nullopt;
}

Topology Topology::build(std::vector<NodeInfo> nodes, std::vector<Link> links) {
    Topology topo;
    std::vector<std::string> offenders;
    std::vector<std::string> problems;

    if (nodes.size() < 2) problems.push_back("topology needs at least 2 nodes");

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.name.empty()) {
            problems.push_back("node with empty name");
            offenders.push_back("<unnamed>");
            continue;
        }
        if (!topo.by_name_.emplace(n.name, i).second) {
            problems.push_back("duplicate node '" + n.name + "'");
            offenders.push_back(n.name);
        }
        if (n.os_name.empty() || n.os_version.empty()) {
            problems.push_back("node '" + n.name + "' lacks os/version metadata");
            offenders.push_back(n.name);
        }
        if (n.ip.value() == 0 || n.ip == Ipv4::broadcast()) {
            problems.push_back("node '" + n.name + "' lacks a unicast address");
            offenders.push_back(n.name);
        } else if (!topo.by_ip_.emplace(n.ip.value(), i).second) {
            problems.push_back("address " + n.ip.to_string() + " of '" + n.name + "' already in use");
            offenders.push_back(n.name);
        }
        for (auto port : n.open_ports) {
            if (port == 0) {
                problems.push_back("node '" + n.name + "' lists port 0 as open");
                offenders.push_back(n.name);
            }
        }
    }

    topo.adjacency_.resize(nodes.size());
    for (const auto& l : links) {
        auto ia = topo.by_name_.find(l.a);
        auto ib = topo.by_name_.find(l.b);
        bool ok = true;
        for (const auto& [end, it] : {std::pair{&l.a, ia}, std::pair{&l.b, ib}}) {
            if (it == topo.by_name_.end()) {
                problems.push_back("link references undeclared node '" + *end + "'");
                offenders.push_back(*end);
                ok = false;
            }
        }
        if (l.a == l.b) {
            problems.push_back("self link on '" + l.a + "'");
            offenders.push_back(l.a);
            ok = false;
        }
        if (l.latency_ms < 0) {
            problems.push_back("negative latency on link " + l.a + "-" + l.b);
            offenders.push_back(l.a + "-" + l.b);
            ok = false;
        }
        if (!ok) continue;
        topo.adjacency_[ia->second].emplace_back(ib->second, l.latency_ms);
        topo.adjacency_[ib->second].emplace_back(ia->second, l.latency_ms);
    }

    if (problems.empty()) {
        std::vector<bool> seen(nodes.size(), false);
        std::deque<std::size_t> queue{0};
        seen[0] = true;
        while (!queue.empty()) {
            auto cur = queue.front();
            queue.pop_front();
            for (auto [next, _] : topo.adjacency_[cur]) {
                if (!seen[next]) {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!seen[i]) {
                problems.push_back("node '" + nodes[i].name + "' is disconnected");
                offenders.push_back(nodes[i].name);
            }
        }
    }

    if (!problems.empty()) {
        std::sort(offenders.begin(), offenders.end());
        offenders.erase(std::unique(offenders.begin(), offenders.end()), offenders.end());
        throw ValidationError("invalid topology: " + join(problems), offenders);
    }

    // Neighbour order follows declaration order so route ties are stable.
    for (auto& adj : topo.adjacency_) {
        std::stable_sort(adj.begin(), adj.end(), [](auto& x, auto& y) { return x.first < y.first; });
    }
    topo.nodes_ = std::move(nodes);
    topo.links_ = std::move(links);
    topo.compute_routes();
    return topo;
}

void Topology::compute_routes() {
    parent_.assign(nodes_.size(), std::vector<std::size_t>(nodes_.size(), kNone));
    for (std::size_t root = 0; root < nodes_.size(); ++root) {
        auto& parent = parent_[root];
        parent[root] = root;
        std::deque<std::size_t> queue{root};
        while (!queue.empty()) {
            auto cur = queue.front();
            queue.pop_front();
            for (auto [next, _] : adjacency_[cur]) {
                if (parent[next] == kNone) {
                    parent[next] = cur;
                    queue.push_back(next);
                }
            }
        }
    }
}

void Topology::require_reference_roles() const {
    std::vector<std::string> offenders;
    for (const auto& [role, name] : kRoleNames) {
        if (role == Role::Switch) continue;
        auto count = std::count_if(nodes_.begin(), nodes_.end(), [&](auto& n) { return n.role == role; });
        if (count != 1) offenders.emplace_back(name);
    }
    if (!offenders.empty()) {
        throw ValidationError("reference topology needs exactly one node per role; offending roles: " +
                                  join(offenders),
                              offenders);
    }
}

const NodeInfo* Topology::find(std::string_view name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : &nodes_[it->second];
}

const NodeInfo* Topology::find_by_ip(Ipv4 ip) const {
    auto it = by_ip_.find(ip.value());
    return it == by_ip_.end() ? nullptr : &nodes_[it->second];
}

const NodeInfo* Topology::find_by_role(Role role) const {
    for (const auto& n : nodes_) {
        if (n.role == role) return &n;
    }
    return nullptr;
}

std::optional<std::size_t> Topology::index_of(std::string_view name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::size_t> Topology::shortest_path_indices(std::size_t from, std::size_t to) const {
    if (from >= nodes_.size() || to >= nodes_.size()) return {};
    // Walk the BFS tree rooted at `from` back from `to`.
    const auto& parent = parent_[from];
    if (parent[to] == kNone) return {};
    std::vector<std::size_t> path{to};
    while (path.back() != from) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<NodeId> Topology::shortest_path(std::string_view from, std::string_view to) const {
    auto a = index_of(from);
    auto b = index_of(to);
    if (!a || !b) return {};
    std::vector<NodeId> out;
    for (auto i : shortest_path_indices(*a, *b)) out.push_back(nodes_[i].name);
    return out;
}

std::optional<std::int64_t> Topology::link_latency(std::size_t a, std::size_t b) const {
    if (a >= adjacency_.size()) return std::nullopt;
    for (auto [n, lat] : adjacency_[a]) {
        if (n == b) return lat;
    }
    return std::nullopt;
}

Topology Topology::parse(std::string_view text) {
    std::vector<NodeInfo> nodes;
    std::vector<Link> links;
    std::size_t line_no = 0;
    for (auto raw : detail::split(text, '\n')) {
        ++line_no;
        auto line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        auto tokens = detail::tokenize(line);
        const std::string where = "line " + std::to_string(line_no);

        if (tokens[0] == "node") {
            if (tokens.size() < 2) throw ParseError("node", where + ": missing node name");
            NodeInfo node;
            node.name = tokens[1];
            bool have_role = false;
            for (std::size_t i = 2; i < tokens.size(); ++i) {
                auto eq = tokens[i].find('=');
                if (eq == std::string::npos) throw ParseError(tokens[i], where + ": expected key=value");
                std::string key = tokens[i].substr(0, eq);
                std::string value = tokens[i].substr(eq + 1);
                if (key == "role") {
                    auto role = parse_role(value);
                    if (!role) throw ParseError("role", where + ": unknown role '" + value + "'");
                    node.role = *role;
                    have_role = true;
                } else if (key == "ip") {
                    auto ip = Ipv4::try_parse(value);
                    if (!ip) throw ParseError("ip", where + ": malformed address '" + value + "'");
                    node.ip = *ip;
                } else if (key == "os") {
                    node.os_name = value;
                } else if (key == "version") {
                    node.os_version = value;
                } else if (key == "domain") {
                    node.domain = value;
                } else if (key == "ports") {
                    if (value.empty()) continue;
                    for (auto p : detail::split(value, ',')) {
                        auto port = detail::parse_int<std::uint16_t>(p);
                        if (!port) throw ParseError("ports", where + ": bad port '" + std::string(p) + "'");
                        node.open_ports.insert(*port);
                    }
                } else {
                    throw ParseError(key, where + ": unknown node attribute");
                }
            }
            if (!have_role) {
                throw ValidationError("node '" + node.name + "' has no role (" + where + ")", {node.name});
            }
            nodes.push_back(std::move(node));
        } else if (tokens[0] == "link") {
            if (tokens.size() < 3 || tokens.size() > 4) {
                throw ParseError("link", where + ": expected 'link <a> <b> [latency_ms]'");
            }
            Link link{tokens[1], tokens[2], kDefaultLinkLatencyMs};
            if (tokens.size() == 4) {
                std::string_view lat = tokens[3];
                if (lat.rfind("latency=", 0) == 0) lat.remove_prefix(8);
                auto value = detail::parse_int<std::int64_t>(lat);
                if (!value) throw ParseError("latency", where + ": bad latency '" + tokens[3] + "'");
                link.latency_ms = *value;
            }
            links.push_back(std::move(link));
        } else {
            throw ParseError(tokens[0], where + ": expected 'node' or 'link'");
        }
    }
    return build(std::move(nodes), std::move(links));
}

std::string Topology::to_text() const {
    std::ostringstream out;
    for (const auto& n : nodes_) {
        out << "node " << n.name << " role=" << to_string(n.role) << " ip=" << n.ip.to_string()
            << " os=" << quote_if_needed(n.os_name) << " version=" << quote_if_needed(n.os_version);
        if (!n.open_ports.empty()) {
            out << " ports=";
            bool first = true;
            for (auto p : n.open_ports) {
                out << (first ? "" : ",") << p;
                first = false;
            }
        }
        if (!n.domain.empty()) out << " domain=" << quote_if_needed(n.domain);
        out << '\n';
    }
    for (const auto& l : links_) out << "link " << l.a << ' ' << l.b << ' ' << l.latency_ms << '\n';
    return out.str();
}

}  // namespace honeynet
