#include <algorithm>
#include <map>
#include <set>
#include <random>
#include <thread>

#include "doctest.h"
#include "honeynet/reference.hpp"
#include "honeynet/simulation.hpp"

using namespace honeynet;

namespace {

PacketEnvelope between(const Topology& topo, const std::string& from, const std::string& to) {
    PacketEnvelope p;
    p.src = NetEndpoint{topo.find(from)->ip, 40000};
    p.dst = NetEndpoint{topo.find(to)->ip, 80};
    p.protocol = Protocol::Tcp;
    p.segment = TcpSegment::Connect;
    return p;
}

NodeInfo switch_node(std::size_t i) {
    NodeInfo n;
    n.name = "n" + std::to_string(i);
    n.role = Role::Switch;
    n.ip = Ipv4(10, 1, static_cast<std::uint8_t>(i / 200), static_cast<std::uint8_t>(i % 200 + 1));
    n.os_name = "os";
    n.os_version = "1";
    return n;
}

// Path latency by walking the unique tree path with parent pointers.
std::int64_t tree_latency(const std::vector<std::size_t>& parent, const std::vector<std::int64_t>& up_latency,
                          std::size_t a, std::size_t b) {
    auto ancestors = [&](std::size_t x) {
        std::vector<std::size_t> chain{x};
        while (chain.back() != 0) chain.push_back(parent[chain.back()]);
        return chain;
    };
    auto ca = ancestors(a), cb = ancestors(b);
    std::set<std::size_t> in_a(ca.begin(), ca.end());
    std::size_t meet = 0;
    for (auto x : cb) {
        if (in_a.count(x)) {
            meet = x;
            break;
        }
    }
    std::int64_t total = 0;
    for (auto x = a; x != meet; x = parent[x]) total += up_latency[x];
    for (auto x = b; x != meet; x = parent[x]) total += up_latency[x];
    return total;
}

}  // namespace

TEST_CASE("delivery time is the sum of link latencies on random trees") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 3 + rng() % 30;
        std::vector<NodeInfo> nodes;
        std::vector<Link> links;
        std::vector<std::size_t> parent(n, 0);
        std::vector<std::int64_t> up(n, 0);
        for (std::size_t i = 0; i < n; ++i) nodes.push_back(switch_node(i));
        for (std::size_t i = 1; i < n; ++i) {
            parent[i] = rng() % i;
            up[i] = static_cast<std::int64_t>(1 + rng() % 25);
            links.push_back({nodes[parent[i]].name, nodes[i].name, up[i]});
        }
        auto topo = Topology::build(nodes, links);
        Simulation sim(topo);
        std::map<PacketId, std::pair<std::size_t, std::size_t>> sent;
        std::map<PacketId, TimeMs> arrived;
        for (std::size_t i = 0; i < n; ++i) {
            sim.on_deliver(nodes[i].name, [&](const PacketEnvelope& p) { arrived[p.id] = sim.now(); });
        }
        for (int k = 0; k < 20; ++k) {
            std::size_t a = rng() % n, b = rng() % n;
            auto p = between(topo, nodes[a].name, nodes[b].name);
            p.ttl = 64;
            sent[sim.send(p).id] = {a, b};
        }
        sim.run_until_idle();
        REQUIRE(arrived.size() == sent.size());
        for (const auto& [id, ends] : sent) {
            REQUIRE(arrived[id] == tree_latency(parent, up, ends.first, ends.second));
        }
    }
}

TEST_CASE("reference paths deliver with hop-by-hop transcript") {
    auto topo = reference_topology();
    Simulation sim(topo);
    sim.set_transcript_enabled(true);
    std::vector<NodeId> route;
    sim.on_deliver("production", [&](const PacketEnvelope& p) {
        route = p.route;
        CHECK(sim.now() == 20);
        CHECK(p.ttl == kDefaultTtl - 4);
    });
    sim.send(between(topo, "attacker", "production"));
    CHECK(sim.run_until_idle() == 1);
    CHECK(route == std::vector<NodeId>{"attacker", "cloud", "router", "firewall", "production"});
    const auto& t = sim.transcript();
    REQUIRE(t.size() == 4);
    CHECK(t[0].node == "cloud");
    CHECK(t[0].at_ms == 5);
    CHECK(t[3].outcome == TranscriptEntry::Outcome::Delivered);
}

TEST_CASE("ttl expires at the hop where it reaches zero") {
    auto topo = reference_topology();
    for (int ttl = 1; ttl <= 3; ++ttl) {
        Simulation sim(topo);
        std::optional<DropRecord> dropped;
        sim.on_drop([&](const PacketEnvelope&, const DropRecord& r) { dropped = r; });
        auto p = between(topo, "attacker", "production");
        p.ttl = ttl;
        sim.send(p);
        sim.run_until_idle();
        REQUIRE(dropped);
        CHECK(dropped->reason == DropReason::TtlExceeded);
        CHECK(dropped->at_ms == 5 * ttl);
        CHECK(dropped->node == topo.shortest_path("attacker", "production")[static_cast<std::size_t>(ttl)]);
    }
    Simulation sim(topo);
    auto p = between(topo, "attacker", "production");
    p.ttl = 4;
    bool delivered = false;
    sim.on_deliver("production", [&](const PacketEnvelope&) { delivered = true; });
    sim.send(p);
    sim.run_until_idle();
    CHECK(delivered);
}

TEST_CASE("filters run on transit and final arrivals") {
    auto topo = reference_topology();
    Simulation sim(topo);
    std::vector<NodeId> seen;
    for (const auto& n : topo.nodes()) {
        sim.set_filter(n.name, [&](const PacketEnvelope&, const NodeInfo& at) -> std::optional<DropReason> {
            seen.push_back(at.name);
            if (at.name == "firewall") return DropReason::PolicyDeny;
            return std::nullopt;
        });
    }
    bool delivered = false;
    sim.on_deliver("production", [&](const PacketEnvelope&) { delivered = true; });
    sim.send(between(topo, "attacker", "production"));
    sim.send(between(topo, "attacker", "sensor"));
    sim.run_until_idle();
    CHECK_FALSE(delivered);
    REQUIRE(sim.drops().size() == 1);
    CHECK(sim.drops()[0].reason == DropReason::PolicyDeny);
    CHECK(sim.drops()[0].node == "firewall");
    CHECK(std::count(seen.begin(), seen.end(), "sensor") == 1);
    CHECK(std::count(seen.begin(), seen.end(), "router") == 2);
}

TEST_CASE("unknown destination is NoRoute at send time") {
    auto topo = reference_topology();
    Simulation sim(topo);
    auto p = between(topo, "attacker", "sensor");
    p.dst.ip = Ipv4(8, 8, 8, 8);
    auto r = sim.send(p);
    CHECK(r.dropped == DropReason::NoRoute);

    p.dst.ip = Ipv4::broadcast();
    p.deliver_to = "sensor";
    bool got = false;
    sim.on_deliver("sensor", [&](const PacketEnvelope& pkt) { got = pkt.dst.ip == Ipv4::broadcast(); });
    CHECK_FALSE(sim.send(p).dropped);
    sim.run_until_idle();
    CHECK(got);
}

TEST_CASE("explicit routes must be linked and end at the receiver") {
    auto topo = reference_topology();
    Simulation sim(topo);
    auto p = between(topo, "attacker", "sensor");
    CHECK(sim.send(p, PathPolicy{{"attacker", "router", "sensor"}}).dropped == DropReason::NoRoute);
    CHECK(sim.send(p, PathPolicy{{"attacker", "cloud", "router"}}).dropped == DropReason::NoRoute);
    CHECK_FALSE(sim.send(p, PathPolicy{{"attacker", "cloud", "router", "sensor"}}).dropped);
}

TEST_CASE("equal-time work runs in enqueue order and the clock never goes back") {
    auto topo = reference_topology();
    Simulation sim(topo);
    std::vector<int> order;
    sim.schedule(10, [&] { order.push_back(1); });
    sim.schedule(5, [&] { order.push_back(0); });
    sim.schedule(10, [&] {
        order.push_back(2);
        sim.schedule(3, [&] { order.push_back(4); });  // in the past: runs now
    });
    sim.schedule(10, [&] { order.push_back(3); });
    sim.run_until_idle();
    CHECK(order == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(sim.now() == 10);
}

TEST_CASE("run_until stops at the limit and advances the clock") {
    auto topo = reference_topology();
    Simulation sim(topo);
    int fired = 0;
    sim.schedule(100, [&] { ++fired; });
    sim.schedule(300, [&] { ++fired; });
    sim.run_until(200);
    CHECK(fired == 1);
    CHECK(sim.now() == 200);
    CHECK(sim.pending() == 1);
    sim.run_until_idle();
    CHECK(fired == 2);
}

TEST_CASE("submit is safe from other threads") {
    auto topo = reference_topology();
    Simulation sim(topo);
    int delivered = 0;
    sim.on_deliver("sensor", [&](const PacketEnvelope&) { ++delivered; });
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 50; ++i) sim.submit(between(topo, "attacker", "sensor"));
        });
    }
    for (auto& th : threads) th.join();
    sim.run_until_idle();
    CHECK(delivered == 200);
}
