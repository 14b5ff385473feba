#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "honeynet/detection.hpp"
#include "honeynet/error.hpp"
#include "honeynet/gateway.hpp"
#include "honeynet/harness.hpp"
#include "honeynet/live.hpp"
#include "honeynet/reference.hpp"
#include "honeynet/scenario.hpp"
#include "honeynet/sensor.hpp"
#include "honeynet/traceback.hpp"
#include "support.hpp"

using namespace honeynet;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    if (!ok) ++failures;
}

const ScenarioResult& reference_result(double* seconds = nullptr) {
    static double elapsed = 0;
    static const ScenarioResult result = [] {
        auto t0 = std::chrono::steady_clock::now();
        auto r = run_scenario(reference_scenario(), reference_topology(), reference_options());
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }();
    if (seconds) *seconds = elapsed;
    return result;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void architecture_ordering() {
    double seconds = 0;
    const auto& r = reference_result(&seconds);
    bool ok = r.daily.size() == 4;
    std::string detail;
    for (const auto& day : r.daily) {
        auto decoy = day.devices.at("honeypot1").footprint;
        auto sensor = day.devices.at("honeypot2").footprint;
        auto fw = day.devices.at("firewall").footprint;
        ok = ok && decoy > sensor && sensor > fw;
        detail += "day " + std::to_string(day.day_index) + " " + std::to_string(decoy) + ">" + std::to_string(sensor) +
                  ">" + std::to_string(fw) + "; ";
    }
    ok = ok && seconds < 10.0;
    detail += "runtime " + std::to_string(seconds) + " s";
    report("architecture-ordering", ok, detail);
}

void ddos_placement() {
    const auto& r = reference_result();
    bool ok = r.daily.size() == 4;
    std::string detail;
    for (const auto& day : r.daily) {
        auto fw = day.devices.at("firewall").ddos;
        auto hp1 = day.devices.at("honeypot1").ddos;
        auto hp2 = day.devices.at("honeypot2").ddos;
        ok = ok && fw < hp1 && fw < hp2;
        detail += "day " + std::to_string(day.day_index) + " fw " + std::to_string(fw) + " < " + std::to_string(hp1) +
                  "," + std::to_string(hp2) + "; ";
    }
    report("ddos-placement", ok, detail);
}

std::size_t volumetric_events(const ScenarioResult& r) {
    const auto& events = r.events_by_device.at("honeypot2");
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const ThreatEvent& e) {
        return e.kind == EventKind::UdpBroadcast || e.kind == EventKind::UdpDatagram;
    }));
}

void flood_defense() {
    auto options = reference_options();
    options.router.enabled_flood_defense = false;
    auto open = run_scenario(reference_scenario(), reference_topology(), options);
    auto on = volumetric_events(reference_result());
    auto off = volumetric_events(open);
    report("router-flood-defense", on > 0 && off >= 2 * on,
           "sensor udp events defended " + std::to_string(on) + ", undefended " + std::to_string(off));
}

void slowloris_window() {
    const Slowloris campaign{25, 10'000, 60'000, 200, 80};
    const TimeMs start = 1'000;
    const TimeMs path_latency = 15;  // attacker -> cloud -> router -> sensor

    auto topo = reference_topology();
    Simulation sim(topo);
    EventLog log;
    SensorHoneypot sensor(SensorConfig{}, log);
    sim.on_deliver("sensor", [&](const PacketEnvelope& p) { sensor.ingest(p, sim.now()); });
    Attacker attacker(sim, "attacker", 42);
    attacker.run_slowloris("sensor", campaign, start);
    sim.run_until_idle();
    auto events = log.snapshot();
    auto sessions = sensor.sessions();
    DetectionThresholds t;
    auto reports = detect_slowloris(sessions, events, t);

    // Sweep line over the scheduled [open, close) intervals.
    std::vector<std::pair<TimeMs, int>> edges;
    for (int i = 0; i < campaign.connections; ++i) {
        TimeMs open = start + i * campaign.ramp_ms + path_latency;
        edges.emplace_back(open, +1);
        edges.emplace_back(open + campaign.duration_ms, -1);
    }
    std::sort(edges.begin(), edges.end());
    std::vector<std::pair<TimeMs, TimeMs>> expected;
    int active = 0;
    std::optional<TimeMs> since;
    for (std::size_t i = 0; i < edges.size();) {
        TimeMs at = edges[i].first;
        for (; i < edges.size() && edges[i].first == at; ++i) active += edges[i].second;
        if (active >= t.slowloris_min_concurrent && !since) since = at;
        if (active < t.slowloris_min_concurrent && since) {
            if (at - *since >= t.slowloris_min_duration_ms) expected.emplace_back(*since, at);
            since.reset();
        }
    }

    bool ok = reports.size() == 1 && expected.size() == 1 && reports[0].attack_class == AttackClass::SlowlorisDoS &&
              std::abs(reports[0].start_time_ms - expected[0].first) <= 1 &&
              std::abs(reports[0].end_time_ms - expected[0].second) <= 1;
    std::string detail = std::to_string(reports.size()) + " report(s)";
    if (!reports.empty()) {
        detail += ", window [" + std::to_string(reports[0].start_time_ms) + ", " +
                  std::to_string(reports[0].end_time_ms) + ")";
    }
    if (!expected.empty()) {
        detail += ", oracle [" + std::to_string(expected[0].first) + ", " + std::to_string(expected[0].second) + ")";
    }
    report("slowloris-detection", ok, detail);
}

ThreatEvent boundary_event(EventId id, TimeMs ts, std::uint16_t port, EventKind kind) {
    ThreatEvent e;
    e.id = id;
    e.timestamp_ms = ts;
    e.sensor_id = "honeypot2";
    e.source = NetEndpoint{Ipv4(198, 51, 100, 7), 40000};
    e.dest_port = port;
    e.kind = kind;
    e.protocol = protocol_of(kind);
    e.severity = assign_severity(kind);
    return e;
}

std::vector<ThreatEvent> burst(int n, EventKind kind, bool distinct_ports) {
    std::vector<ThreatEvent> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(boundary_event(static_cast<EventId>(i + 1), 60'000 + i * 100,
                                     static_cast<std::uint16_t>(distinct_ports ? 1000 + i : 53), kind));
    }
    return out;
}

std::size_t slowloris_reports(int n, const DetectionThresholds& t) {
    std::vector<SessionState> sessions;
    std::vector<ThreatEvent> events;
    for (int i = 0; i < n; ++i) {
        SessionState s;
        s.source = NetEndpoint{Ipv4(198, 51, 100, 7), static_cast<std::uint16_t>(5000 + i)};
        s.dest_port = 80;
        s.opened_at_ms = i;
        s.last_activity_ms = 100'000;
        s.closed_at_ms = 100'000;
        s.tcp_handshake_complete = true;
        s.event_ids = {static_cast<EventId>(i + 1)};
        sessions.push_back(s);
        events.push_back(boundary_event(static_cast<EventId>(i + 1), i, 80, EventKind::HttpRequestPartial));
    }
    return detect_slowloris(sessions, events, t).size();
}

void detector_boundaries() {
    DetectionThresholds t;
    struct Case {
        const char* name;
        int n;
        std::function<std::size_t(int)> count;
    };
    std::vector<Case> cases{
        {"port-scan", t.portscan_min_distinct_ports,
         [&](int n) { return detect_port_scan(burst(n, EventKind::TcpConnect, true), t).size(); }},
        {"syn-scan", t.synscan_min_incomplete,
         [&](int n) { return detect_syn_scan(burst(n, EventKind::TcpSynIncomplete, true), t).size(); }},
        {"udp-flood", t.udpflood_min_datagrams,
         [&](int n) { return detect_udp_flood(burst(n, EventKind::UdpBroadcast, false), t).size(); }},
        {"slowloris", t.slowloris_min_concurrent, [&](int n) { return slowloris_reports(n, t); }},
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        auto below = c.count(c.n - 1);
        auto at = c.count(c.n);
        ok = ok && below == 0 && at == 1;
        detail += std::string(c.name) + " N=" + std::to_string(c.n) + ": " + std::to_string(below) + "/" +
                  std::to_string(at) + "; ";
    }
    report("detector-boundaries", ok, detail);
}

void token_bucket() {
    std::mt19937_64 rng(1001);
    const std::int64_t rate = 10, burst = 20;
    bool ok = true;
    std::int64_t worst_slack = 1 << 30;
    for (int schedule = 0; schedule < 1000 && ok; ++schedule) {
        TokenBucketState b;
        const Ipv4 src(203, 0, 113, 77);
        TimeMs t = static_cast<TimeMs>(rng() % 1000);
        std::vector<TimeMs> forwarded;
        int n = 50 + static_cast<int>(rng() % 400);
        for (int i = 0; i < n; ++i) {
            t += static_cast<TimeMs>(rng() % 4 == 0 ? rng() % 2000 : rng() % 40);
            if (b.take(src, t, rate, burst)) forwarded.push_back(t);
        }
        // Every window [forwarded[i], forwarded[j]].
        for (std::size_t i = 0; i < forwarded.size() && ok; ++i) {
            for (std::size_t j = i; j < forwarded.size(); ++j) {
                auto count = static_cast<std::int64_t>(j - i + 1);
                auto bound = burst + rate * (forwarded[j] - forwarded[i]) / 1000 + 1;
                worst_slack = std::min(worst_slack, bound - count);
                if (count > bound) {
                    ok = false;
                    break;
                }
            }
        }
    }
    report("token-bucket-bound", ok, "1000 schedules, minimum slack " + std::to_string(worst_slack));
}

void firewall_oracle() {
    std::mt19937_64 rng(31337);
    const std::uint32_t bases[] = {Ipv4(198, 51, 100, 0).value(), Ipv4(203, 0, 113, 0).value(),
                                   Ipv4(192, 0, 2, 0).value(), Ipv4(10, 0, 0, 0).value()};
    struct Raw {
        bool allow;
        std::uint32_t net;
        int prefix, lo, hi, proto;
    };
    std::vector<Raw> raw;
    std::vector<FirewallRule> rules;
    for (int i = 0; i < 20; ++i) {
        Raw r{rng() % 2 == 0, bases[rng() % 4] | static_cast<std::uint32_t>(rng() % 256),
              static_cast<int>(rng() % 4 == 0 ? 0 : 8 + rng() % 25), 0, 0, static_cast<int>(rng() % 4) - 1};
        r.lo = static_cast<int>(rng() % 1000);
        r.hi = r.lo + static_cast<int>(rng() % 300);
        raw.push_back(r);
        FirewallRule f;
        f.action = r.allow ? RuleAction::Allow : RuleAction::Deny;
        f.src_cidr = Cidr(Ipv4(r.net), static_cast<std::uint8_t>(r.prefix));
        f.dst_ports = PortRange{static_cast<std::uint16_t>(r.lo), static_cast<std::uint16_t>(r.hi)};
        if (r.proto >= 0) f.protocol = static_cast<Protocol>(r.proto);
        rules.push_back(f);
    }
    int agree = 0;
    for (int k = 0; k < 1000; ++k) {
        std::uint32_t src = bases[rng() % 4] | static_cast<std::uint32_t>(rng() % 256);
        int port = static_cast<int>(rng() % 1300);
        int proto = static_cast<int>(rng() % 3);
        PacketEnvelope p;
        p.src = NetEndpoint{Ipv4(src), 41000};
        p.dst = NetEndpoint{Ipv4(10, 20, 0, 10), static_cast<std::uint16_t>(port)};
        p.protocol = static_cast<Protocol>(proto);
        p.kind = proto == 1 ? EventKind::UdpDatagram : proto == 2 ? EventKind::IcmpEcho : EventKind::TcpConnect;
        bool allow = false;
        for (const auto& r : raw) {
            std::uint32_t mask = r.prefix == 0 ? 0 : ~std::uint32_t{0} << (32 - r.prefix);
            if ((src & mask) != (r.net & mask) || port < r.lo || port > r.hi || (r.proto >= 0 && r.proto != proto)) {
                continue;
            }
            allow = r.allow;
            break;
        }
        agree += firewall_evaluate(rules, RuleAction::Deny, p, k).decision.forwarded() == allow;
    }
    report("firewall-oracle", agree == 1000, std::to_string(agree) + "/1000 decisions agree");
}

void traceback_paths() {
    auto topo = reference_topology();
    const auto& nodes = topo.nodes();
    std::map<std::string, std::map<std::string, std::int64_t>> adj;
    for (const auto& l : topo.links()) {
        adj[l.a][l.b] = l.latency_ms;
        adj[l.b][l.a] = l.latency_ms;
    }
    auto distance = [&](const std::string& from, const std::string& to) {
        std::map<std::string, int> d{{from, 0}};
        std::deque<std::string> q{from};
        while (!q.empty()) {
            auto n = q.front();
            q.pop_front();
            for (const auto& [m, lat] : adj[n]) {
                if (!d.count(m)) {
                    d[m] = d[n] + 1;
                    q.push_back(m);
                }
            }
        }
        return d.count(to) ? d[to] : -1;
    };
    bool ok = true;
    int pairs = 0;
    std::string first_failure;
    for (const auto& origin : nodes) {
        for (const auto& target : nodes) {
            if (origin.name == target.name) continue;
            ++pairs;
            auto trace = traceroute(topo, origin.name, target.ip);
            bool good = trace.reached && static_cast<int>(trace.hops.size()) == distance(origin.name, target.name) &&
                        !trace.hops.empty() && trace.hops.back().node == target.name;
            std::string prev = origin.name;
            std::int64_t cumulative = 0;
            TimeMs last_rtt = 0;
            for (const auto& hop : trace.hops) {
                if (!good) break;
                auto it = adj[prev].find(hop.node);
                if (it == adj[prev].end()) {
                    good = false;
                    break;
                }
                cumulative += it->second;
                for (auto rtt : hop.rtt_ms) good = good && rtt == 2 * cumulative;
                good = good && hop.rtt_ms[0] >= last_rtt;
                last_rtt = hop.rtt_ms[0];
                prev = hop.node;
            }
            if (!good && first_failure.empty()) first_failure = origin.name + " -> " + target.name;
            ok = ok && good;
        }
    }
    auto sample = traceroute(topo, "sensor", topo.find("attacker")->ip);
    std::string detail = std::to_string(pairs) + " origin/target pairs; sensor->attacker";
    for (const auto& h : sample.hops) detail += " " + h.node + "@" + std::to_string(h.rtt_ms[0]) + "ms";
    if (!first_failure.empty()) detail += "; first mismatch " + first_failure;
    report("traceback-paths", ok, detail);
}

void determinism() {
    testing::TempDir a("accept_a"), b("accept_b");
    write_scenario_outputs(reference_result(), a.path());
    auto again = run_scenario(reference_scenario(), reference_topology(), reference_options());
    write_scenario_outputs(again, b.path());
    bool ok = true;
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
        ++files;
        ok = ok && slurp(entry.path()) == slurp(b.path() / entry.path().filename());
    }
    bool has_log = std::filesystem::exists(a / "events.log") && std::filesystem::exists(a / "reports.txt");
    report("determinism", ok && has_log && files > 0, std::to_string(files) + " output files byte-identical");
}

void event_round_trip() {
    std::mt19937_64 rng(10'000);
    int exact = 0;
    for (int i = 0; i < 10'000; ++i) {
        auto e = testing::random_event(rng, static_cast<EventId>(i + 1), static_cast<TimeMs>(rng() % 400'000'000));
        exact += parse_event(serialize_event(e)) == e;
    }
    report("event-round-trip", exact == 10'000, std::to_string(exact) + "/10000 events field-exact");
}

void live_smoke() {
    EventLog log(ClockMode::Live);
    DecoyConfig cfg;
    cfg.listen_port = 8080;
    cfg.banner_text = "Acceptance banner";
    DecoyServer server(cfg, log, "127.0.0.1");
    try {
        server.start();
    } catch (const IoError& e) {
        report("live-decoy-smoke", false, std::string("cannot bind 127.0.0.1:8080: ") + e.what());
        return;
    }
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(8080);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    std::string response;
    if (fd >= 0 && ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
        const std::string request = "GET / HTTP/1.1\r\nHost: localhost\r\n\r\n";
        ::send(fd, request.data(), request.size(), MSG_NOSIGNAL);
        auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
        char buf[4096];
        while (std::chrono::steady_clock::now() < deadline) {
            pollfd p{fd, POLLIN, 0};
            if (::poll(&p, 1, 50) <= 0) continue;
            auto n = ::recv(fd, buf, sizeof buf, 0);
            if (n <= 0) break;
            response.append(buf, static_cast<std::size_t>(n));
        }
    }
    if (fd >= 0) ::close(fd);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (server.connections_served() < 1 && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    auto body_at = response.find("\r\n\r\n");
    auto body = body_at == std::string::npos ? std::string() : response.substr(body_at + 4);
    auto events = log.snapshot();
    bool ok = body == cfg.banner_text && events.size() == 1;
    report("live-decoy-smoke", ok,
           "banner " + std::string(body == cfg.banner_text ? "returned" : "missing") + ", " +
               std::to_string(events.size()) + " event(s) logged");
}

}  // namespace

int main() {
    try {
        architecture_ordering();
        ddos_placement();
        flood_defense();
        slowloris_window();
        detector_boundaries();
        token_bucket();
        firewall_oracle();
        traceback_paths();
        determinism();
        event_round_trip();
        live_smoke();
    } catch (const std::exception& e) {
        std::printf("FAIL acceptance: unexpected exception: %s\n", e.what());
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
