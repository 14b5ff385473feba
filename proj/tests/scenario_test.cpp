#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "honeynet/error.hpp"
#include "honeynet/reference.hpp"
#include "honeynet/scenario.hpp"
#include "support.hpp"

using namespace honeynet;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const ScenarioResult& reference_result() {
    static const ScenarioResult result = run_scenario(reference_scenario(), reference_topology(), reference_options());
    return result;
}

std::size_t count_kind(const std::vector<ThreatEvent>& events, EventKind kind) {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [&](const ThreatEvent& e) { return e.kind == kind; }));
}

}  // namespace

TEST_CASE("reference run reproduces the published daily counts") {
    const auto& r = reference_result();
    REQUIRE(r.daily.size() == 4);
    // firewall, honeypot2, honeypot1 footprint; honeypot1, honeypot2, firewall DDoS
    const std::int64_t footprint[4][3] = {{6, 12, 22}, {2, 14, 22}, {3, 18, 23}, {4, 11, 25}};
    const std::int64_t ddos[4][3] = {{7, 7, 4}, {18, 11, 2}, {11, 13, 3}, {13, 9, 2}};
    for (std::size_t d = 0; d < 4; ++d) {
        CAPTURE(d);
        const auto& dev = r.daily[d].devices;
        CHECK(dev.at("firewall").footprint == footprint[d][0]);
        CHECK(dev.at("honeypot2").footprint == footprint[d][1]);
        CHECK(dev.at("honeypot1").footprint == footprint[d][2]);
        CHECK(dev.at("honeypot1").ddos == ddos[d][0]);
        CHECK(dev.at("honeypot2").ddos == ddos[d][1]);
        CHECK(dev.at("firewall").ddos == ddos[d][2]);
        // The firewall sees the fewest DDoS attacks every day.
        CHECK(dev.at("firewall").ddos < dev.at("honeypot1").ddos);
        CHECK(dev.at("firewall").ddos < dev.at("honeypot2").ddos);
    }
}

TEST_CASE("the shared log is ordered and partitioned by device") {
    const auto& r = reference_result();
    REQUIRE_FALSE(r.events.empty());
    for (std::size_t i = 0; i < r.events.size(); ++i) {
        REQUIRE(r.events[i].id == i + 1);
        if (i) REQUIRE(r.events[i - 1].timestamp_ms <= r.events[i].timestamp_ms);
    }
    std::size_t total = 0;
    for (const auto& [device, events] : r.events_by_device) {
        for (const auto& e : events) REQUIRE(e.sensor_id == device);
        total += events.size();
    }
    CHECK(total == r.events.size());
    CHECK(r.events_by_device.size() == 3);

    // Every event is evidence in exactly one report of its device.
    for (const auto& [device, reports] : r.reports_by_device) {
        std::multiset<EventId> ids;
        for (const auto& rep : reports) ids.insert(rep.evidence.begin(), rep.evidence.end());
        CHECK(ids.size() == r.events_by_device.at(device).size());
        CHECK(std::set<EventId>(ids.begin(), ids.end()).size() == ids.size());
    }
}

TEST_CASE("outputs are byte-identical across runs") {
    testing::TempDir a("scenario_a"), b("scenario_b");
    write_scenario_outputs(reference_result(), a.path());
    auto again = run_scenario(reference_scenario(), reference_topology(), reference_options());
    write_scenario_outputs(again, b.path());
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
        auto name = entry.path().filename();
        CAPTURE(name.string());
        CHECK(slurp(entry.path()) == slurp(b.path() / name.string()));
        ++files;
    }
    CHECK(files == 7);  // events, 3 device logs, reports, daily, series
    auto daily = slurp(a / "daily.txt");
    CHECK(parse_tables(daily, TableLayout::reference()) == reference_result().daily);
    auto events = slurp(a / "events.log");
    CHECK(static_cast<std::size_t>(std::count(events.begin(), events.end(), '\n')) == reference_result().events.size());
}

TEST_CASE("flood defense cuts the flood traffic reaching the sensor") {
    auto options = reference_options();
    options.router.enabled_flood_defense = false;
    auto open = run_scenario(reference_scenario(), reference_topology(), options);
    const auto& defended = reference_result();
    auto on = count_kind(defended.events_by_device.at("honeypot2"), EventKind::UdpBroadcast);
    auto off = count_kind(open.events_by_device.at("honeypot2"), EventKind::UdpBroadcast);
    CHECK(on > 0);
    CHECK(off >= 2 * on);
    CHECK(defended.counters.drops.at("FloodLimited") > 0);
    CHECK(open.counters.drops.count("FloodLimited") == 0);
}

TEST_CASE("a changed seed changes the traffic but not the validity") {
    auto script = reference_scenario();
    script.seed = 7;
    auto r = run_scenario(script, reference_topology(), reference_options());
    CHECK(r.daily.size() == 4);
    std::string a, b;
    for (const auto& e : r.emissions) a += format_emission(e);
    for (const auto& e : reference_result().emissions) b += format_emission(e);
    CHECK(a != b);
}

TEST_CASE("honeynet wiring on a hand-driven simulation") {
    auto topo = reference_topology();
    Simulation sim(topo);
    EventLog log;
    Honeynet net(sim, reference_options(), log, 1);
    auto& attacker = net.attacker("attacker");
    attacker.run_probe("decoy", 8080, 0);
    attacker.run_probe("production", 80, 100);
    attacker.run_probe("production", 22, 200);
    sim.run_until_idle();

    auto by_device = net.events_by_device();
    REQUIRE(by_device.at("honeypot1").size() == 1);
    CHECK(by_device.at("honeypot1")[0].kind == EventKind::HttpRequestComplete);
    CHECK(attacker.banners_received() == 1);
    REQUIRE(by_device.at("firewall").size() == 1);
    CHECK(by_device.at("firewall")[0].dest_port == 22);
    auto counters = net.counters();
    CHECK(counters.deliveries.at("production") == 1);
    CHECK(counters.drops.at("PolicyDeny") == 1);
    CHECK(counters.decoy_replies == 1);
    CHECK(net.devices() == std::vector<std::string>{"honeypot1", "honeypot2", "firewall"});
}

TEST_CASE("scripts that do not fit the topology are rejected") {
    auto script = ScenarioScript::parse("day 1\nstep 0 attacker ghost probe port=80\n");
    CHECK_THROWS_AS(run_scenario(script, reference_topology()), ValidationError);
}

TEST_CASE("stable_hash is FNV-1a") {
    CHECK(stable_hash("") == 0xcbf29ce484222325ULL);
    CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cULL);
}
