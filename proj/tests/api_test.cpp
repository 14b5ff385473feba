#include <atomic>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "honeynet/api.hpp"
#include "honeynet/reference.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace honeynet;
using nlohmann::json;

namespace {

constexpr const char* kOperator = "op-secret";
constexpr const char* kReader = "read-secret";

struct Fixture {
    ScenarioResult result = run_scenario(reference_scenario(), reference_topology(), reference_options());
    EventLog log{ClockMode::Sim};
    RuleStore rules;
    std::unique_ptr<ApiServer> server;
    int port = 0;

    Fixture() {
        for (const auto& e : result.events) log.append(e);
        ApiContext ctx;
        ctx.log = &log;
        ctx.rules = &rules;
        ctx.topology = reference_topology();
        ctx.registry = reference_registry();
        ctx.traceback_origin = "sensor";
        ctx.day_length_ms = reference_scenario().day_length_ms;
        ctx.sessions = [this] { return result.sessions_by_device; };
        server = std::make_unique<ApiServer>(
            ctx, std::vector<ApiSession>{{kOperator, ApiRole::Operator, 0}, {kReader, ApiRole::ReadOnly, 0}});
        port = server->start("127.0.0.1", 0);
    }

    httplib::Client client(const char* token = kOperator) const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(10, 0);
        if (token) c.set_bearer_token_auth(token);
        return c;
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

std::vector<json> ndjson(const std::string& body) {
    std::vector<json> out;
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(json::parse(line));
    }
    return out;
}

}  // namespace

TEST_CASE("authentication and roles") {
    auto& f = fixture();
    auto anon = f.client(nullptr);
    auto res = anon.Get("/topology");
    REQUIRE(res);
    CHECK(res->status == 401);
    CHECK(json::parse(res->body).contains("error"));
    CHECK(f.client("wrong").Get("/topology")->status == 401);

    auto reader = f.client(kReader);
    CHECK(reader.Get("/topology")->status == 200);
    CHECK(reader.Post("/firewall/rules", R"({"rule":"allow any 22 tcp"})", "application/json")->status == 403);
    CHECK(reader.Post("/traceback", R"({"target":"192.0.2.10"})", "application/json")->status == 403);
    CHECK(reader.Delete("/firewall/rules/1")->status == 403);
}

TEST_CASE("event stream replays the whole log in id order") {
    auto& f = fixture();
    auto res = f.client(kReader).Get("/events?since=0&follow=0");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto lines = ndjson(res->body);
    REQUIRE(lines.size() == f.result.events.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        REQUIRE(lines[i]["id"].get<EventId>() == i + 1);
        REQUIRE(lines[i]["timestamp_ms"].get<TimeMs>() == f.result.events[i].timestamp_ms);
        REQUIRE(lines[i]["sensor_id"] == f.result.events[i].sensor_id);
    }
    auto tail = ndjson(f.client().Get("/events?since=" + std::to_string(lines.size() - 5) + "&follow=0")->body);
    CHECK(tail.size() == 5);
    CHECK(f.client().Get("/events?since=abc")->status == 400);
}

TEST_CASE("a reconnecting client resumes without gaps or duplicates") {
    auto& f = fixture();
    std::vector<EventId> seen;
    EventId cursor = 0;
    for (int attempt = 0; attempt < 50 && cursor < f.log.last_id(); ++attempt) {
        std::string pending;
        std::size_t taken = 0;
        auto c = f.client();
        // Drop the connection after a few hundred events.
        c.Get("/events?follow=0&since=" + std::to_string(cursor), [&](const char* data, std::size_t len) {
            pending.append(data, len);
            std::size_t nl;
            while ((nl = pending.find('\n')) != std::string::npos) {
                auto e = json::parse(pending.substr(0, nl));
                pending.erase(0, nl + 1);
                cursor = e["id"].get<EventId>();
                seen.push_back(cursor);
                if (++taken >= 700) return false;
            }
            return true;
        });
    }
    REQUIRE(seen.size() == f.log.size());
    for (std::size_t i = 0; i < seen.size(); ++i) REQUIRE(seen[i] == i + 1);
}

TEST_CASE("follow mode delivers events appended after the request") {
    EventLog log(ClockMode::Live);
    RuleStore rules;
    ApiContext ctx;
    ctx.log = &log;
    ctx.rules = &rules;
    ApiServer server(ctx, {{kReader, ApiRole::ReadOnly, 0}});
    int port = server.start("127.0.0.1", 0);

    std::atomic<int> received{0};
    std::thread reader([&] {
        httplib::Client c("127.0.0.1", port);
        c.set_bearer_token_auth(kReader);
        c.set_read_timeout(10, 0);
        std::string pending;
        c.Get("/events?since=0", [&](const char* data, std::size_t len) {
            pending.append(data, len);
            for (auto nl = pending.find('\n'); nl != std::string::npos; nl = pending.find('\n')) {
                pending.erase(0, nl + 1);
                ++received;
            }
            return received < 3;
        });
    });
    for (int i = 0; i < 3; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        ThreatEvent e;
        e.sensor_id = "honeypot2";
        e.timestamp_ms = i;
        log.append(e);
    }
    reader.join();
    CHECK(received == 3);
    log.close();
    server.stop();
}

TEST_CASE("reports match a direct recomputation") {
    auto& f = fixture();
    const TimeMs day = reference_scenario().day_length_ms;
    auto res = f.client(kReader).Get("/reports?from=0&to=" + std::to_string(4 * day));
    REQUIRE(res->status == 200);
    auto body = json::parse(res->body);
    CHECK(body["prefix_id"].get<EventId>() == f.log.last_id());
    REQUIRE(body["daily"].size() == 4);
    for (std::size_t d = 0; d < 4; ++d) {
        for (const auto& [device, counts] : f.result.daily[d].devices) {
            CHECK(body["daily"][d]["devices"][device]["footprint"].get<std::int64_t>() == counts.footprint);
            CHECK(body["daily"][d]["devices"][device]["ddos"].get<std::int64_t>() == counts.ddos);
        }
    }
    for (const auto& [device, reports] : f.result.reports_by_device) {
        REQUIRE(body["reports"][device].size() == reports.size());
        for (std::size_t i = 0; i < reports.size(); ++i) {
            CHECK(body["reports"][device][i]["attack_class"] == std::string(to_string(reports[i].attack_class)));
            CHECK(body["reports"][device][i]["evidence"].get<std::vector<EventId>>() == reports[i].evidence);
        }
    }

    // Day 2 only.
    auto day2 = json::parse(f.client().Get("/reports?from=" + std::to_string(day) + "&to=" + std::to_string(2 * day))->body);
    REQUIRE(day2["daily"].size() == 1);
    CHECK(day2["daily"][0]["day"] == 2);
    for (const auto& [device, list] : day2["reports"].items()) {
        for (const auto& r : list) {
            CHECK(r["start_time_ms"].get<TimeMs>() >= day);
            CHECK(r["start_time_ms"].get<TimeMs>() < 2 * day);
        }
    }

    auto empty = json::parse(f.client().Get("/reports?from=5&to=5")->body);
    CHECK(empty["reports"].empty());
    CHECK(empty["daily"].empty());
    auto inverted = f.client().Get("/reports?from=10&to=5");
    CHECK(inverted->status == 400);
    CHECK(json::parse(inverted->body)["offenders"] == json::array({"from", "to"}));
}

TEST_CASE("traceback through the api equals a direct trace") {
    auto& f = fixture();
    auto topo = reference_topology();
    auto target = topo.find("attacker")->ip;
    auto res = f.client().Post("/traceback", json{{"target", target.to_string()}}.dump(), "application/json");
    REQUIRE(res->status == 200);
    auto body = json::parse(res->body);
    auto direct = traceroute(topo, "sensor", target);
    REQUIRE(body["trace"]["hops"].size() == direct.hops.size());
    for (std::size_t i = 0; i < direct.hops.size(); ++i) {
        CHECK(body["trace"]["hops"][i]["node"] == direct.hops[i].node);
        CHECK(body["trace"]["hops"][i]["rtt_ms"][0].get<TimeMs>() == direct.hops[i].rtt_ms[0]);
    }
    CHECK(body["trace"]["reached"] == true);
    CHECK(body["fingerprint"]["os_name"] == "Kali Linux");
    CHECK(body["domain"]["domain"] == reference_registry().lookup(target)->domain);

    auto listed = json::parse(f.client(kReader).Get("/traceback")->body);
    CHECK(listed.size() >= 1);
    CHECK(f.client().Post("/traceback", R"({"target":"1.2.3"})", "application/json")->status == 400);
    CHECK(f.client().Post("/traceback", "not json", "application/json")->status == 400);
    auto outside = json::parse(f.client().Post("/traceback", R"({"target":"8.8.8.8"})", "application/json")->body);
    CHECK(outside["trace"]["reached"] == false);
    CHECK(outside["fingerprint"].is_null());
}

TEST_CASE("firewall rules can be listed, added and deleted") {
    auto& f = fixture();
    auto c = f.client();
    auto before = json::parse(c.Get("/firewall/rules")->body)["version"].get<std::uint64_t>();
    auto added = c.Post("/firewall/rules", R"({"rule":"deny 203.0.113.0/24 any any bad net","position":0})",
                        "application/json");
    REQUIRE(added->status == 201);
    CHECK(json::parse(added->body)["version"].get<std::uint64_t>() == before + 1);
    auto listing = json::parse(c.Get("/firewall/rules")->body);
    CHECK(listing["default_policy"] == "deny");
    auto id = listing["rules"][0]["id"].get<std::uint64_t>();
    CHECK(listing["rules"][0]["text"] == "deny 203.0.113.0/24 any any bad net");
    CHECK(listing["rules"][0]["comment"] == "bad net");

    auto bad = c.Post("/firewall/rules", R"({"rule":"permit any 80 tcp"})", "application/json");
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["offenders"] == json::array({"action"}));
    CHECK(c.Post("/firewall/rules", R"({"rule":"allow any 80 tcp","position":999})", "application/json")->status == 400);

    CHECK(c.Delete("/firewall/rules/" + std::to_string(id))->status == 200);
    CHECK(c.Delete("/firewall/rules/" + std::to_string(id))->status == 404);
    CHECK(replay_journal(f.rules.journal()) == *f.rules.snapshot());
}

TEST_CASE("concurrent rule posts all land with distinct versions") {
    auto& f = fixture();
    auto start = f.rules.snapshot()->version;
    std::vector<std::thread> threads;
    std::atomic<int> created{0};
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            auto c = f.client();
            for (int i = 0; i < 10; ++i) {
                auto body = json{{"rule", "deny 10." + std::to_string(t) + "." + std::to_string(i) + ".0/24 any any"}};
                if (c.Post("/firewall/rules", body.dump(), "application/json")->status == 201) ++created;
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(created == 40);
    CHECK(f.rules.snapshot()->version == start + 40);
    CHECK(replay_journal(f.rules.journal()) == *f.rules.snapshot());
}

TEST_CASE("topology listing") {
    auto body = json::parse(fixture().client(kReader).Get("/topology")->body);
    CHECK(body["nodes"].size() == 7);
    CHECK(body["links"].size() == 6);
    CHECK(body["nodes"][0]["name"] == "attacker");
}
