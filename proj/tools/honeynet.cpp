#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "honeynet/api.hpp"
#include "honeynet/error.hpp"
#include "honeynet/live.hpp"
#include "honeynet/reference.hpp"
#include "honeynet/scenario.hpp"

using namespace honeynet;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Topology load_topology(const std::string& path) {
    return path.empty() ? reference_topology() : Topology::parse(read_file(path));
}

ScenarioScript load_scenario(const std::string& path) {
    return path.empty() ? reference_scenario() : ScenarioScript::parse(read_file(path));
}

HoneynetOptions load_options(const std::string& rules_path, bool no_flood_defense) {
    HoneynetOptions options = reference_options();
    if (!rules_path.empty()) options.firewall_rules = parse_rules(read_file(rules_path));
    options.router.enabled_flood_defense = !no_flood_defense;
    return options;
}

// Blocks until SIGINT or SIGTERM.
void wait_for_signal() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
}

void block_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

std::pair<std::string, int> split_addr(const std::string& addr) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw ValidationError("address must be host:port", {"addr"});
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (const std::exception&) {
        throw ValidationError("bad port in address", {"addr"});
    }
    if (port < 0 || port > 65535) throw ValidationError("bad port in address", {"addr"});
    return {addr.substr(0, colon), port};
}

void print_summary(const ScenarioResult& r) {
    std::cout << render_tables(r.daily, TableLayout::reference()) << "\n";
    std::cout << "events: " << r.events.size() << "\n";
    for (const auto& [device, reports] : r.reports_by_device) {
        std::map<std::string, int> by_class;
        for (const auto& rep : reports) ++by_class[std::string(to_string(rep.attack_class))];
        std::cout << device << ":";
        for (const auto& [cls, n] : by_class) std::cout << " " << cls << "=" << n;
        std::cout << "\n";
    }
    for (const auto& [reason, n] : r.counters.drops) std::cout << "dropped " << reason << ": " << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Honeynet simulator, honeypots and operator service"};
    app.require_subcommand(1);

    std::string topology_path, scenario_path, rules_path, out_dir;
    std::optional<std::uint64_t> seed;
    bool no_flood_defense = false;

    auto* sim = app.add_subcommand("sim", "Run a scenario in simulation and print the daily tables");
    sim->add_option("--topology", topology_path, "Topology file (default: bundled reference)");
    sim->add_option("--scenario", scenario_path, "Scenario file (default: bundled reference)");
    sim->add_option("--seed", seed, "Override the scenario seed");
    sim->add_option("--rules", rules_path, "Firewall rule file");
    sim->add_option("--out", out_dir, "Also write outputs to this directory");
    sim->add_flag("--no-flood-defense", no_flood_defense, "Disable the router flood limiter");

    auto* scenario = app.add_subcommand("scenario", "Scenario files");
    scenario->require_subcommand(1);
    auto* run = scenario->add_subcommand("run", "Run a scenario and write its outputs");
    run->add_option("--file", scenario_path, "Scenario file (default: bundled reference)");
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--topology", topology_path, "Topology file (default: bundled reference)");
    run->add_option("--rules", rules_path, "Firewall rule file");
    run->add_flag("--no-flood-defense", no_flood_defense, "Disable the router flood limiter");

    std::string log_path, bind_host = "0.0.0.0", banner_file, config_path;
    int port = 8080;
    int port_offset = 0;
    TimeMs deadline_ms = 10'000;
    auto* decoy = app.add_subcommand("decoy", "Serve the decoy on a real TCP port");
    decoy->add_option("--port", port, "Listen port")->check(CLI::Range(1, 65535));
    decoy->add_option("--banner-file", banner_file, "File whose contents become the banner body");
    decoy->add_option("--log", log_path, "Event log path")->required();
    decoy->add_option("--bind", bind_host, "Bind address");
    decoy->add_option("--deadline-ms", deadline_ms, "Read deadline per connection");

    auto* sensor = app.add_subcommand("sensor", "Serve the analysis sensor on real ports");
    sensor->add_option("--config", config_path, "Sensor config (key=value lines)");
    sensor->add_option("--log", log_path, "Event log path")->required();
    sensor->add_option("--bind", bind_host, "Bind address");
    sensor->add_option("--port-offset", port_offset, "Added to every monitored port");

    std::string target, origin = "sensor";
    auto* trace = app.add_subcommand("traceback", "Trace a target address in the simulated topology");
    trace->add_option("--target", target, "Target address")->required();
    trace->add_option("--origin", origin, "Origin node");
    trace->add_option("--topology", topology_path, "Topology file (default: bundled reference)");

    std::string addr = "127.0.0.1:8000", mode = "sim", journal_path, operator_token, readonly_token;
    auto* serve = app.add_subcommand("serve", "Run the operator HTTP service");
    serve->add_option("--addr", addr, "host:port");
    serve->add_option("--mode", mode, "sim or live")->check(CLI::IsMember({"sim", "live"}));
    serve->add_option("--topology", topology_path, "Topology file (default: bundled reference)");
    serve->add_option("--scenario", scenario_path, "Scenario to pre-run in sim mode (default: bundled reference)");
    serve->add_option("--log", log_path, "Event log path (live mode: required)");
    serve->add_option("--journal", journal_path, "Firewall rule journal path");
    serve->add_option("--rules", rules_path, "Initial firewall rules for an empty journal");
    serve->add_option("--operator-token", operator_token, "Bearer token with operator rights")
        ->envname("HONEYNET_OPERATOR_TOKEN");
    serve->add_option("--readonly-token", readonly_token, "Bearer token with read rights")
        ->envname("HONEYNET_READONLY_TOKEN");
    serve->add_option("--decoy-port", port, "Live mode decoy port");
    serve->add_option("--sensor-port-offset", port_offset, "Live mode sensor port offset");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim || *run) {
            auto script = load_scenario(scenario_path);
            if (seed) script.seed = *seed;
            auto result = run_scenario(script, load_topology(topology_path), load_options(rules_path, no_flood_defense));
            if (!out_dir.empty()) write_scenario_outputs(result, out_dir);
            if (*sim) print_summary(result);
            else std::cout << "wrote " << result.events.size() << " events to " << out_dir << "\n";
        } else if (*decoy) {
            block_signals();
            DecoyConfig config;
            config.listen_port = static_cast<std::uint16_t>(port);
            config.read_deadline_ms = deadline_ms;
            if (!banner_file.empty()) config.banner_text = read_file(banner_file);
            EventLog log(log_path, ClockMode::Live);
            DecoyServer server(config, log, bind_host);
            server.start();
            std::cerr << "decoy listening on " << bind_host << ":" << server.port() << "\n";
            wait_for_signal();
        } else if (*sensor) {
            block_signals();
            SensorConfig config = config_path.empty() ? SensorConfig{} : SensorConfig::parse(read_file(config_path));
            EventLog log(log_path, ClockMode::Live);
            SensorServer server(config, log, bind_host, port_offset);
            server.start();
            for (const auto& f : server.failed_ports()) std::cerr << "skipped " << f << "\n";
            for (const auto& [logical, bound] : server.tcp_ports()) {
                std::cerr << "tcp " << logical << " on " << bound << "\n";
            }
            for (const auto& [logical, bound] : server.udp_ports()) {
                std::cerr << "udp " << logical << " on " << bound << "\n";
            }
            wait_for_signal();
        } else if (*trace) {
            auto topo = load_topology(topology_path);
            auto ip = Ipv4::try_parse(target);
            if (!ip) throw ValidationError("not an IPv4 address", {target});
            std::cout << render_trace(traceroute(topo, origin, *ip));
        } else if (*serve) {
            if (operator_token.empty() && readonly_token.empty()) {
                throw ValidationError("at least one of --operator-token / --readonly-token is required",
                                      {"operator-token", "readonly-token"});
            }
            block_signals();
            auto [host, api_port] = split_addr(addr);
            auto topo = load_topology(topology_path);
            auto options = load_options(rules_path, false);

            std::unique_ptr<RuleStore> rules = journal_path.empty()
                                                   ? std::make_unique<RuleStore>(options.firewall_default)
                                                   : std::make_unique<RuleStore>(journal_path, options.firewall_default);
            if (rules->journal().empty()) {
                for (const auto& r : options.firewall_rules) rules->append_rule(r, "initial", 0);
            }

            ApiContext ctx;
            ctx.rules = rules.get();
            ctx.topology = topo;
            ctx.registry = reference_registry();
            if (const NodeInfo* s = topo.find_by_role(Role::Sensor)) ctx.traceback_origin = s->name;
            else ctx.traceback_origin = topo.nodes().front().name;
            ctx.thresholds = options.thresholds;

            std::unique_ptr<EventLog> log;
            std::unique_ptr<DecoyServer> live_decoy;
            std::unique_ptr<SensorServer> live_sensor;
            std::map<std::string, std::vector<SessionState>> sim_sessions;

            if (mode == "sim") {
                auto script = load_scenario(scenario_path);
                ctx.day_length_ms = script.day_length_ms;
                auto result = run_scenario(script, topo, options);
                log = log_path.empty() ? std::make_unique<EventLog>(ClockMode::Sim)
                                       : std::make_unique<EventLog>(log_path, ClockMode::Sim);
                if (log->size() == 0) {
                    for (const auto& e : result.events) log->append(e);
                }
                sim_sessions = result.sessions_by_device;
                ctx.sessions = [&sim_sessions] { return sim_sessions; };
                ctx.now = [] { return TimeMs{0}; };
            } else {
                if (log_path.empty()) throw ValidationError("live mode needs --log", {"log"});
                log = std::make_unique<EventLog>(log_path, ClockMode::Live);
                DecoyConfig dc;
                dc.listen_port = static_cast<std::uint16_t>(port);
                live_decoy = std::make_unique<DecoyServer>(dc, *log, host);
                live_decoy->start();
                live_sensor = std::make_unique<SensorServer>(SensorConfig{}, *log, host, port_offset);
                live_sensor->start();
                for (const auto& f : live_sensor->failed_ports()) std::cerr << "sensor skipped " << f << "\n";
                ctx.sessions = [&] {
                    std::map<std::string, std::vector<SessionState>> out;
                    out[dc.sensor_id] = live_decoy->sessions();
                    out[SensorConfig{}.sensor_id] = live_sensor->sessions();
                    return out;
                };
                ctx.now = live_now_ms;
            }
            ctx.log = log.get();

            std::vector<ApiSession> sessions;
            if (!operator_token.empty()) sessions.push_back({operator_token, ApiRole::Operator, ctx.now()});
            if (!readonly_token.empty()) sessions.push_back({readonly_token, ApiRole::ReadOnly, ctx.now()});
            ApiServer api(ctx, sessions);
            int bound = api.start(host, api_port);
            std::cerr << "serving " << mode << " mode on " << host << ":" << bound << "\n";
            wait_for_signal();
            log->close();
            api.stop();
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what();
        for (const auto& o : e.offenders()) std::cerr << "\n  " << o;
        std::cerr << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
