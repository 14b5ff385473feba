#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "honeynet/packet.hpp"
#include "honeynet/simulation.hpp"
#include "honeynet/topology.hpp"

namespace honeynet {

enum class ScanStyle { Connect, Syn };

struct ConnectScan {
    std::vector<std::uint16_t> ports;
    bool operator==(const ConnectScan&) const = default;
};
struct SynScan {
    std::vector<std::uint16_t> ports;
    bool operator==(const SynScan&) const = default;
};
struct UdpFlood {
    int count = 0;
    std::uint16_t dest_port = 0;
    TimeMs interval_ms = 10;
    bool broadcast = false;  // send to 255.255.255.255, delivered to the target node
    bool operator==(const UdpFlood&) const = default;
};
struct Slowloris {
    int connections = 0;
    TimeMs header_interval_ms = 0;
    TimeMs duration_ms = 0;
    TimeMs ramp_ms = 200;  // gap between successive connection opens
    std::uint16_t dest_port = 0;  // 0 = 80 if open on the target, else 8080 if open, else its lowest open port
    bool operator==(const Slowloris&) const = default;
};
struct SingleProbe {
    std::uint16_t dest_port = 0;
    bool operator==(const SingleProbe&) const = default;
};

using StepKind = std::variant<ConnectScan, SynScan, UdpFlood, Slowloris, SingleProbe>;

struct AttackStep {
    TimeMs at_ms = 0;  // offset within the day
    StepKind kind;
    NodeId source;
    NodeId target;

    // Throws ValidationError for negative times or non-positive parameters.
    void validate() const;
    bool operator==(const AttackStep&) const = default;
};

struct ScenarioScript {
    std::uint64_t seed = 42;
    TimeMs day_length_ms = 86'400'000;
    std::vector<std::vector<AttackStep>> days;

    // Throws ValidationError listing unknown nodes and out-of-day steps.
    void validate(const Topology& topology) const;

    // Line format ('#' comments):
    //   seed <n>
    //   day_length_ms <n>
    //   day <k>                       (k = 1, 2, ... in order)
    //   step <at> <source> <target> <kind> [key=value | flag]...
    // <at> is milliseconds or HH:MM:SS[.mmm]. Kinds:
    //   probe port=P
    //   connect-scan ports=LIST       LIST = 21,22,8000-8010
    //   syn-scan ports=LIST
    //   udp-flood count=N port=P [interval=MS] [broadcast]
    //   slowloris connections=N interval=MS duration=MS [ramp=MS] [port=P]
    // Throws ParseError naming the offending key or line element.
    static ScenarioScript parse(std::string_view text);
    std::string to_text() const;

    bool operator==(const ScenarioScript&) const = default;
};

// One packet handed to the simulation by an attacker.
struct Emission {
    TimeMs at_ms = 0;
    std::uint32_t step = 0;
    Protocol protocol = Protocol::Tcp;
    TcpSegment segment = TcpSegment::None;
    NetEndpoint src;
    NetEndpoint dst;
    std::size_t bytes = 0;

    bool operator==(const Emission&) const = default;
};
std::string format_emission(const Emission& e);

struct SlowlorisStats {
    int opens = 0;       // initial connection opens
    int reconnects = 0;  // reopens after the target closed a connection
    int headers = 0;     // initial partial request lines plus periodic header lines
    int closes = 0;      // FINs at the end of the campaign
};

// Seeded packet generator for one attacker node. Everything it emits is
// scheduled on the simulation; nothing runs until the simulation does.
class Attacker {
public:
    // Registers itself as the receiver of `node` on the simulation.
    Attacker(Simulation& sim, NodeId node, std::uint64_t seed);
    Attacker(const Attacker&) = delete;
    Attacker& operator=(const Attacker&) = delete;

    // Opens `connections` sessions ramp_ms apart starting at `start`; each
    // sends SYN plus a partial request line, then one header line every
    // header_interval_ms while k * interval < duration, and FIN at open +
    // duration. A connection closed by the target (banner received) is
    // reopened on a fresh port until its duration ends. Returns a campaign
    // id for campaign_stats().
    std::size_t run_slowloris(const NodeId& target, const Slowloris& params, TimeMs start, std::uint32_t step = 0);
    // One probe per port, 100 ms apart, in seeded random order. Returns the
    // number of packets scheduled.
    std::size_t run_footprint_scan(const NodeId& target, std::vector<std::uint16_t> ports, ScanStyle style,
                                   TimeMs start, std::uint32_t step = 0);
    std::size_t run_udp_flood(const NodeId& target, const UdpFlood& params, TimeMs start, std::uint32_t step = 0);
    // One whole connection carrying a complete HTTP GET.
    std::size_t run_probe(const NodeId& target, std::uint16_t port, TimeMs start, std::uint32_t step = 0);
    // Dispatches on the variant.
    void run_step(const AttackStep& step, TimeMs day_offset, std::uint32_t step_index);

    const SlowlorisStats& campaign_stats(std::size_t campaign) const { return campaigns_.at(campaign).stats; }
    const std::vector<Emission>& emissions() const { return emissions_; }
    std::uint64_t banners_received() const { return banners_received_; }
    const NodeId& node() const { return node_; }

    static constexpr TimeMs kScanGapMs = 100;

private:
    struct Slot {
        std::size_t campaign = 0;
        std::uint16_t port = 0;
        TimeMs opened_at = 0;
        bool finished = false;
    };
    struct Campaign {
        NodeId target;
        Slowloris params;
        std::uint32_t step = 0;
        NetEndpoint dst;
        std::vector<std::size_t> slots;
        std::mt19937_64 rng;
        SlowlorisStats stats;
    };

    void emit(PacketEnvelope packet, std::uint32_t step, const NodeId* deliver_to);
    PacketEnvelope packet_to(const NodeInfo& target, std::uint16_t src_port, std::uint16_t dst_port, Protocol proto,
                             TcpSegment seg, EventKind kind, std::string payload) const;
    const NodeInfo& require_node(const NodeId& name) const;
    std::uint16_t next_port();
    std::mt19937_64 step_rng(std::uint32_t step, std::uint64_t salt) const;
    void open_slot(std::size_t slot_index, bool reconnect);
    void on_packet(const PacketEnvelope& packet);

    Simulation& sim_;
    NodeId node_;
    Ipv4 ip_;
    std::uint64_t seed_;
    std::uint16_t port_cursor_;
    std::vector<Emission> emissions_;
    std::vector<Campaign> campaigns_;
    std::vector<Slot> slots_;
    std::map<std::uint16_t, std::size_t> slot_by_port_;
    std::uint64_t banners_received_ = 0;
};

// Seeded Fisher-Yates; independent of the standard library's shuffle.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace honeynet
