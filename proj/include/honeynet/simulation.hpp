#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string_view>
#include <variant>
#include <vector>

#include "honeynet/packet.hpp"
#include "honeynet/topology.hpp"

namespace honeynet {

enum class DropReason { TtlExceeded, NoRoute, AclDeny, PortFiltered, FloodLimited, PolicyDeny };

std::string_view to_string(DropReason r);

// Simulation time. Only the event loop moves it, and never backwards.
class SimClock {
public:
    TimeMs now_ms() const { return now_ms_; }
    void advance_to(TimeMs t);

private:
    TimeMs now_ms_ = 0;
};

// Empty = static hop-count shortest path. Otherwise the packet follows
// exactly these nodes, which must start at the sender and end at the
// receiver and be pairwise linked.
struct PathPolicy {
    std::vector<NodeId> explicit_route;
};

struct TranscriptEntry {
    enum class Outcome { Hop, Delivered, Dropped };

    TimeMs at_ms = 0;
    NodeId node;
    PacketId packet = 0;
    Outcome outcome = Outcome::Hop;
    std::optional<DropReason> reason;

    bool operator==(const TranscriptEntry&) const = default;
};

struct DropRecord {
    TimeMs at_ms = 0;
    NodeId node;
    PacketId packet = 0;
    DropReason reason = DropReason::NoRoute;
    TimeMs sent_at_ms = 0;
};

struct SendResult {
    PacketId id = 0;
    std::optional<DropReason> dropped;  // set when dropped before leaving the sender
};

// Deterministic discrete-event network.
//
// Packets travel hop by hop; arrival at hop k happens at send time plus the
// sum of the first k link latencies. Every arrival decrements the TTL; an
// intermediate node that sees TTL 0 drops the packet with TtlExceeded.
// Equal-time work runs in enqueue order. Node filters run on every arrival
// (transit and final); receivers run on final delivery.
class Simulation {
public:
    using Receiver = std::function<void(const PacketEnvelope&)>;
    using Filter = std::function<std::optional<DropReason>(const PacketEnvelope&, const NodeInfo& at)>;
    using DropObserver = std::function<void(const PacketEnvelope&, const DropRecord&)>;

    explicit Simulation(Topology topology);

    const Topology& topology() const { return topology_; }
    TimeMs now() const { return clock_.now_ms(); }
    const SimClock& clock() const { return clock_; }

    // Sends from the node owning packet.src.ip at the current time.
    SendResult send(PacketEnvelope packet, const PathPolicy& policy = {});
    // Runs `action` at time max(when, now()).
    void schedule(TimeMs when, std::function<void()> action);

    void on_deliver(std::string_view node, Receiver receiver);
    void set_filter(std::string_view node, Filter filter);
    void on_drop(DropObserver observer);

    // Thread-safe; queued packets are sent between event-loop steps.
    void submit(PacketEnvelope packet);

    // Processes everything scheduled. Returns the number of final deliveries.
    std::size_t run_until_idle();
    // Processes work scheduled at or before `limit`, then sets the clock to
    // `limit` if it is later.
    std::size_t run_until(TimeMs limit);

    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    const std::vector<DropRecord>& drops() const { return drops_; }
    void set_transcript_enabled(bool enabled) { transcript_enabled_ = enabled; }
    std::size_t pending() const { return queue_.size(); }

private:
    struct Arrival {
        PacketEnvelope packet;
        std::shared_ptr<const std::vector<std::size_t>> path;
        std::size_t hop = 0;
    };
    struct Timer {
        std::function<void()> action;
    };
    struct Item {
        TimeMs at = 0;
        std::uint64_t seq = 0;
        std::variant<Arrival, Timer> work;
    };
    struct Later {
        bool operator()(const Item& x, const Item& y) const {
            return x.at != y.at ? x.at > y.at : x.seq > y.seq;
        }
    };

    std::size_t run(std::optional<TimeMs> limit);
    void drain_inbox();
    bool step();  // returns true if the step was a final delivery
    void record(TimeMs at, std::size_t node, PacketId id, TranscriptEntry::Outcome outcome,
                std::optional<DropReason> reason = std::nullopt);
    void drop(const PacketEnvelope& packet, std::size_t node, DropReason reason);
    void push(TimeMs at, std::variant<Arrival, Timer> work);

    Topology topology_;
    SimClock clock_;
    std::priority_queue<Item, std::vector<Item>, Later> queue_;
    std::uint64_t next_seq_ = 0;
    PacketId next_packet_id_ = 1;
    std::vector<Receiver> receivers_;
    std::vector<Filter> filters_;
    std::vector<DropObserver> drop_observers_;
    std::vector<TranscriptEntry> transcript_;
    std::vector<DropRecord> drops_;
    bool transcript_enabled_ = true;

    std::mutex inbox_mutex_;
    std::vector<PacketEnvelope> inbox_;
};

}  // namespace honeynet
