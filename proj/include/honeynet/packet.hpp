#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "honeynet/event.hpp"

namespace honeynet {

using NodeId = std::string;
using PacketId = std::uint64_t;

inline constexpr int kDefaultTtl = 32;

// TCP segment role of a packet. Connect stands for a whole short-lived
// connection (handshake, optional request bytes, close) delivered as one
// action; scanners and one-shot probes are modelled this way.
enum class TcpSegment { None, Syn, Ack, Data, Fin, Rst, Connect };

std::string_view to_string(TcpSegment s);

struct PacketEnvelope {
    PacketId id = 0;  // assigned by the simulation on send
    NetEndpoint src;
    NetEndpoint dst;
    Protocol protocol = Protocol::Tcp;
    EventKind kind = EventKind::TcpConnect;
    TcpSegment segment = TcpSegment::None;
    std::string payload;
    TimeMs sent_at_ms = 0;
    std::vector<NodeId> route;  // nodes traversed so far, origin first
    int ttl = kDefaultTtl;
    // Explicit delivery node for traffic whose destination address does not
    // name a node (broadcast). Empty = resolve dst.ip in the topology.
    std::optional<NodeId> deliver_to;
    // Free-form origin tag; the attacker harness stores its step index here.
    std::uint32_t tag = 0;
};

}  // namespace honeynet
