#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "honeynet/event_log.hpp"
#include "honeynet/packet.hpp"
#include "honeynet/session.hpp"

namespace honeynet {

struct SensorConfig {
    std::set<std::uint16_t> monitored_tcp_ports{21, 22, 23, 25, 80, 443, 445, 3389, 8080};
    std::set<std::uint16_t> monitored_udp_ports{53, 123, 161};
    std::string sensor_id = "honeypot2";
    TimeMs session_idle_timeout_ms = 30'000;

    void validate() const;

    // key=value lines: tcp_ports=21,22  udp_ports=53  sensor_id=x  session_idle_timeout_ms=30000
    static SensorConfig parse(std::string_view text);
};

// The analysis honeypot. Tracks TCP sessions per (source, dest port) and
// turns deliveries on monitored ports into threat events:
//
//   SYN                      -> TcpSyn, session opened
//   ACK                      -> handshake marked (no event)
//   first data segment       -> HttpRequestComplete or HttpRequestPartial
//   later data segments      -> HttpRequestComplete when the header ends, else header bookkeeping
//   FIN/RST or idle expiry   -> TcpSynIncomplete if the handshake never finished, else close
//   whole-connection action  -> TcpConnect or HttpRequestComplete
//   UDP datagram             -> UdpDatagram / UdpBroadcast
//   ICMP echo                -> IcmpEcho
//
// Not thread-safe; live listeners serialize access.
class SensorHoneypot {
public:
    struct Stats {
        std::uint64_t deliveries = 0;   // packets on monitored ports (plus ICMP)
        std::uint64_t events = 0;       // packets that produced an event
        std::uint64_t transitions = 0;  // packets that only changed session state
        std::uint64_t stray = 0;        // segments for no known session
        std::uint64_t unmonitored = 0;  // packets to ports nobody listens on
    };

    SensorHoneypot(SensorConfig config, EventLog& log);

    // Returns the events appended to the log for this packet.
    std::vector<ThreatEvent> ingest(const PacketEnvelope& packet, TimeMs now);
    // Closes sessions idle for longer than the timeout; half-open ones yield
    // TcpSynIncomplete.
    std::vector<ThreatEvent> expire_sessions(TimeMs now);
    // Earliest time at which expire_sessions() would close something.
    std::optional<TimeMs> next_expiry() const;

    // Closed sessions followed by the ones still open.
    std::vector<SessionState> sessions() const;
    std::size_t open_sessions() const { return open_.size(); }
    const SensorConfig& config() const { return config_; }
    const Stats& stats() const { return stats_; }

private:
    using Key = std::tuple<std::uint32_t, std::uint16_t, std::uint16_t>;  // src ip, src port, dst port
    struct Live {
        SessionState session;
        std::string header;  // buffered request bytes, capped
    };

    ThreatEvent make_event(const NetEndpoint& src, std::uint16_t dst_port, EventKind kind, TimeMs now,
                           std::string_view payload, std::string description) const;
    ThreatEvent emit(ThreatEvent event, SessionState* session);
    void close(std::map<Key, Live>::iterator it, TimeMs now, std::vector<ThreatEvent>& out);
    void absorb_data(Live& live, const PacketEnvelope& packet, TimeMs now, std::vector<ThreatEvent>& out);

    SensorConfig config_;
    EventLog& log_;
    std::map<Key, Live> open_;
    std::vector<SessionState> history_;
    Stats stats_;
};

}  // namespace honeynet
