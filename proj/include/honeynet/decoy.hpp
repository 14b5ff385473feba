#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "honeynet/event_log.hpp"
#include "honeynet/packet.hpp"
#include "honeynet/session.hpp"

namespace honeynet {

struct DecoyConfig {
    std::uint16_t listen_port = 8080;
    std::string banner_text = "Maintenance portal";
    std::string sensor_id = "honeypot1";
    TimeMs insert_delay_ms = 0;
    // A connection that has not finished its request by then gets the banner
    // and is closed.
    TimeMs read_deadline_ms = 10'000;

    // Throws ValidationError.
    void validate() const;
};

// Minimal HTTP/1.1 200 response whose body is exactly banner_text.
std::string render_banner(const DecoyConfig& config);

// True when `bytes` start with "METHOD SP target SP HTTP/x.y" and the header
// block is terminated by an empty line.
bool is_complete_http_request(std::string_view bytes);

struct DecoyExchange {
    std::string response;
    TimeMs respond_at_ms = 0;
    ThreatEvent event;  // id unset; the caller appends it
};

// Accepts any bytes, including none. The event is HttpRequestComplete for a
// complete request, TcpConnect otherwise.
DecoyExchange handle_connection(const DecoyConfig& config, const NetEndpoint& source,
                                std::string_view request_bytes, TimeMs now_ms);

// Sim-mode front decoy. Assembles TCP segments into connections and closes
// each connection exactly once: on a complete request, on FIN/RST, or at the
// read deadline. Every close logs one event and answers with the banner.
class DecoyHoneypot {
public:
    struct Reply {
        NetEndpoint to;
        std::uint16_t from_port = 0;
        std::string bytes;
        TimeMs at_ms = 0;
    };
    struct Stats {
        std::uint64_t connections = 0;
        std::uint64_t refused = 0;  // not the listen port, or not TCP
        std::uint64_t stray = 0;    // segments for no open connection
    };

    DecoyHoneypot(DecoyConfig config, EventLog& log);

    // Feeds one delivered packet. Returns the banner reply when the packet
    // closed a connection.
    std::optional<Reply> on_packet(const PacketEnvelope& packet, TimeMs now);
    // Closes connections whose read deadline has passed.
    std::vector<Reply> expire(TimeMs now);
    std::optional<TimeMs> next_deadline() const;

    const DecoyConfig& config() const { return config_; }
    const std::vector<SessionState>& sessions() const { return history_; }
    std::size_t open_connections() const { return open_.size(); }
    const Stats& stats() const { return stats_; }

private:
    struct Pending {
        SessionState session;
        std::string bytes;
    };
    Reply finish(Pending pending, TimeMs now);

    DecoyConfig config_;
    EventLog& log_;
    std::map<NetEndpoint, Pending> open_;
    std::vector<SessionState> history_;
    Stats stats_;
};

}  // namespace honeynet
