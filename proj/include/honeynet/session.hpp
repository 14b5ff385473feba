#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "honeynet/event.hpp"

namespace honeynet {

// Per-connection state kept by the honeypots and consumed by the slowloris
// detector. Closed sessions are retained as history.
struct SessionState {
    NetEndpoint source;
    std::uint16_t dest_port = 0;
    TimeMs opened_at_ms = 0;
    TimeMs last_activity_ms = 0;
    std::uint64_t bytes_received = 0;
    bool tcp_handshake_complete = false;
    bool http_header_complete = false;
    int header_lines_received = 0;

    std::optional<TimeMs> header_completed_at_ms;
    std::optional<TimeMs> closed_at_ms;
    std::vector<EventId> event_ids;  // events this session produced, in order

    // End of the span during which the session held an incomplete HTTP header.
    TimeMs incomplete_until() const {
        if (header_completed_at_ms) return *header_completed_at_ms;
        return closed_at_ms.value_or(last_activity_ms);
    }
};

// Counts the HTTP header lines in `bytes` and reports whether the header
// block is terminated by an empty line. Lines end in "\n" (optionally "\r\n").
struct HttpHeaderScan {
    int complete_lines = 0;
    bool terminated = false;
};
HttpHeaderScan scan_http_header(std::string_view bytes);

}  // namespace honeynet
