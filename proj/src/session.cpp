#include "honeynet/packet.hpp"
#include "honeynet/session.hpp"

namespace honeynet {

std::string_view to_string(TcpSegment s) {
    switch (s) {
        case TcpSegment::None: return "none";
        case TcpSegment::Syn: return "syn";
        case TcpSegment::Ack: return "ack";
        case TcpSegment::Data: return "data";
        case TcpSegment::Fin: return "fin";
        case TcpSegment::Rst: return "rst";
        case TcpSegment::Connect: return "connect";
    }
    return "?";
}

HttpHeaderScan scan_http_header(std::string_view bytes) {
    HttpHeaderScan scan;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        auto nl = bytes.find('\n', pos);
        if (nl == std::string_view::npos) break;
        auto line = bytes.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl + 1;
        if (line.empty()) {
            // Stray CRLFs before the request line are tolerated.
            if (scan.complete_lines > 0) {
                scan.terminated = true;
                break;
            }
            continue;
        }
        ++scan.complete_lines;
    }
    return scan;
}

}  // namespace honeynet
