#include "honeynet/decoy.hpp"

#include <algorithm>

#include "honeynet/error.hpp"

namespace honeynet {
namespace {

constexpr std::size_t kMaxBufferedRequest = 16 * 1024;

bool is_token_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
}

bool valid_request_line(std::string_view line) {
    auto sp1 = line.find(' ');
    if (sp1 == std::string_view::npos || sp1 == 0) return false;
    auto method = line.substr(0, sp1);
    if (!std::all_of(method.begin(), method.end(), is_token_char)) return false;
    auto sp2 = line.find(' ', sp1 + 1);
    if (sp2 == std::string_view::npos || sp2 == sp1 + 1) return false;
    auto version = line.substr(sp2 + 1);
    return version.size() == 8 && version.substr(0, 5) == "HTTP/" && version[5] >= '0' && version[5] <= '9' &&
           version[6] == '.' && version[7] >= '0' && version[7] <= '9';
}

std::string describe(std::string_view request, bool complete) {
    if (request.empty()) return "connect without request";
    if (!complete) return "incomplete request (" + std::to_string(request.size()) + " bytes)";
    auto eol = request.find_first_of("\r\n");
    return std::string(request.substr(0, eol));
}

}  // namespace

void DecoyConfig::validate() const {
    std::vector<std::string> offenders;
    if (listen_port == 0) offenders.push_back("listen_port");
    if (banner_text.empty()) offenders.push_back("banner_text");
    if (sensor_id.empty()) offenders.push_back("sensor_id");
    if (insert_delay_ms < 0) offenders.push_back("insert_delay_ms");
    if (read_deadline_ms <= 0) offenders.push_back("read_deadline_ms");
    if (!offenders.empty()) throw ValidationError("invalid decoy config", offenders);
}

std::string render_banner(const DecoyConfig& config) {
    std::string out;
    out += "HTTP/1.1 200 OK\r\n";
    out += "Server: Apache/2.4.41 (Ubuntu)\r\n";
    out += "Content-Type: text/html; charset=utf-8\r\n";
    out += "Content-Length: " + std::to_string(config.banner_text.size()) + "\r\n";
    out += "Connection: close\r\n";
    out += "\r\n";
    out += config.banner_text;
    return out;
}

bool is_complete_http_request(std::string_view bytes) {
    auto eol = bytes.find('\n');
    if (eol == std::string_view::npos) return false;
    auto line = bytes.substr(0, eol);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!valid_request_line(line)) return false;
    return scan_http_header(bytes).terminated;
}

DecoyExchange handle_connection(const DecoyConfig& config, const NetEndpoint& source,
                                std::string_view request_bytes, TimeMs now_ms) {
    bool complete = is_complete_http_request(request_bytes);
    DecoyExchange ex;
    ex.response = render_banner(config);
    ex.respond_at_ms = now_ms + config.insert_delay_ms;
    ex.event.timestamp_ms = now_ms;
    ex.event.sensor_id = config.sensor_id;
    ex.event.source = source;
    ex.event.dest_port = config.listen_port;
    ex.event.protocol = Protocol::Tcp;
    ex.event.kind = complete ? EventKind::HttpRequestComplete : EventKind::TcpConnect;
    ex.event.severity = assign_severity(ex.event.kind);
    ex.event.payload_prefix = payload_prefix_of(request_bytes);
    ex.event.description = describe(request_bytes, complete);
    return ex;
}

DecoyHoneypot::DecoyHoneypot(DecoyConfig config, EventLog& log) : config_(std::move(config)), log_(log) {
    config_.validate();
}

DecoyHoneypot::Reply DecoyHoneypot::finish(Pending pending, TimeMs now) {
    auto ex = handle_connection(config_, pending.session.source, pending.bytes, now);
    auto& s = pending.session;
    s.http_header_complete = ex.event.kind == EventKind::HttpRequestComplete;
    if (s.http_header_complete) s.header_completed_at_ms = now;
    s.closed_at_ms = now;
    s.last_activity_ms = std::max(s.last_activity_ms, now);
    s.event_ids.push_back(log_.append(ex.event));
    const NetEndpoint peer = s.source;
    history_.push_back(std::move(s));
    ++stats_.connections;
    return Reply{peer, config_.listen_port, std::move(ex.response), ex.respond_at_ms};
}

std::optional<DecoyHoneypot::Reply> DecoyHoneypot::on_packet(const PacketEnvelope& packet, TimeMs now) {
    if (packet.protocol != Protocol::Tcp || packet.dst.port != config_.listen_port) {
        ++stats_.refused;
        return std::nullopt;
    }
    const NetEndpoint key = packet.src;
    auto it = open_.find(key);

    auto fresh = [&] {
        Pending p;
        p.session.source = packet.src;
        p.session.dest_port = packet.dst.port;
        p.session.opened_at_ms = now;
        p.session.last_activity_ms = now;
        p.session.tcp_handshake_complete = true;
        return p;
    };
    auto absorb = [&](Pending& p) {
        p.session.last_activity_ms = now;
        p.session.bytes_received += packet.payload.size();
        if (p.bytes.size() < kMaxBufferedRequest) {
            p.bytes.append(packet.payload.substr(0, kMaxBufferedRequest - p.bytes.size()));
        }
        p.session.header_lines_received = scan_http_header(p.bytes).complete_lines;
    };

    switch (packet.segment) {
        case TcpSegment::Connect: {
            if (it != open_.end()) {
                auto pending = std::move(it->second);
                open_.erase(it);
                finish(std::move(pending), now);
            }
            Pending p = fresh();
            absorb(p);
            return finish(std::move(p), now);
        }
        case TcpSegment::Syn:
            if (it == open_.end()) open_.emplace(key, fresh());
            return std::nullopt;
        case TcpSegment::Ack:
            if (it == open_.end()) ++stats_.stray;
            else it->second.session.last_activity_ms = now;
            return std::nullopt;
        case TcpSegment::Data: {
            if (it == open_.end()) {
                ++stats_.stray;
                return std::nullopt;
            }
            absorb(it->second);
            if (!is_complete_http_request(it->second.bytes)) return std::nullopt;
            auto pending = std::move(it->second);
            open_.erase(it);
            return finish(std::move(pending), now);
        }
        case TcpSegment::Fin:
        case TcpSegment::Rst: {
            if (it == open_.end()) {
                ++stats_.stray;
                return std::nullopt;
            }
            auto pending = std::move(it->second);
            open_.erase(it);
            return finish(std::move(pending), now);
        }
        case TcpSegment::None:
            ++stats_.refused;
            return std::nullopt;
    }
    return std::nullopt;
}

std::vector<DecoyHoneypot::Reply> DecoyHoneypot::expire(TimeMs now) {
    std::vector<Pending> due;
    for (auto it = open_.begin(); it != open_.end();) {
        if (it->second.session.opened_at_ms + config_.read_deadline_ms <= now) {
            due.push_back(std::move(it->second));
            it = open_.erase(it);
        } else {
            ++it;
        }
    }
    // Close in open order so event ids follow connection age.
    std::stable_sort(due.begin(), due.end(), [](const Pending& a, const Pending& b) {
        return a.session.opened_at_ms < b.session.opened_at_ms;
    });
    std::vector<Reply> replies;
    for (auto& p : due) replies.push_back(finish(std::move(p), now));
    return replies;
}

std::optional<TimeMs> DecoyHoneypot::next_deadline() const {
    std::optional<TimeMs> best;
    for (const auto& [_, p] : open_) {
        auto d = p.session.opened_at_ms + config_.read_deadline_ms;
        if (!best || d < *best) best = d;
    }
    return best;
}

}  // namespace honeynet
