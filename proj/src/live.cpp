#include "honeynet/live.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <set>

#include "honeynet/error.hpp"

namespace honeynet {
namespace {

constexpr std::size_t kReadChunk = 4096;
constexpr int kMaxPollWaitMs = 100;

std::string errno_text() { return std::strerror(errno); }

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw IoError("bad bind address '" + host + "'");
    return addr;
}

NetEndpoint endpoint_of(const sockaddr_in& addr) {
    return NetEndpoint{Ipv4(ntohl(addr.sin_addr.s_addr)), ntohs(addr.sin_port)};
}

// Returns the fd and the port actually bound.
std::pair<int, std::uint16_t> open_socket(const std::string& host, std::uint16_t port, int type) {
    int fd = ::socket(AF_INET, type | SOCK_CLOEXEC, 0);
    if (fd < 0) throw IoError("socket: " + errno_text());
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (type == SOCK_DGRAM) {
        ::setsockopt(fd, IPPROTO_IP, IP_PKTINFO, &one, sizeof one);
        ::setsockopt(fd, SOL_SOCKET, SO_BROADCAST, &one, sizeof one);
    }
    auto addr = make_addr(host, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        (type == SOCK_STREAM && ::listen(fd, 64) != 0)) {
        std::string why = errno_text();
        ::close(fd);
        throw IoError("bind " + host + ":" + std::to_string(port) + ": " + why);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    return {fd, ntohs(bound.sin_port)};
}

void make_wake_pipe(int (&fds)[2]) {
    if (::pipe2(fds, O_CLOEXEC | O_NONBLOCK) != 0) throw IoError("pipe: " + errno_text());
}

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

void send_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        auto n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            return;
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

PacketEnvelope tcp_packet(const NetEndpoint& peer, std::uint16_t local_port, TcpSegment seg, std::string payload = {}) {
    PacketEnvelope p;
    p.src = peer;
    p.dst = NetEndpoint{Ipv4{}, local_port};
    p.protocol = Protocol::Tcp;
    p.segment = seg;
    p.payload = std::move(payload);
    return p;
}

bool is_broadcast(Ipv4 dst) { return dst == Ipv4::broadcast() || (dst.value() & 0xFFu) == 0xFFu; }

}  // namespace

TimeMs live_now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

DecoyServer::DecoyServer(DecoyConfig config, EventLog& log, std::string bind_host)
    : config_(std::move(config)), log_(log), host_(std::move(bind_host)) {
    DecoyConfig check = config_;
    if (check.listen_port == 0) check.listen_port = 1;
    check.validate();
}

DecoyServer::~DecoyServer() { stop(); }

void DecoyServer::start() {
    if (running_) return;
    auto [fd, port] = open_socket(host_, config_.listen_port, SOCK_STREAM);
    listen_fd_ = fd;
    port_ = port;
    DecoyConfig logical = config_;
    logical.listen_port = port_;
    honeypot_ = std::make_unique<DecoyHoneypot>(logical, log_);
    make_wake_pipe(wake_);
    running_ = true;
    thread_ = std::thread([this] { loop(); });
}

void DecoyServer::stop() {
    if (!running_.exchange(false)) return;
    char c = 0;
    [[maybe_unused]] auto n = ::write(wake_[1], &c, 1);
    thread_.join();
    close_fd(listen_fd_);
    close_fd(wake_[0]);
    close_fd(wake_[1]);
}

void DecoyServer::loop() {
    auto& honeypot = *honeypot_;
    std::map<int, NetEndpoint> conns;
    std::map<NetEndpoint, int> by_peer;

    auto deliver = [&](const std::vector<DecoyHoneypot::Reply>& replies) {
        for (const auto& r : replies) {
            auto it = by_peer.find(r.to);
            if (it == by_peer.end()) continue;
            send_all(it->second, r.bytes);
            ::shutdown(it->second, SHUT_WR);
            ::close(it->second);
            conns.erase(it->second);
            by_peer.erase(it);
            ++served_;
        }
    };

    auto next_deadline = [&] {
        std::lock_guard lock(mutex_);
        return honeypot.next_deadline();
    };

    while (running_) {
        std::vector<pollfd> fds{{wake_[0], POLLIN, 0}, {listen_fd_, POLLIN, 0}};
        for (const auto& [fd, _] : conns) fds.push_back({fd, POLLIN, 0});
        int wait = kMaxPollWaitMs;
        if (auto due = next_deadline()) {
            wait = static_cast<int>(std::clamp<TimeMs>(*due - live_now_ms(), 0, kMaxPollWaitMs));
        }
        if (::poll(fds.data(), fds.size(), wait) < 0 && errno != EINTR) break;
        if (fds[0].revents) break;
        std::lock_guard lock(mutex_);

        if (fds[1].revents & POLLIN) {
            sockaddr_in peer{};
            socklen_t len = sizeof peer;
            int fd = ::accept4(listen_fd_, reinterpret_cast<sockaddr*>(&peer), &len, SOCK_CLOEXEC);
            if (fd >= 0) {
                auto ep = endpoint_of(peer);
                conns[fd] = ep;
                by_peer[ep] = fd;
                honeypot.on_packet(tcp_packet(ep, port_, TcpSegment::Syn), live_now_ms());
            }
        }
        for (std::size_t i = 2; i < fds.size(); ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            auto it = conns.find(fds[i].fd);
            if (it == conns.end()) continue;
            NetEndpoint peer = it->second;
            char buf[kReadChunk];
            auto n = ::recv(fds[i].fd, buf, sizeof buf, 0);
            if (n < 0 && errno == EINTR) continue;
            auto seg = n > 0 ? TcpSegment::Data : TcpSegment::Fin;
            auto packet = tcp_packet(peer, port_, seg, n > 0 ? std::string(buf, static_cast<std::size_t>(n)) : "");
            if (auto reply = honeypot.on_packet(packet, live_now_ms())) {
                deliver({*reply});
            } else if (n <= 0) {
                ::close(fds[i].fd);
                by_peer.erase(peer);
                conns.erase(fds[i].fd);
            }
        }
        deliver(honeypot.expire(live_now_ms()));
    }
    for (auto& [fd, _] : conns) ::close(fd);
}

std::vector<SessionState> DecoyServer::sessions() const {
    std::lock_guard lock(mutex_);
    return honeypot_ ? honeypot_->sessions() : std::vector<SessionState>{};
}

SensorServer::SensorServer(SensorConfig config, EventLog& log, std::string bind_host, int port_offset)
    : sensor_(std::move(config), log), host_(std::move(bind_host)), port_offset_(port_offset) {}

SensorServer::~SensorServer() { stop(); }

void SensorServer::start() {
    if (running_) return;
    auto bind_all = [&](const std::set<std::uint16_t>& ports, int type, std::map<int, std::uint16_t>& fds,
                        std::map<std::uint16_t, std::uint16_t>& bound, const char* proto) {
        for (auto logical : ports) {
            int actual = logical + port_offset_;
            if (actual <= 0 || actual > 65535) {
                failed_.push_back(std::string(proto) + "/" + std::to_string(logical) + ": offset out of range");
                continue;
            }
            try {
                auto [fd, port] = open_socket(host_, static_cast<std::uint16_t>(actual), type);
                fds[fd] = logical;
                bound[logical] = port;
            } catch (const IoError& e) {
                failed_.push_back(std::string(proto) + "/" + std::to_string(logical) + ": " + e.what());
            }
        }
    };
    bind_all(sensor_.config().monitored_tcp_ports, SOCK_STREAM, tcp_listeners_, tcp_bound_, "tcp");
    bind_all(sensor_.config().monitored_udp_ports, SOCK_DGRAM, udp_sockets_, udp_bound_, "udp");
    if (tcp_listeners_.empty() && udp_sockets_.empty()) throw IoError("sensor could not bind any port");
    make_wake_pipe(wake_);
    running_ = true;
    thread_ = std::thread([this] { loop(); });
}

void SensorServer::stop() {
    if (!running_.exchange(false)) return;
    char c = 0;
    [[maybe_unused]] auto n = ::write(wake_[1], &c, 1);
    thread_.join();
    for (auto& m : {&tcp_listeners_, &udp_sockets_}) {
        for (auto [fd, _] : *m) ::close(fd);
        m->clear();
    }
    close_fd(wake_[0]);
    close_fd(wake_[1]);
}

std::vector<SessionState> SensorServer::sessions() const {
    std::lock_guard lock(mutex_);
    return sensor_.sessions();
}

void SensorServer::loop() {
    struct Conn {
        NetEndpoint peer;
        std::uint16_t port;
    };
    std::map<int, Conn> conns;

    while (running_) {
        std::vector<pollfd> fds{{wake_[0], POLLIN, 0}};
        for (const auto& [fd, _] : tcp_listeners_) fds.push_back({fd, POLLIN, 0});
        for (const auto& [fd, _] : udp_sockets_) fds.push_back({fd, POLLIN, 0});
        for (const auto& [fd, _] : conns) fds.push_back({fd, POLLIN, 0});
        if (::poll(fds.data(), fds.size(), kMaxPollWaitMs) < 0 && errno != EINTR) break;
        if (fds[0].revents) break;
        std::lock_guard lock(mutex_);

        for (std::size_t i = 1; i < fds.size(); ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            int fd = fds[i].fd;
            if (auto l = tcp_listeners_.find(fd); l != tcp_listeners_.end()) {
                sockaddr_in peer{};
                socklen_t len = sizeof peer;
                int c = ::accept4(fd, reinterpret_cast<sockaddr*>(&peer), &len, SOCK_CLOEXEC);
                if (c < 0) continue;
                Conn conn{endpoint_of(peer), l->second};
                conns[c] = conn;
                TimeMs now = live_now_ms();
                sensor_.ingest(tcp_packet(conn.peer, conn.port, TcpSegment::Syn), now);
                sensor_.ingest(tcp_packet(conn.peer, conn.port, TcpSegment::Ack), now);
            } else if (auto u = udp_sockets_.find(fd); u != udp_sockets_.end()) {
                char buf[kReadChunk];
                char control[CMSG_SPACE(sizeof(in_pktinfo))];
                sockaddr_in peer{};
                iovec iov{buf, sizeof buf};
                msghdr msg{};
                msg.msg_name = &peer;
                msg.msg_namelen = sizeof peer;
                msg.msg_iov = &iov;
                msg.msg_iovlen = 1;
                msg.msg_control = control;
                msg.msg_controllen = sizeof control;
                auto n = ::recvmsg(fd, &msg, 0);
                if (n < 0) continue;
                std::optional<Ipv4> dst;
                for (cmsghdr* c = CMSG_FIRSTHDR(&msg); c; c = CMSG_NXTHDR(&msg, c)) {
                    if (c->cmsg_level == IPPROTO_IP && c->cmsg_type == IP_PKTINFO) {
                        in_pktinfo info{};
                        std::memcpy(&info, CMSG_DATA(c), sizeof info);
                        dst = Ipv4(ntohl(info.ipi_addr.s_addr));
                    }
                }
                PacketEnvelope p;
                p.src = endpoint_of(peer);
                p.dst = NetEndpoint{dst.value_or(Ipv4{}), u->second};
                p.protocol = Protocol::Udp;
                p.kind = dst && is_broadcast(*dst) ? EventKind::UdpBroadcast : EventKind::UdpDatagram;
                p.payload.assign(buf, static_cast<std::size_t>(n));
                sensor_.ingest(p, live_now_ms());
            } else if (auto c = conns.find(fd); c != conns.end()) {
                char buf[kReadChunk];
                auto n = ::recv(fd, buf, sizeof buf, 0);
                if (n < 0 && errno == EINTR) continue;
                if (n > 0) {
                    sensor_.ingest(tcp_packet(c->second.peer, c->second.port, TcpSegment::Data,
                                              std::string(buf, static_cast<std::size_t>(n))),
                                   live_now_ms());
                } else {
                    sensor_.ingest(tcp_packet(c->second.peer, c->second.port, TcpSegment::Fin), live_now_ms());
                    ::close(fd);
                    conns.erase(c);
                }
            }
        }
        sensor_.expire_sessions(live_now_ms());
    }
    for (auto& [fd, _] : conns) ::close(fd);
}

}  // namespace honeynet
