#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "honeynet/decoy.hpp"
#include "honeynet/event_log.hpp"
#include "honeynet/sensor.hpp"

namespace honeynet {

// Milliseconds since the Unix epoch.
TimeMs live_now_ms();

// Decoy on a real TCP port. A single poll loop accepts connections, feeds
// their bytes to a DecoyHoneypot and writes the banner back when the
// honeypot closes the connection (complete request, peer EOF, or the read
// deadline). Events go to `log`, which should be in Live clock mode.
class DecoyServer {
public:
    DecoyServer(DecoyConfig config, EventLog& log, std::string bind_host = "0.0.0.0");
    ~DecoyServer();
    DecoyServer(const DecoyServer&) = delete;
    DecoyServer& operator=(const DecoyServer&) = delete;

    // Binds config.listen_port (0 picks a free port). Throws IoError.
    void start();
    void stop();
    std::uint16_t port() const { return port_; }
    std::uint64_t connections_served() const { return served_.load(); }
    // Closed connections; open ones are not included.
    std::vector<SessionState> sessions() const;

private:
    void loop();

    DecoyConfig config_;
    EventLog& log_;
    std::string host_;
    int listen_fd_ = -1;
    int wake_[2] = {-1, -1};
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> served_{0};
    std::thread thread_;
    mutable std::mutex mutex_;  // guards honeypot_
    std::unique_ptr<DecoyHoneypot> honeypot_;
};

// Sensor on real sockets: one TCP listener per monitored TCP port and one
// UDP socket per monitored UDP port, all shifted by port_offset so the
// sensor can run unprivileged. Ports that fail to bind are skipped and
// reported by failed_ports(). UDP datagrams addressed to a broadcast
// address are logged as UdpBroadcast.
class SensorServer {
public:
    SensorServer(SensorConfig config, EventLog& log, std::string bind_host = "0.0.0.0", int port_offset = 0);
    ~SensorServer();
    SensorServer(const SensorServer&) = delete;
    SensorServer& operator=(const SensorServer&) = delete;

    // Throws IoError when no port at all could be bound.
    void start();
    void stop();
    // Logical port -> bound port.
    const std::map<std::uint16_t, std::uint16_t>& tcp_ports() const { return tcp_bound_; }
    const std::map<std::uint16_t, std::uint16_t>& udp_ports() const { return udp_bound_; }
    const std::vector<std::string>& failed_ports() const { return failed_; }
    std::vector<SessionState> sessions() const;

private:
    void loop();

    mutable std::mutex mutex_;  // guards sensor_
    SensorHoneypot sensor_;
    std::string host_;
    int port_offset_;
    std::map<int, std::uint16_t> tcp_listeners_;  // fd -> logical port
    std::map<int, std::uint16_t> udp_sockets_;    // fd -> logical port
    std::map<std::uint16_t, std::uint16_t> tcp_bound_;
    std::map<std::uint16_t, std::uint16_t> udp_bound_;
    std::vector<std::string> failed_;
    int wake_[2] = {-1, -1};
    std::atomic<bool> running_{false};
    std::thread thread_;
};

}  // namespace honeynet
