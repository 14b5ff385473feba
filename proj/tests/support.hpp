#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "honeynet/event.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("honeynet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string random_bytes(std::mt19937_64& rng, std::size_t max_len) {
    std::string s(rng() % (max_len + 1), '\0');
    for (auto& c : s) c = static_cast<char>(rng() % 256);
    return s;
}

inline honeynet::ThreatEvent random_event(std::mt19937_64& rng, honeynet::EventId id, honeynet::TimeMs ts) {
    using namespace honeynet;
    ThreatEvent e;
    e.id = id;
    e.timestamp_ms = ts;
    static const char* const kSensors[] = {"honeypot1", "honeypot2", "firewall", "sensor with space", "x\ty"};
    e.sensor_id = kSensors[rng() % 5];
    e.source = NetEndpoint{Ipv4(static_cast<std::uint32_t>(rng())), static_cast<std::uint16_t>(rng())};
    e.dest_port = static_cast<std::uint16_t>(rng());
    e.kind = static_cast<EventKind>(rng() % 8);
    e.protocol = protocol_of(e.kind);
    e.severity = static_cast<Severity>(rng() % 3);
    e.payload_prefix = random_bytes(rng, kPayloadPrefixCap);
    e.description = random_bytes(rng, 80);
    return e;
}

}  // namespace testing
