#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace honeynet {

// IPv4 address in host byte order.
class Ipv4 {
public:
    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t host_order) : value_(host_order) {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

    // Strict dotted quad: exactly four decimal octets 0-255, no leading '+', no spaces.
    static std::optional<Ipv4> try_parse(std::string_view text);
    // Throws ValidationError on malformed input.
    static Ipv4 parse(std::string_view text);

    static constexpr Ipv4 broadcast() { return Ipv4{0xffffffffu}; }

    constexpr std::uint32_t value() const { return value_; }
    std::string to_string() const;

    constexpr auto operator<=>(const Ipv4&) const = default;

private:
    std::uint32_t value_ = 0;
};

struct NetEndpoint {
    Ipv4 ip;
    std::uint16_t port = 0;  // 0 = not applicable (ICMP)

    std::string to_string() const;
    auto operator<=>(const NetEndpoint&) const = default;
};

// IPv4 prefix such as 10.0.0.0/8. Host bits are masked off on construction.
class Cidr {
public:
    Cidr() = default;
    Cidr(Ipv4 network, int prefix_len);

    static Cidr parse(std::string_view text);  // accepts "any" for 0.0.0.0/0
    static Cidr any() { return Cidr{}; }

    bool contains(Ipv4 ip) const { return (ip.value() & mask_) == network_.value(); }

    Ipv4 network() const { return network_; }
    int prefix_len() const { return prefix_len_; }
    std::string to_string() const;

    bool operator==(const Cidr&) const = default;

private:
    Ipv4 network_;
    int prefix_len_ = 0;
    std::uint32_t mask_ = 0;
};

}  // namespace honeynet
