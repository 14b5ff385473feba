#include "honeynet/ipv4.hpp"

#include <charconv>

#include "honeynet/error.hpp"

namespace honeynet {

std::optional<Ipv4> Ipv4::try_parse(std::string_view text) {
    std::uint32_t value = 0;
    std::size_t pos = 0;
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (pos >= text.size() || text[pos] != '.') return std::nullopt;
            ++pos;
        }
        std::size_t start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        std::size_t len = pos - start;
        if (len == 0 || len > 3) return std::nullopt;
        unsigned part = 0;
        std::from_chars(text.data() + start, text.data() + pos, part);
        if (part > 255) return std::nullopt;
        value = (value << 8) | part;
    }
    if (pos != text.size()) return std::nullopt;
    return Ipv4{value};
}

Ipv4 Ipv4::parse(std::string_view text) {
    if (auto ip = try_parse(text)) return *ip;
    throw ValidationError("malformed IPv4 address '" + std::string(text) + "'", {std::string(text)});
}

std::string Ipv4::to_string() const {
    return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xff) + '.' +
           std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
}

std::string NetEndpoint::to_string() const {
    return ip.to_string() + ':' + std::to_string(port);
}

Cidr::Cidr(Ipv4 network, int prefix_len) : prefix_len_(prefix_len) {
    if (prefix_len < 0 || prefix_len > 32) {
        throw ValidationError("CIDR prefix length out of range: " + std::to_string(prefix_len));
    }
    mask_ = prefix_len == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_len);
    network_ = Ipv4{network.value() & mask_};
}

Cidr Cidr::parse(std::string_view text) {
    if (text == "any") return any();
    auto slash = text.find('/');
    std::string_view addr = text.substr(0, slash);
    auto ip = Ipv4::try_parse(addr);
    if (!ip) throw ValidationError("malformed CIDR '" + std::string(text) + "'", {std::string(text)});
    if (slash == std::string_view::npos) return Cidr{*ip, 32};

    std::string_view len_text = text.substr(slash + 1);
    int len = -1;
    auto [end, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
    if (ec != std::errc{} || end != len_text.data() + len_text.size() || len_text.empty() || len < 0 ||
        len > 32) {
        throw ValidationError("malformed CIDR prefix length in '" + std::string(text) + "'",
                              {std::string(text)});
    }
    return Cidr{*ip, len};
}

std::string Cidr::to_string() const {
    return network_.to_string() + '/' + std::to_string(prefix_len_);
}

}  // namespace honeynet
