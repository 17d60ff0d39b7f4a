#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace stunflow {

enum class IpKind : std::uint8_t { v4, v6 };

struct IpAddr {
    IpKind kind{IpKind::v4};
    std::array<std::uint8_t, 16> bytes{};  // v4 uses bytes[0..3]

    static std::optional<IpAddr> parse(std::string_view text);
    static IpAddr from_v4(std::span<const std::uint8_t> b);   // 4 bytes
    static IpAddr from_v6(std::span<const std::uint8_t> b);   // 16 bytes

    std::size_t addr_len() const { return kind == IpKind::v4 ? 4 : 16; }
    std::string to_string() const;

    auto operator<=>(const IpAddr&) const = default;
};

struct Endpoint {
    IpAddr ip;
    std::uint16_t port = 0;

    static std::optional<Endpoint> parse(std::string_view text);  // "1.2.3.4:80" or "[::1]:80"
    std::string to_string() const;

    auto operator<=>(const Endpoint&) const = default;
};

/// CIDR block with the base pre-masked: parse("192.168.1.0/16") stores 192.168.0.0/16.
struct CidrBlock {
    IpAddr base;
    int prefix_len = 0;

    static std::optional<CidrBlock> parse(std::string_view text);
    bool contains(const IpAddr& addr) const;
    std::string to_string() const;

    auto operator<=>(const CidrBlock&) const = default;
};

}  // namespace stunflow
