#include "stunflow/ip.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <cstring>

namespace stunflow {

std::optional<IpAddr> IpAddr::parse(std::string_view text) {
    std::string buf(text);
    IpAddr out;
    if (buf.find(':') != std::string::npos) {
        std::uint8_t raw[16];
        if (inet_pton(AF_INET6, buf.c_str(), raw) != 1) return std::nullopt;
        out.kind = IpKind::v6;
        std::copy(raw, raw + 16, out.bytes.begin());
    } else {
        std::uint8_t raw[4];
        if (inet_pton(AF_INET, buf.c_str(), raw) != 1) return std::nullopt;
        out.kind = IpKind::v4;
        std::copy(raw, raw + 4, out.bytes.begin());
    }
    return out;
}

IpAddr IpAddr::from_v4(std::span<const std::uint8_t> b) {
    IpAddr out;
    out.kind = IpKind::v4;
    std::copy(b.begin(), b.begin() + 4, out.bytes.begin());
    return out;
}

IpAddr IpAddr::from_v6(std::span<const std::uint8_t> b) {
    IpAddr out;
    out.kind = IpKind::v6;
    std::copy(b.begin(), b.begin() + 16, out.bytes.begin());
    return out;
}

std::string IpAddr::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    if (kind == IpKind::v4) {
        inet_ntop(AF_INET, bytes.data(), buf, sizeof(buf));
    } else {
        inet_ntop(AF_INET6, bytes.data(), buf, sizeof(buf));
    }
    return buf;
}

std::optional<Endpoint> Endpoint::parse(std::string_view text) {
    std::string_view host;
    std::string_view port_part;
    if (!text.empty() && text.front() == '[') {
        auto close = text.find(']');
        if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':')
            return std::nullopt;
        host = text.substr(1, close - 1);
        port_part = text.substr(close + 2);
    } else {
        auto colon = text.rfind(':');
        if (colon == std::string_view::npos) return std::nullopt;
        host = text.substr(0, colon);
        port_part = text.substr(colon + 1);
    }
    auto ip = IpAddr::parse(host);
    if (!ip) return std::nullopt;
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(port_part.data(), port_part.data() + port_part.size(), port);
    if (ec != std::errc{} || ptr != port_part.data() + port_part.size() || port > 65535)
        return std::nullopt;
    return Endpoint{*ip, static_cast<std::uint16_t>(port)};
}

std::string Endpoint::to_string() const {
    if (ip.kind == IpKind::v6) return "[" + ip.to_string() + "]:" + std::to_string(port);
    return ip.to_string() + ":" + std::to_string(port);
}

std::optional<CidrBlock> CidrBlock::parse(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto ip = IpAddr::parse(text.substr(0, slash));
    if (!ip) return std::nullopt;
    auto prefix_part = text.substr(slash + 1);
    int prefix = -1;
    auto [ptr, ec] = std::from_chars(prefix_part.data(), prefix_part.data() + prefix_part.size(), prefix);
    if (ec != std::errc{} || ptr != prefix_part.data() + prefix_part.size()) return std::nullopt;
    int max_prefix = ip->kind == IpKind::v4 ? 32 : 128;
    if (prefix < 0 || prefix > max_prefix) return std::nullopt;

    // Zero the host bits so the stored base matches the mask.
    CidrBlock out{*ip, prefix};
    std::size_t n = ip->addr_len();
    for (std::size_t i = 0; i < n; ++i) {
        int bits = prefix - static_cast<int>(i) * 8;
        std::uint8_t mask = bits >= 8 ? 0xff : bits <= 0 ? 0 : static_cast<std::uint8_t>(0xff << (8 - bits));
        out.base.bytes[i] &= mask;
    }
    return out;
}

bool CidrBlock::contains(const IpAddr& addr) const {
    if (addr.kind != base.kind) return false;
    int full = prefix_len / 8;
    for (int i = 0; i < full; ++i) {
        if (addr.bytes[i] != base.bytes[i]) return false;
    }
    int rem = prefix_len % 8;
    if (rem != 0) {
        std::uint8_t mask = static_cast<std::uint8_t>(0xff << (8 - rem));
        if ((addr.bytes[full] & mask) != base.bytes[full]) return false;
    }
    return true;
}

std::string CidrBlock::to_string() const {
    return base.to_string() + "/" + std::to_string(prefix_len);
}

}  // namespace stunflow
