#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stunflow/capture.hpp"
#include "stunflow/ip.hpp"

namespace stunflow {

inline constexpr std::uint16_t kStunBindingRequest = 0x0001;
inline constexpr std::uint32_t kStunMagicCookie = 0x2112a442;
inline constexpr std::size_t kStunHeaderLen = 20;

struct StunAttribute {
    std::uint16_t type = 0;
    std::vector<std::uint8_t> value;

    bool operator==(const StunAttribute&) const = default;
};

struct StunMessage {
    std::uint16_t msg_type = 0;    // 14-bit class+method encoding
    std::uint16_t msg_length = 0;  // attribute bytes
    bool magic_cookie_present = false;
    std::vector<std::uint8_t> transaction_id;  // 12 bytes with cookie, 16 classic-style
    std::vector<StunAttribute> attributes;
};

/// Total decoder: returns nullopt (not STUN) rather than failing. A payload is
/// accepted only when the header shape and the length field are internally
/// consistent (msg_length + 20 == payload size, msg_length % 4 == 0) and every
/// attribute TLV fits exactly; the magic cookie is recorded but not required.
std::optional<StunMessage> decode_stun(std::span<const std::uint8_t> payload);

/// Wire encoding of a decoded message; attribute padding is emitted as zeros.
std::vector<std::uint8_t> encode_stun(const StunMessage& msg);

bool is_binding_request(const StunMessage& msg);

struct BindingEvent {
    std::int64_t ts_ns = 0;
    Endpoint src;
    Endpoint dst;
    std::uint32_t frame_len = 0;
    std::uint16_t stun_length = 0;
    std::vector<std::uint8_t> transaction_id;
};

/// nullopt unless the message is a Binding Request.
std::optional<BindingEvent> to_binding_event(const UdpDatagram& datagram, const StunMessage& msg);

}  // namespace stunflow
