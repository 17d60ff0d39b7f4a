#include "stunflow/stun.hpp"

namespace stunflow {

std::optional<StunMessage> decode_stun(std::span<const std::uint8_t> payload) {
    if (payload.size() < kStunHeaderLen) return std::nullopt;
    if ((payload[0] & 0xc0) != 0) return std::nullopt;

    ByteCursor cur(payload);
    StunMessage msg;
    msg.msg_type = cur.u16be();
    msg.msg_length = cur.u16be();
    if (msg.msg_length % 4 != 0) return std::nullopt;
    if (static_cast<std::size_t>(msg.msg_length) + kStunHeaderLen != payload.size())
        return std::nullopt;

    std::uint32_t cookie = cur.u32be();
    msg.magic_cookie_present = cookie == kStunMagicCookie;
    if (msg.magic_cookie_present) {
        auto tid = cur.bytes(12);
        msg.transaction_id.assign(tid.begin(), tid.end());
    } else {
        // Classic-style 16-byte transaction id covering bytes 4..19.
        msg.transaction_id.reserve(16);
        put_u32be(msg.transaction_id, cookie);
        auto tid = cur.bytes(12);
        msg.transaction_id.insert(msg.transaction_id.end(), tid.begin(), tid.end());
    }

    // Attribute TLVs, 4-byte aligned, ending exactly at msg_length.
    std::size_t end = kStunHeaderLen + msg.msg_length;
    while (cur.pos() < end) {
        if (end - cur.pos() < 4) return std::nullopt;
        StunAttribute attr;
        attr.type = cur.u16be();
        std::size_t len = cur.u16be();
        std::size_t padded = (len + 3) & ~std::size_t{3};
        if (cur.pos() + padded > end) return std::nullopt;
        auto value = cur.bytes(len);
        attr.value.assign(value.begin(), value.end());
        cur.skip(padded - len);
        msg.attributes.push_back(std::move(attr));
    }
    return msg;
}

std::vector<std::uint8_t> encode_stun(const StunMessage& msg) {
    std::vector<std::uint8_t> out;
    std::size_t attr_len = 0;
    for (const auto& attr : msg.attributes) attr_len += 4 + ((attr.value.size() + 3) & ~std::size_t{3});
    out.reserve(kStunHeaderLen + attr_len);

    put_u16be(out, msg.msg_type);
    put_u16be(out, static_cast<std::uint16_t>(attr_len));
    if (msg.magic_cookie_present) {
        put_u32be(out, kStunMagicCookie);
        out.insert(out.end(), msg.transaction_id.begin(), msg.transaction_id.end());
    } else {
        out.insert(out.end(), msg.transaction_id.begin(), msg.transaction_id.end());
    }
    for (const auto& attr : msg.attributes) {
        put_u16be(out, attr.type);
        put_u16be(out, static_cast<std::uint16_t>(attr.value.size()));
        out.insert(out.end(), attr.value.begin(), attr.value.end());
        out.resize(out.size() + ((4 - attr.value.size() % 4) % 4), 0);
    }
    return out;
}

bool is_binding_request(const StunMessage& msg) {
    return msg.msg_type == kStunBindingRequest;
}

std::optional<BindingEvent> to_binding_event(const UdpDatagram& datagram, const StunMessage& msg) {
    if (!is_binding_request(msg)) return std::nullopt;
    BindingEvent ev;
    ev.ts_ns = datagram.ts_ns;
    ev.src = Endpoint{datagram.src_ip, datagram.src_port};
    ev.dst = Endpoint{datagram.dst_ip, datagram.dst_port};
    ev.frame_len = datagram.frame_len;
    ev.stun_length = msg.msg_length;
    ev.transaction_id = msg.transaction_id;
    return ev;
}

}  // namespace stunflow
