#include "stunflow/capture.hpp"

namespace stunflow {

namespace {

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicMicroSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::uint32_t kMagicNanoSwapped = 0x4d3cb2a1;

constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
constexpr std::uint16_t kEtherTypeIpv6 = 0x86dd;
constexpr std::uint16_t kEtherTypeVlan = 0x8100;
constexpr std::uint16_t kEtherTypeQinQ = 0x88a8;

constexpr std::uint8_t kIpProtoUdp = 17;

}  // namespace

std::variant<CaptureMeta, HeaderError> parse_capture_header(std::span<const std::uint8_t> data) {
    if (data.size() < kGlobalHeaderLen) return HeaderError::truncated;
    ByteCursor cur(data);
    std::uint32_t magic = cur.u32be();

    CaptureMeta meta;
    switch (magic) {
        case kMagicMicro:
            meta.byte_order = ByteOrder::big;
            meta.ts_resolution = TsResolution::microsecond;
            break;
        case kMagicMicroSwapped:
            meta.byte_order = ByteOrder::little;
            meta.ts_resolution = TsResolution::microsecond;
            break;
        case kMagicNano:
            meta.byte_order = ByteOrder::big;
            meta.ts_resolution = TsResolution::nanosecond;
            break;
        case kMagicNanoSwapped:
            meta.byte_order = ByteOrder::little;
            meta.ts_resolution = TsResolution::nanosecond;
            break;
        default:
            return HeaderError::unknown_magic;
    }
    meta.version_major = cur.u16(meta.byte_order);
    meta.version_minor = cur.u16(meta.byte_order);
    meta.thiszone = static_cast<std::int32_t>(cur.u32(meta.byte_order));
    meta.sigfigs = cur.u32(meta.byte_order);
    meta.snap_len = cur.u32(meta.byte_order);
    meta.link_type = cur.u32(meta.byte_order);
    // A zero snap length can never hold a record; treat as not-a-capture-file.
    if (meta.snap_len == 0) return HeaderError::unknown_magic;
    return meta;
}

std::vector<std::uint8_t> encode_capture_header(const CaptureMeta& meta) {
    std::vector<std::uint8_t> out;
    out.reserve(kGlobalHeaderLen);
    std::uint32_t magic = meta.ts_resolution == TsResolution::microsecond ? kMagicMicro : kMagicNano;
    // The magic is written in the file's own byte order; a foreign reader sees it swapped.
    put_u32(out, magic, meta.byte_order);
    put_u16(out, meta.version_major, meta.byte_order);
    put_u16(out, meta.version_minor, meta.byte_order);
    put_u32(out, static_cast<std::uint32_t>(meta.thiszone), meta.byte_order);
    put_u32(out, meta.sigfigs, meta.byte_order);
    put_u32(out, meta.snap_len, meta.byte_order);
    put_u32(out, meta.link_type, meta.byte_order);
    return out;
}

std::variant<ParsedRecord, RecordError> next_packet(std::span<const std::uint8_t> data,
                                                    const CaptureMeta& meta) {
    if (data.empty()) return RecordError{RecordErrorKind::end_of_stream};
    if (data.size() < kRecordHeaderLen) return RecordError{RecordErrorKind::truncated};

    ByteCursor cur(data);
    PacketRecord rec;
    rec.ts_sec = cur.u32(meta.byte_order);
    rec.ts_frac = cur.u32(meta.byte_order);
    rec.captured_len = cur.u32(meta.byte_order);
    rec.original_len = cur.u32(meta.byte_order);

    if (rec.captured_len > meta.snap_len)
        return RecordError{RecordErrorKind::oversized, rec.captured_len};
    if (!cur.need(rec.captured_len))
        return RecordError{RecordErrorKind::truncated};

    std::int64_t frac_ns = meta.ts_resolution == TsResolution::microsecond
                               ? static_cast<std::int64_t>(rec.ts_frac) * 1000
                               : static_cast<std::int64_t>(rec.ts_frac);
    rec.ts_ns = static_cast<std::int64_t>(rec.ts_sec) * kNsPerSec + frac_ns;

    auto body = cur.bytes(rec.captured_len);
    rec.data.assign(body.begin(), body.end());
    return ParsedRecord{std::move(rec), kRecordHeaderLen + rec.captured_len};
}

void append_record(std::vector<std::uint8_t>& out, const PacketRecord& record,
                   const CaptureMeta& meta) {
    put_u32(out, record.ts_sec, meta.byte_order);
    put_u32(out, record.ts_frac, meta.byte_order);
    put_u32(out, record.captured_len, meta.byte_order);
    put_u32(out, record.original_len, meta.byte_order);
    out.insert(out.end(), record.data.begin(), record.data.end());
}

const char* skip_reason_name(SkipReason reason) {
    switch (reason) {
        case SkipReason::unsupported_link: return "unsupported_link";
        case SkipReason::not_ip: return "not_ip";
        case SkipReason::fragment: return "fragment";
        case SkipReason::not_udp: return "not_udp";
        case SkipReason::truncated: return "truncated";
        case SkipReason::bad_header: return "bad_header";
    }
    return "unknown";
}

namespace {

struct UdpParse {
    IpAddr src, dst;
    std::uint16_t src_port, dst_port;
    std::span<const std::uint8_t> payload;
};

std::variant<UdpParse, SkipReason> parse_udp(ByteCursor& cur) {
    // Caller bounded the cursor to the IP payload.
    if (!cur.need(8)) return SkipReason::truncated;
    std::uint16_t src_port = cur.u16be();
    std::uint16_t dst_port = cur.u16be();
    std::uint16_t udp_len = cur.u16be();
    cur.u16be();  // checksum
    if (udp_len < 8) return SkipReason::bad_header;
    std::size_t payload_len = udp_len - 8u;
    if (!cur.need(payload_len)) return SkipReason::truncated;
    return UdpParse{{}, {}, src_port, dst_port, cur.bytes(payload_len)};
}

std::variant<UdpParse, SkipReason> parse_ipv4(ByteCursor& cur) {
    if (!cur.need(20)) return SkipReason::truncated;
    std::uint8_t vihl = cur.u8();
    if ((vihl >> 4) != 4) return SkipReason::bad_header;
    std::size_t ihl = (vihl & 0x0f) * 4u;
    if (ihl < 20) return SkipReason::bad_header;
    cur.u8();  // DSCP/ECN
    std::uint16_t total_len = cur.u16be();
    cur.u16be();  // identification
    std::uint16_t flags_frag = cur.u16be();
    cur.u8();  // TTL
    std::uint8_t proto = cur.u8();
    cur.u16be();  // checksum
    if (total_len < ihl) return SkipReason::bad_header;
    if (!cur.need(ihl - 12)) return SkipReason::truncated;  // addresses + options
    IpAddr src = IpAddr::from_v4(cur.bytes(4));
    IpAddr dst = IpAddr::from_v4(cur.bytes(4));
    cur.skip(ihl - 20);
    if ((flags_frag & 0x1fff) != 0) return SkipReason::fragment;
    if (proto != kIpProtoUdp) return SkipReason::not_udp;

    // Bound the transport view to the IP total length so Ethernet padding
    // never leaks into the UDP payload.
    std::size_t ip_payload = total_len - ihl;
    if (ip_payload > cur.remaining()) return SkipReason::truncated;
    ByteCursor udp_cur(cur.bytes(ip_payload));
    auto parsed = parse_udp(udp_cur);
    if (auto* skip = std::get_if<SkipReason>(&parsed)) return *skip;
    auto udp = std::get<UdpParse>(parsed);
    udp.src = src;
    udp.dst = dst;
    return udp;
}

std::variant<UdpParse, SkipReason> parse_ipv6(ByteCursor& cur) {
    if (!cur.need(40)) return SkipReason::truncated;
    std::uint32_t vtc_flow = cur.u32be();
    if ((vtc_flow >> 28) != 6) return SkipReason::bad_header;
    std::uint16_t payload_len = cur.u16be();
    std::uint8_t next = cur.u8();
    cur.u8();  // hop limit
    IpAddr src = IpAddr::from_v6(cur.bytes(16));
    IpAddr dst = IpAddr::from_v6(cur.bytes(16));

    if (payload_len > cur.remaining()) return SkipReason::truncated;
    ByteCursor body(cur.bytes(payload_len));

    // Walk hop-by-hop / routing / destination-options / fragment headers.
    for (int hop = 0; hop < 8; ++hop) {
        switch (next) {
            case 0:
            case 43:
            case 60: {
                if (!body.need(2)) return SkipReason::truncated;
                std::uint8_t nh = body.u8();
                std::size_t ext_len = (static_cast<std::size_t>(body.u8()) + 1) * 8;
                if (!body.need(ext_len - 2)) return SkipReason::truncated;
                body.skip(ext_len - 2);
                next = nh;
                break;
            }
            case 44: {  // fragment header
                if (!body.need(8)) return SkipReason::truncated;
                std::uint8_t nh = body.u8();
                body.u8();
                std::uint16_t off_flags = body.u16be();
                body.u32be();
                if ((off_flags & 0xfff8) != 0) return SkipReason::fragment;
                next = nh;
                break;
            }
            case kIpProtoUdp: {
                auto parsed = parse_udp(body);
                if (auto* skip = std::get_if<SkipReason>(&parsed)) return *skip;
                auto udp = std::get<UdpParse>(parsed);
                udp.src = src;
                udp.dst = dst;
                return udp;
            }
            default:
                return SkipReason::not_udp;
        }
    }
    return SkipReason::not_udp;
}

std::variant<UdpParse, SkipReason> parse_from_ethertype(ByteCursor& cur, std::uint16_t ethertype) {
    // Skip up to two stacked 802.1Q tags.
    for (int tags = 0; tags < 2 && (ethertype == kEtherTypeVlan || ethertype == kEtherTypeQinQ);
         ++tags) {
        if (!cur.need(4)) return SkipReason::truncated;
        cur.u16be();  // PCP/DEI/VID
        ethertype = cur.u16be();
    }
    if (ethertype == kEtherTypeIpv4) return parse_ipv4(cur);
    if (ethertype == kEtherTypeIpv6) return parse_ipv6(cur);
    return SkipReason::not_ip;
}

}  // namespace

std::variant<UdpDatagram, SkipReason> decapsulate(const PacketRecord& record,
                                                  const CaptureMeta& meta) {
    ByteCursor cur(record.data);
    std::variant<UdpParse, SkipReason> parsed = SkipReason::unsupported_link;

    switch (meta.link_type) {
        case kLinkEthernet: {
            if (!cur.need(14)) {
                parsed = SkipReason::truncated;
                break;
            }
            cur.skip(12);  // dst + src MAC
            parsed = parse_from_ethertype(cur, cur.u16be());
            break;
        }
        case kLinkLinuxCooked: {
            if (!cur.need(16)) {
                parsed = SkipReason::truncated;
                break;
            }
            cur.skip(14);  // packet type, ARPHRD, address length, address
            parsed = parse_from_ethertype(cur, cur.u16be());
            break;
        }
        case kLinkRawIp: {
            if (!cur.need(1)) {
                parsed = SkipReason::truncated;
                break;
            }
            std::uint8_t version = record.data[0] >> 4;
            if (version == 4) parsed = parse_ipv4(cur);
            else if (version == 6) parsed = parse_ipv6(cur);
            else parsed = SkipReason::not_ip;
            break;
        }
        default:
            parsed = SkipReason::unsupported_link;
            break;
    }

    if (auto* skip = std::get_if<SkipReason>(&parsed)) return *skip;
    auto& udp = std::get<UdpParse>(parsed);
    UdpDatagram out;
    out.src_ip = udp.src;
    out.dst_ip = udp.dst;
    out.src_port = udp.src_port;
    out.dst_port = udp.dst_port;
    out.payload.assign(udp.payload.begin(), udp.payload.end());
    out.frame_len = record.original_len;
    out.ts_ns = record.ts_ns;
    return out;
}

}  // namespace stunflow
