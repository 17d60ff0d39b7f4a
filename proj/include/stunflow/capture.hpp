#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "stunflow/bytes.hpp"
#include "stunflow/ip.hpp"
#include "stunflow/timefmt.hpp"

namespace stunflow {

inline constexpr std::uint32_t kLinkEthernet = 1;
inline constexpr std::uint32_t kLinkRawIp = 101;
inline constexpr std::uint32_t kLinkLinuxCooked = 113;

inline constexpr std::size_t kGlobalHeaderLen = 24;
inline constexpr std::size_t kRecordHeaderLen = 16;

struct CaptureMeta {
    ByteOrder byte_order = ByteOrder::little;
    TsResolution ts_resolution = TsResolution::microsecond;
    std::uint16_t version_major = 2;
    std::uint16_t version_minor = 4;
    std::int32_t thiszone = 0;
    std::uint32_t sigfigs = 0;
    std::uint32_t snap_len = 0;
    std::uint32_t link_type = 0;
};

enum class HeaderError { unknown_magic, truncated };

/// Decode the 24-byte global header. The magic fixes byte order and resolution.
std::variant<CaptureMeta, HeaderError> parse_capture_header(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> encode_capture_header(const CaptureMeta& meta);

struct PacketRecord {
    std::uint32_t ts_sec = 0;
    std::uint32_t ts_frac = 0;       // micro- or nanoseconds per meta resolution
    std::int64_t ts_ns = 0;          // converted
    std::uint32_t captured_len = 0;
    std::uint32_t original_len = 0;
    std::vector<std::uint8_t> data;
};

enum class RecordErrorKind { end_of_stream, truncated, oversized };

struct RecordError {
    RecordErrorKind kind;
    std::uint32_t declared_len = 0;  // set for oversized so callers can skip the body
};

struct ParsedRecord {
    PacketRecord record;
    std::size_t consumed;  // always kRecordHeaderLen + captured_len
};

/// Try to read one record from the front of `data`. `truncated` means the next
/// record is not fully buffered yet — a tail-follower waits for more bytes,
/// a whole-file pass reports a cut-off capture.
std::variant<ParsedRecord, RecordError> next_packet(std::span<const std::uint8_t> data,
                                                    const CaptureMeta& meta);

void append_record(std::vector<std::uint8_t>& out, const PacketRecord& record,
                   const CaptureMeta& meta);

struct UdpDatagram {
    IpAddr src_ip;
    IpAddr dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::vector<std::uint8_t> payload;  // exactly UDP length field minus 8
    std::uint32_t frame_len = 0;        // original (untruncated) frame bytes
    std::int64_t ts_ns = 0;
};

/// Why a frame was skipped instead of yielding a datagram. Skips are counted
/// per reason for the custody record; they are never fatal.
enum class SkipReason {
    unsupported_link,
    not_ip,
    fragment,
    not_udp,
    truncated,
    bad_header,
};

const char* skip_reason_name(SkipReason reason);

std::variant<UdpDatagram, SkipReason> decapsulate(const PacketRecord& record,
                                                  const CaptureMeta& meta);

}  // namespace stunflow
