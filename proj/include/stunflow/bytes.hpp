#pragma once

#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stunflow {

enum class ByteOrder { big, little };

/// Bounds-checked cursor over a byte span. Callers test need() before reading.
class ByteCursor {
public:
    explicit ByteCursor(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool need(std::size_t n) const { return remaining() >= n; }

    std::uint8_t u8() { return data_[pos_++]; }

    std::uint16_t u16be() {
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32be() {
        std::uint32_t v = static_cast<std::uint32_t>(data_[pos_]) << 24 |
                          static_cast<std::uint32_t>(data_[pos_ + 1]) << 16 |
                          static_cast<std::uint32_t>(data_[pos_ + 2]) << 8 |
                          static_cast<std::uint32_t>(data_[pos_ + 3]);
        pos_ += 4;
        return v;
    }

    std::uint16_t u16(ByteOrder order) {
        std::uint16_t v = u16be();
        return order == ByteOrder::big ? v : static_cast<std::uint16_t>(v >> 8 | v << 8);
    }

    std::uint32_t u32(ByteOrder order) {
        std::uint32_t v = u32be();
        if (order == ByteOrder::big) return v;
        return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
    }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    void skip(std::size_t n) { pos_ += n; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline void put_u16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v, ByteOrder order) {
    if (order == ByteOrder::big) {
        put_u16be(out, v);
    } else {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v, ByteOrder order) {
    if (order == ByteOrder::big) {
        put_u32be(out, v);
    } else {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 24));
    }
}

std::string to_hex(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> from_hex(std::string_view hex);  // throws std::invalid_argument

}  // namespace stunflow
