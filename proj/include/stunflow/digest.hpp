#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace stunflow {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);
Digest sha256_file(const std::filesystem::path& path);  // throws std::runtime_error on I/O failure

std::string digest_hex(const Digest& d);
std::optional<Digest> digest_from_hex(std::string_view hex);

inline constexpr Digest kZeroDigest{};

}  // namespace stunflow
