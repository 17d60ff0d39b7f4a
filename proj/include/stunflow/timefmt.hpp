#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace stunflow {

enum class TsResolution { microsecond, nanosecond };

inline constexpr std::int64_t kNsPerSec = 1'000'000'000;

/// Relative capture time as fixed-point seconds: 23990789000 ns -> "23.990789"
/// (6 fractional digits for microsecond captures, 9 for nanosecond).
std::string format_rel_seconds(std::int64_t ns, TsResolution res);

/// "1970-01-01T00:00:23.990789Z" style UTC stamp from nanoseconds since the Unix epoch.
std::string format_iso_utc(std::int64_t unix_ns, TsResolution res = TsResolution::nanosecond);

/// Strict ISO-8601 UTC parser: "YYYY-MM-DDTHH:MM:SS[.fraction](Z|+HH:MM|-HH:MM)".
std::optional<std::int64_t> parse_iso_utc_ns(std::string_view text);

/// As above but rejects fractional seconds (whole-second domains).
std::optional<std::int64_t> parse_iso_utc_seconds(std::string_view text);

std::int64_t wall_clock_ns();

}  // namespace stunflow
