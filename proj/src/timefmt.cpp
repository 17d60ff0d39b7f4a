#include "stunflow/timefmt.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>

namespace stunflow {

std::string format_rel_seconds(std::int64_t ns, TsResolution res) {
    bool neg = ns < 0;
    std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(ns + 1)) + 1 : static_cast<std::uint64_t>(ns);
    std::uint64_t sec = mag / kNsPerSec;
    std::uint64_t frac_ns = mag % kNsPerSec;
    char buf[48];
    if (res == TsResolution::microsecond) {
        std::snprintf(buf, sizeof(buf), "%s%" PRIu64 ".%06" PRIu64, neg ? "-" : "", sec, frac_ns / 1000);
    } else {
        std::snprintf(buf, sizeof(buf), "%s%" PRIu64 ".%09" PRIu64, neg ? "-" : "", sec, frac_ns);
    }
    return buf;
}

std::string format_iso_utc(std::int64_t unix_ns, TsResolution res) {
    std::int64_t sec = unix_ns / kNsPerSec;
    std::int64_t frac = unix_ns % kNsPerSec;
    if (frac < 0) {
        frac += kNsPerSec;
        sec -= 1;
    }
    std::time_t tt = static_cast<std::time_t>(sec);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char date[32];
    std::strftime(date, sizeof(date), "%Y-%m-%dT%H:%M:%S", &tm);
    char buf[64];
    if (res == TsResolution::microsecond) {
        std::snprintf(buf, sizeof(buf), "%s.%06" PRId64 "Z", date, frac / 1000);
    } else {
        std::snprintf(buf, sizeof(buf), "%s.%09" PRId64 "Z", date, frac);
    }
    return buf;
}

namespace {

bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

std::optional<std::int64_t> parse_iso_utc_ns(std::string_view text) {
    // YYYY-MM-DDTHH:MM:SS
    int year, mon, day, hour, min, sec;
    if (text.size() < 20) return std::nullopt;
    if (!parse_fixed_uint(text, 0, 4, year) || text[4] != '-' ||
        !parse_fixed_uint(text, 5, 2, mon) || text[7] != '-' ||
        !parse_fixed_uint(text, 8, 2, day) || (text[10] != 'T' && text[10] != ' ') ||
        !parse_fixed_uint(text, 11, 2, hour) || text[13] != ':' ||
        !parse_fixed_uint(text, 14, 2, min) || text[16] != ':' ||
        !parse_fixed_uint(text, 17, 2, sec))
        return std::nullopt;
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hour > 23 || min > 59 || sec > 60)
        return std::nullopt;

    std::size_t pos = 19;
    std::int64_t frac_ns = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        std::int64_t frac = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (digits < 9) frac = frac * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0 || digits > 9) return std::nullopt;
        for (std::size_t i = digits; i < 9; ++i) frac *= 10;
        frac_ns = frac;
    }

    std::int64_t offset_sec = 0;
    if (pos >= text.size()) return std::nullopt;
    if (text[pos] == 'Z') {
        if (pos + 1 != text.size()) return std::nullopt;
    } else if (text[pos] == '+' || text[pos] == '-') {
        int oh, om;
        if (pos + 6 != text.size()) return std::nullopt;
        if (!parse_fixed_uint(text, pos + 1, 2, oh) || text[pos + 3] != ':' ||
            !parse_fixed_uint(text, pos + 4, 2, om))
            return std::nullopt;
        offset_sec = (oh * 3600 + om * 60) * (text[pos] == '+' ? 1 : -1);
    } else {
        return std::nullopt;
    }

    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = mon - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = min;
    tm.tm_sec = sec;
    std::time_t epoch = timegm(&tm);
    if (epoch == static_cast<std::time_t>(-1) && !(year == 1969 && mon == 12 && day == 31))
        return std::nullopt;
    return (static_cast<std::int64_t>(epoch) - offset_sec) * kNsPerSec + frac_ns;
}

std::optional<std::int64_t> parse_iso_utc_seconds(std::string_view text) {
    if (text.find('.') != std::string_view::npos) return std::nullopt;
    auto ns = parse_iso_utc_ns(text);
    if (!ns) return std::nullopt;
    return *ns / kNsPerSec;
}

std::int64_t wall_clock_ns() {
    using namespace std::chrono;
    return duration_cast<nanoseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace stunflow
