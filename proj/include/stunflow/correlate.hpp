#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stunflow/ip.hpp"

namespace stunflow {

struct Interval {
    double start = 0;
    double end = 0;
};

struct InvalidInterval : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Intersection-over-union of two closed intervals. Zero-length intervals
/// score 1 when the point lies within the other interval's closure (both
/// zero-length: 1 iff equal points), else 0. Throws InvalidInterval when
/// start > end.
double interval_overlap(Interval a, Interval b);

struct SlideResult {
    double best_overlap = 0;
    double applied_offset_s = 0;  // the shift added to b that attains it
};

/// Maximum IoU over sliding b by any offset in [-tolerance, +tolerance].
SlideResult best_overlap_with_slide(Interval a, Interval b, double tolerance_s);

enum class IpCrossmatch { both, one_way, none };
enum class Confidence { high, medium, low };

const char* crossmatch_name(IpCrossmatch c);
const char* confidence_name(Confidence c);

/// Pure classification: high needs a mutual IP cross-match plus overlap >= θ;
/// overlap >= θ alone is medium; anything below θ (but nonzero) is low.
Confidence classify_confidence(IpCrossmatch crossmatch, double overlap, double theta);

/// One sealed session on a shared absolute timebase (seconds from an
/// arbitrary common origin chosen by the caller).
struct CorrSession {
    std::string session_id;
    Endpoint local;
    Endpoint remote;
    double start_s = 0;
    double end_s = 0;
};

struct CorrelationMatch {
    std::string session_a;
    std::string session_b;
    double time_offset_s = 0;  // b.start - a.start, uncompensated
    double overlap = 0;        // best IoU after offset compensation
    double applied_offset_s = 0;
    IpCrossmatch ip_crossmatch = IpCrossmatch::none;
    Confidence confidence = Confidence::low;
};

struct CorrelateConfig {
    double clock_skew_tolerance_s = 5.0;
    double theta = 0.8;
    std::vector<IpAddr> external_a;  // subject A's external addresses (as B's peer sees them)
    std::vector<IpAddr> external_b;
};

struct CorrelationResult {
    std::vector<CorrelationMatch> matches;
    double greedy_total_overlap = 0;
    std::optional<double> optimal_total_overlap;  // exhaustive check, small inputs only
    bool greedy_suboptimal = false;
};

/// One-to-one greedy assignment by descending best-slide overlap; ties broken
/// by earliest A start, then session ids. For small inputs (<= 8 per side) the
/// greedy total is checked against exhaustive assignment and flagged when it
/// falls short, so reports can disclose the deviation.
CorrelationResult correlate(std::span<const CorrSession> sessions_a,
                            std::span<const CorrSession> sessions_b,
                            const CorrelateConfig& config);

}  // namespace stunflow
