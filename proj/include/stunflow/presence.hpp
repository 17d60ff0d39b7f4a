#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stunflow {

enum class PresenceState { online, offline, last_seen };

/// One scraped presence datum. Timestamps are whole UTC seconds; local-time
/// binning takes an explicit offset, never the system locale.
struct PresenceObservation {
    std::string subject;  // phone-number string, e.g. "0031621444833"
    std::int64_t ts = 0;  // unix seconds
    PresenceState state = PresenceState::offline;
    std::optional<std::int64_t> last_seen_ts;  // only for state == last_seen; <= ts
};

struct OnlineInterval {
    std::int64_t start = 0;
    std::int64_t end = 0;
    bool end_uncertain = false;  // closed by silence timeout, not an observation
};

struct UnsortedInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Fold one subject's observations (sorted by ts) into disjoint online
/// intervals. An online observation opens or extends an interval; offline or
/// last_seen closes it at that observation's ts; silence beyond the timeout
/// closes it at last-online + timeout with the uncertainty flag set.
std::vector<OnlineInterval> reconstruct_intervals(std::span<const PresenceObservation> observations,
                                                  std::int64_t offline_timeout_s);

struct RoutineProfile {
    std::array<std::int64_t, 24> hourly_activity{};  // online seconds per local hour-of-day
    std::int64_t first_obs_ts = 0;
    std::int64_t last_obs_ts = 0;
};

/// Split interval durations across local hour-of-day bins; integer-second
/// exact, so the bin total always equals the total interval duration.
RoutineProfile routine_histogram(std::span<const OnlineInterval> intervals, int tz_offset_min);

struct Copresence {
    std::int64_t joint_seconds = 0;
    double jaccard = 0;  // |A∩B| / |A∪B|; 0 when both unions are empty
    std::uint64_t alternation_count = 0;
};

Copresence copresence(std::span<const OnlineInterval> a, std::span<const OnlineInterval> b,
                      std::int64_t alternation_gap_s = 60);

struct ObservationLogError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Delimited observation log: header "subject,ts,state,state_ts", then one
/// observation per line, ISO-8601 whole-second UTC timestamps, state one of
/// online/offline/last_seen (state_ts required for last_seen, empty otherwise).
/// Observations must be time-ordered per subject.
std::map<std::string, std::vector<PresenceObservation>> parse_observation_log(std::istream& in);

}  // namespace stunflow
