#include "stunflow/presence.hpp"

#include <algorithm>
#include <sstream>

#include "stunflow/timefmt.hpp"

namespace stunflow {

std::vector<OnlineInterval> reconstruct_intervals(std::span<const PresenceObservation> observations,
                                                  std::int64_t offline_timeout_s) {
    std::vector<OnlineInterval> out;
    bool open = false;
    std::int64_t start = 0;
    std::int64_t last_online = 0;
    std::int64_t prev_ts = INT64_MIN;

    for (const auto& obs : observations) {
        if (obs.ts < prev_ts) throw UnsortedInput("presence observations not sorted by ts");
        prev_ts = obs.ts;

        if (open && obs.ts - last_online > offline_timeout_s) {
            out.push_back(OnlineInterval{start, last_online + offline_timeout_s, true});
            open = false;
        }
        switch (obs.state) {
            case PresenceState::online:
                if (open) {
                    last_online = obs.ts;
                } else {
                    open = true;
                    start = obs.ts;
                    last_online = obs.ts;
                }
                break;
            case PresenceState::offline:
            case PresenceState::last_seen:
                if (open) {
                    out.push_back(OnlineInterval{start, obs.ts, false});
                    open = false;
                }
                break;
        }
    }
    if (open) out.push_back(OnlineInterval{start, last_online + offline_timeout_s, true});
    return out;
}

RoutineProfile routine_histogram(std::span<const OnlineInterval> intervals, int tz_offset_min) {
    RoutineProfile profile;
    constexpr std::int64_t kDay = 86400;
    for (const auto& iv : intervals) {
        std::int64_t t = iv.start + static_cast<std::int64_t>(tz_offset_min) * 60;
        std::int64_t end = iv.end + static_cast<std::int64_t>(tz_offset_min) * 60;
        while (t < end) {
            std::int64_t tod = ((t % kDay) + kDay) % kDay;
            std::int64_t hour = tod / 3600;
            std::int64_t next_boundary = t + (3600 - tod % 3600);
            std::int64_t seg_end = std::min(end, next_boundary);
            profile.hourly_activity[static_cast<std::size_t>(hour)] += seg_end - t;
            t = seg_end;
        }
    }
    return profile;
}

namespace {

// Measure and merge over unions of sorted disjoint interval lists.
std::vector<OnlineInterval> merge_union(std::span<const OnlineInterval> a,
                                        std::span<const OnlineInterval> b) {
    std::vector<OnlineInterval> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end(),
              [](const OnlineInterval& x, const OnlineInterval& y) { return x.start < y.start; });
    std::vector<OnlineInterval> merged;
    for (const auto& iv : all) {
        if (!merged.empty() && iv.start <= merged.back().end) {
            merged.back().end = std::max(merged.back().end, iv.end);
        } else {
            merged.push_back(iv);
        }
    }
    return merged;
}

std::int64_t total_seconds(std::span<const OnlineInterval> ivs) {
    std::int64_t sum = 0;
    for (const auto& iv : ivs) sum += iv.end - iv.start;
    return sum;
}

}  // namespace

Copresence copresence(std::span<const OnlineInterval> a, std::span<const OnlineInterval> b,
                      std::int64_t alternation_gap_s) {
    Copresence out;

    // Intersection seconds by two-pointer sweep.
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        std::int64_t lo = std::max(a[i].start, b[j].start);
        std::int64_t hi = std::min(a[i].end, b[j].end);
        if (hi > lo) out.joint_seconds += hi - lo;
        if (a[i].end < b[j].end) {
            ++i;
        } else {
            ++j;
        }
    }

    auto merged = merge_union(a, b);
    std::int64_t union_seconds = total_seconds(merged);
    out.jaccard = union_seconds == 0 ? 0.0
                                     : static_cast<double>(out.joint_seconds) /
                                           static_cast<double>(union_seconds);

    // Hand-offs: one subject goes quiet and the other appears within the gap.
    for (const auto& ia : a) {
        for (const auto& ib : b) {
            if (ib.start >= ia.end && ib.start - ia.end <= alternation_gap_s)
                ++out.alternation_count;
            if (ia.start >= ib.end && ia.start - ib.end <= alternation_gap_s)
                ++out.alternation_count;
        }
    }
    return out;
}

std::map<std::string, std::vector<PresenceObservation>> parse_observation_log(std::istream& in) {
    std::map<std::string, std::vector<PresenceObservation>> by_subject;
    std::string line;
    std::size_t line_no = 0;

    auto fail = [&](const std::string& what) {
        throw ObservationLogError("observation log line " + std::to_string(line_no) + ": " + what);
    };

    if (!std::getline(in, line)) throw ObservationLogError("observation log: empty file (header required)");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "subject,ts,state,state_ts")
        throw ObservationLogError("observation log: bad header, expected subject,ts,state,state_ts");

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (fields.size() != 4) fail("expected 4 comma-separated fields");

        PresenceObservation obs;
        obs.subject = fields[0];
        if (obs.subject.empty()) fail("empty subject");
        auto ts = parse_iso_utc_seconds(fields[1]);
        if (!ts) fail("bad ts (whole-second ISO-8601 UTC required): " + fields[1]);
        obs.ts = *ts;

        if (fields[2] == "online") {
            obs.state = PresenceState::online;
            if (!fields[3].empty()) fail("state_ts must be empty for online");
        } else if (fields[2] == "offline") {
            obs.state = PresenceState::offline;
            if (!fields[3].empty()) fail("state_ts must be empty for offline");
        } else if (fields[2] == "last_seen") {
            obs.state = PresenceState::last_seen;
            auto seen = parse_iso_utc_seconds(fields[3]);
            if (!seen) fail("bad state_ts for last_seen: " + fields[3]);
            if (*seen > obs.ts) fail("last_seen ts is after the observation ts");
            obs.last_seen_ts = *seen;
        } else {
            fail("unknown state: " + fields[2]);
        }

        auto& vec = by_subject[obs.subject];
        if (!vec.empty() && obs.ts < vec.back().ts)
            fail("observations for subject " + obs.subject + " are not time-ordered");
        vec.push_back(std::move(obs));
    }
    return by_subject;
}

}  // namespace stunflow
