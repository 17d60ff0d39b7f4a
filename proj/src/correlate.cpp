#include "stunflow/correlate.hpp"

#include <algorithm>
#include <cmath>

namespace stunflow {

namespace {

void check_interval(Interval v) {
    if (v.start > v.end) throw InvalidInterval("interval start > end");
}

}  // namespace

double interval_overlap(Interval a, Interval b) {
    check_interval(a);
    check_interval(b);
    double la = a.end - a.start;
    double lb = b.end - b.start;
    if (la == 0 || lb == 0) {
        if (la == 0 && b.start <= a.start && a.start <= b.end) return 1.0;
        if (lb == 0 && a.start <= b.start && b.start <= a.end) return 1.0;
        return 0.0;
    }
    double inter = std::min(a.end, b.end) - std::max(a.start, b.start);
    if (inter <= 0) return 0.0;
    double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
    return inter / uni;
}

SlideResult best_overlap_with_slide(Interval a, Interval b, double tolerance_s) {
    check_interval(a);
    check_interval(b);
    // IoU as a function of the shift applied to b is unimodal with a plateau
    // where the shorter interval nests inside the longer:
    // [min(a0-b0, a1-b1), max(a0-b0, a1-b1)]. The constrained optimum is the
    // plateau clamped into [-tolerance, +tolerance]; within the reachable
    // plateau the shift closest to zero is reported.
    double lo = std::min(a.start - b.start, a.end - b.end);
    double hi = std::max(a.start - b.start, a.end - b.end);
    double offset;
    if (hi < -tolerance_s) {
        offset = -tolerance_s;
    } else if (lo > tolerance_s) {
        offset = tolerance_s;
    } else {
        offset = std::clamp(0.0, std::max(lo, -tolerance_s), std::min(hi, tolerance_s));
    }
    Interval shifted{b.start + offset, b.end + offset};
    return SlideResult{interval_overlap(a, shifted), offset};
}

const char* crossmatch_name(IpCrossmatch c) {
    switch (c) {
        case IpCrossmatch::both: return "both";
        case IpCrossmatch::one_way: return "one_way";
        case IpCrossmatch::none: return "none";
    }
    return "none";
}

const char* confidence_name(Confidence c) {
    switch (c) {
        case Confidence::high: return "high";
        case Confidence::medium: return "medium";
        case Confidence::low: return "low";
    }
    return "low";
}

Confidence classify_confidence(IpCrossmatch crossmatch, double overlap, double theta) {
    if (overlap >= theta && crossmatch == IpCrossmatch::both) return Confidence::high;
    if (overlap >= theta) return Confidence::medium;
    return Confidence::low;
}

namespace {

bool in_set(const IpAddr& ip, const std::vector<IpAddr>& set) {
    return std::find(set.begin(), set.end(), ip) != set.end();
}

struct Candidate {
    std::size_t ia, ib;
    SlideResult slide;
};

double interval_distance(Interval a, Interval b) {
    return std::max({0.0, b.start - a.end, a.start - b.end});
}

// Exhaustive best-total assignment over the candidate overlap matrix.
double optimal_assignment(const std::vector<std::vector<double>>& score, std::size_t na,
                          std::size_t nb) {
    std::vector<bool> used_b(nb, false);
    double best = 0;
    auto rec = [&](auto&& self, std::size_t ia, double acc) -> void {
        if (ia == na) {
            best = std::max(best, acc);
            return;
        }
        self(self, ia + 1, acc);  // leave A[ia] unmatched
        for (std::size_t ib = 0; ib < nb; ++ib) {
            if (used_b[ib] || score[ia][ib] <= 0) continue;
            used_b[ib] = true;
            self(self, ia + 1, acc + score[ia][ib]);
            used_b[ib] = false;
        }
    };
    rec(rec, 0, 0.0);
    return best;
}

}  // namespace

CorrelationResult correlate(std::span<const CorrSession> sessions_a,
                            std::span<const CorrSession> sessions_b,
                            const CorrelateConfig& config) {
    CorrelationResult result;

    std::vector<Candidate> candidates;
    for (std::size_t ia = 0; ia < sessions_a.size(); ++ia) {
        for (std::size_t ib = 0; ib < sessions_b.size(); ++ib) {
            Interval a{sessions_a[ia].start_s, sessions_a[ia].end_s};
            Interval b{sessions_b[ib].start_s, sessions_b[ib].end_s};
            if (interval_distance(a, b) > config.clock_skew_tolerance_s) continue;
            auto slide = best_overlap_with_slide(a, b, config.clock_skew_tolerance_s);
            if (slide.best_overlap <= 0) continue;
            candidates.push_back(Candidate{ia, ib, slide});
        }
    }

    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& x, const Candidate& y) {
        if (x.slide.best_overlap != y.slide.best_overlap)
            return x.slide.best_overlap > y.slide.best_overlap;
        if (sessions_a[x.ia].start_s != sessions_a[y.ia].start_s)
            return sessions_a[x.ia].start_s < sessions_a[y.ia].start_s;
        if (sessions_a[x.ia].session_id != sessions_a[y.ia].session_id)
            return sessions_a[x.ia].session_id < sessions_a[y.ia].session_id;
        return sessions_b[x.ib].session_id < sessions_b[y.ib].session_id;
    });

    std::vector<bool> used_a(sessions_a.size(), false), used_b(sessions_b.size(), false);
    for (const auto& cand : candidates) {
        if (used_a[cand.ia] || used_b[cand.ib]) continue;
        used_a[cand.ia] = true;
        used_b[cand.ib] = true;

        const CorrSession& sa = sessions_a[cand.ia];
        const CorrSession& sb = sessions_b[cand.ib];
        bool a_sees_b = in_set(sa.remote.ip, config.external_b);
        bool b_sees_a = in_set(sb.remote.ip, config.external_a);
        IpCrossmatch cross = a_sees_b && b_sees_a ? IpCrossmatch::both
                             : a_sees_b || b_sees_a ? IpCrossmatch::one_way
                                                    : IpCrossmatch::none;

        CorrelationMatch m;
        m.session_a = sa.session_id;
        m.session_b = sb.session_id;
        m.time_offset_s = sb.start_s - sa.start_s;
        m.overlap = cand.slide.best_overlap;
        m.applied_offset_s = cand.slide.applied_offset_s;
        m.ip_crossmatch = cross;
        m.confidence = classify_confidence(cross, m.overlap, config.theta);
        result.greedy_total_overlap += m.overlap;
        result.matches.push_back(std::move(m));
    }

    if (sessions_a.size() <= 8 && sessions_b.size() <= 8) {
        std::vector<std::vector<double>> score(sessions_a.size(),
                                               std::vector<double>(sessions_b.size(), 0.0));
        for (const auto& cand : candidates) score[cand.ia][cand.ib] = cand.slide.best_overlap;
        result.optimal_total_overlap = optimal_assignment(score, sessions_a.size(), sessions_b.size());
        result.greedy_suboptimal =
            result.greedy_total_overlap + 1e-9 < *result.optimal_total_overlap;
    }
    return result;
}

}  // namespace stunflow
