#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stunflow/ip.hpp"
#include "stunflow/stun.hpp"

namespace stunflow {

struct AddressPolicy {
    std::vector<CidrBlock> excluded_ranges;

    /// RFC1918 + loopback + link-local + CGNAT. The capture's own private
    /// space is expected to be inside this set; adapt per deployment.
    static AddressPolicy defaults();
    bool excludes(const IpAddr& addr) const;

    nlohmann::json to_json() const;
    static AddressPolicy from_json(const nlohmann::json& j);
};

enum class Admit { admitted, filtered_private };

/// Destination-side private/excluded filtering. Filtered events are counted
/// by the caller but never enter sessions.
Admit admit(const BindingEvent& event, const AddressPolicy& policy);

enum class Direction { outgoing_observed, incoming_observed, unknown };

const char* direction_name(Direction d);
std::optional<Direction> direction_from_name(std::string_view name);

struct CallSession {
    std::string session_id;
    Endpoint local;
    Endpoint remote;
    std::int64_t start_ns = 0;
    std::int64_t end_ns = 0;
    std::uint64_t binding_count = 0;
    std::optional<double> mean_keepalive_gap_s;
    std::optional<std::string> handover_from;
    Direction direction = Direction::unknown;

    nlohmann::json to_json() const;
    static CallSession from_json(const nlohmann::json& j);
};

struct HandoverLink {
    std::string prior_session;
    std::string next_session;
    std::int64_t gap_ns = 0;
};

struct SessionStats {
    double duration_s = 0;
    std::optional<double> mean_keepalive_gap_s;
};

SessionStats session_stats(const CallSession& session);

struct SessionConfig {
    AddressPolicy policy = AddressPolicy::defaults();
    std::vector<IpAddr> subjects;  // observed subject address set; may be empty
    std::int64_t session_gap_ns = 10 * kNsPerSec;
    std::int64_t reorder_tolerance_ns = 1 * kNsPerSec;
};

struct Orientation {
    Endpoint local;
    Endpoint remote;
    Direction direction;
};

/// The observed subject's side is "local": matched against the configured
/// subject set when present, otherwise the side inside an excluded range
/// (the capture's inside network). Direction is only labeled from subjects.
Orientation orient(const BindingEvent& event, const SessionConfig& config);

enum class IngestOutcome { opened, extended, out_of_order };

/// One session table per capture stream, single-writer. Events are expected
/// in non-decreasing ts order (the pipeline sorts per stream); an event older
/// than a session's end by more than the reorder tolerance is rejected as
/// out_of_order and must be recorded as an anomaly by the caller.
class SessionTable {
public:
    explicit SessionTable(SessionConfig config) : config_(std::move(config)) {}

    IngestOutcome ingest(const BindingEvent& event);

    /// Seal every open session idle longer than the gap at `now_ns`.
    std::vector<CallSession> close_idle(std::int64_t now_ns);

    /// Seal everything (end of stream).
    std::vector<CallSession> close_all();

    std::size_t open_count() const { return open_.size(); }
    const SessionConfig& config() const { return config_; }

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& j);

private:
    struct OpenSession {
        Endpoint local;
        Endpoint remote;
        std::int64_t start_ns = 0;
        std::int64_t end_ns = 0;
        std::uint64_t binding_count = 0;
        Direction direction = Direction::unknown;
    };

    CallSession seal(const OpenSession& open) const;

    SessionConfig config_;
    std::map<std::pair<Endpoint, Endpoint>, OpenSession> open_;
    // Sessions sealed implicitly by a gap-exceeding event; drained by close paths.
    std::vector<CallSession> sealed_backlog_;
};

/// Deterministic content-derived session id.
std::string make_session_id(const Endpoint& local, const Endpoint& remote, std::int64_t start_ns,
                            std::int64_t end_ns, std::uint64_t binding_count);

/// Pair sealed sessions that continue on a new path: same local IP, different
/// remote endpoint or local port, next start within [0, gap] of the prior end.
/// Assignment is one-to-one, earliest candidate wins; handover_from is set on
/// the successor. Input must be sorted by start_ns.
std::vector<HandoverLink> link_handovers(std::vector<CallSession>& sessions, std::int64_t gap_ns);

/// Admission + orientation + bounded reordering in front of a SessionTable.
/// Events are buffered until the stream high-water mark passes them by the
/// reorder tolerance, then released in (ts, arrival) order. Both whole-file
/// and tail-follow processing run this same path over the same byte stream,
/// which is what makes their session sets identical.
class SessionAssembler {
public:
    explicit SessionAssembler(SessionConfig config)
        : config_(config), table_(std::move(config)) {}

    void push(const BindingEvent& event);

    /// Seal sessions that are idle by stream time. Safe to call every poll:
    /// only sessions no future in-tolerance event could extend are sealed.
    std::vector<CallSession> seal_idle();

    /// Wall-idle path: the source stopped growing, so ingest what is buffered
    /// up to the extrapolated stream time and seal against it. Does not raise
    /// the out-of-order rejection threshold.
    std::vector<CallSession> force_idle_flush(std::int64_t extrapolated_now_ns);

    /// Flush the reorder buffer and seal everything (end of stream).
    std::vector<CallSession> finish();

    std::uint64_t filtered_private() const { return filtered_private_; }
    std::uint64_t out_of_order() const { return out_of_order_; }
    std::uint64_t admitted() const { return admitted_; }
    std::int64_t max_ts_ns() const { return max_ts_ns_; }
    bool has_events() const { return max_ts_ns_ != kNoTs; }
    std::size_t buffered() const { return buffer_.size(); }
    std::size_t open_sessions() const { return table_.open_count(); }

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& j);

private:
    static constexpr std::int64_t kNoTs = INT64_MIN;

    struct Pending {
        BindingEvent event;
        std::uint64_t arrival = 0;
        bool operator<(const Pending& other) const {
            if (event.ts_ns != other.event.ts_ns) return event.ts_ns < other.event.ts_ns;
            return arrival < other.arrival;
        }
    };

    void ingest_through(std::int64_t frontier_ns);

    SessionConfig config_;
    SessionTable table_;
    std::deque<Pending> buffer_;  // kept sorted
    std::int64_t max_ts_ns_ = kNoTs;
    std::int64_t reject_watermark_ns_ = kNoTs;  // stream-driven; events older are anomalies
    std::int64_t ingest_frontier_ns_ = kNoTs;   // everything at or before it is in the table
    std::uint64_t arrival_seq_ = 0;
    std::uint64_t filtered_private_ = 0;
    std::uint64_t out_of_order_ = 0;
    std::uint64_t admitted_ = 0;
};

nlohmann::json binding_event_to_json(const BindingEvent& ev);
BindingEvent binding_event_from_json(const nlohmann::json& j);

}  // namespace stunflow
