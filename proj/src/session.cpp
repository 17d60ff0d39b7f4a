#include "stunflow/session.hpp"

#include <algorithm>

#include "stunflow/digest.hpp"

namespace stunflow {

using nlohmann::json;

AddressPolicy AddressPolicy::defaults() {
    AddressPolicy p;
    for (const char* cidr : {"10.0.0.0/8", "172.16.0.0/12", "192.168.0.0/16", "127.0.0.0/8",
                             "169.254.0.0/16", "100.64.0.0/10"}) {
        p.excluded_ranges.push_back(*CidrBlock::parse(cidr));
    }
    return p;
}

bool AddressPolicy::excludes(const IpAddr& addr) const {
    return std::any_of(excluded_ranges.begin(), excluded_ranges.end(),
                       [&](const CidrBlock& c) { return c.contains(addr); });
}

json AddressPolicy::to_json() const {
    json ranges = json::array();
    for (const auto& c : excluded_ranges) ranges.push_back(c.to_string());
    return json{{"excluded_ranges", ranges}};
}

AddressPolicy AddressPolicy::from_json(const json& j) {
    AddressPolicy p;
    for (const auto& item : j.at("excluded_ranges")) {
        auto cidr = CidrBlock::parse(item.get<std::string>());
        if (!cidr) throw std::invalid_argument("bad CIDR in policy: " + item.get<std::string>());
        p.excluded_ranges.push_back(*cidr);
    }
    return p;
}

Admit admit(const BindingEvent& event, const AddressPolicy& policy) {
    return policy.excludes(event.dst.ip) ? Admit::filtered_private : Admit::admitted;
}

const char* direction_name(Direction d) {
    switch (d) {
        case Direction::outgoing_observed: return "outgoing_observed";
        case Direction::incoming_observed: return "incoming_observed";
        case Direction::unknown: return "unknown";
    }
    return "unknown";
}

std::optional<Direction> direction_from_name(std::string_view name) {
    if (name == "outgoing_observed") return Direction::outgoing_observed;
    if (name == "incoming_observed") return Direction::incoming_observed;
    if (name == "unknown") return Direction::unknown;
    return std::nullopt;
}

json CallSession::to_json() const {
    json j{
        {"session_id", session_id},
        {"local", local.to_string()},
        {"remote", remote.to_string()},
        {"start_ns", start_ns},
        {"end_ns", end_ns},
        {"binding_count", binding_count},
        {"direction", direction_name(direction)},
    };
    if (mean_keepalive_gap_s) j["mean_keepalive_gap_s"] = *mean_keepalive_gap_s;
    if (handover_from) j["handover_from"] = *handover_from;
    return j;
}

CallSession CallSession::from_json(const json& j) {
    CallSession s;
    s.session_id = j.at("session_id").get<std::string>();
    s.local = *Endpoint::parse(j.at("local").get<std::string>());
    s.remote = *Endpoint::parse(j.at("remote").get<std::string>());
    s.start_ns = j.at("start_ns").get<std::int64_t>();
    s.end_ns = j.at("end_ns").get<std::int64_t>();
    s.binding_count = j.at("binding_count").get<std::uint64_t>();
    s.direction = *direction_from_name(j.at("direction").get<std::string>());
    if (j.contains("mean_keepalive_gap_s")) s.mean_keepalive_gap_s = j["mean_keepalive_gap_s"].get<double>();
    if (j.contains("handover_from")) s.handover_from = j["handover_from"].get<std::string>();
    return s;
}

SessionStats session_stats(const CallSession& session) {
    SessionStats stats;
    stats.duration_s = static_cast<double>(session.end_ns - session.start_ns) / kNsPerSec;
    if (session.binding_count > 1) {
        stats.mean_keepalive_gap_s =
            stats.duration_s / static_cast<double>(session.binding_count - 1);
    }
    return stats;
}

Orientation orient(const BindingEvent& event, const SessionConfig& config) {
    auto is_subject = [&](const IpAddr& ip) {
        return std::find(config.subjects.begin(), config.subjects.end(), ip) !=
               config.subjects.end();
    };
    if (!config.subjects.empty()) {
        if (is_subject(event.src.ip)) return {event.src, event.dst, Direction::outgoing_observed};
        if (is_subject(event.dst.ip)) return {event.dst, event.src, Direction::incoming_observed};
    }
    // No subject match: the capture's inside network (excluded space) is local.
    if (config.policy.excludes(event.src.ip)) return {event.src, event.dst, Direction::unknown};
    if (config.policy.excludes(event.dst.ip)) return {event.dst, event.src, Direction::unknown};
    return {event.src, event.dst, Direction::unknown};
}

std::string make_session_id(const Endpoint& local, const Endpoint& remote, std::int64_t start_ns,
                            std::int64_t end_ns, std::uint64_t binding_count) {
    std::string seed = local.to_string() + "|" + remote.to_string() + "|" +
                       std::to_string(start_ns) + "|" + std::to_string(end_ns) + "|" +
                       std::to_string(binding_count);
    return "s-" + digest_hex(sha256(seed)).substr(0, 12);
}

IngestOutcome SessionTable::ingest(const BindingEvent& event) {
    Orientation o = orient(event, config_);
    auto key = std::make_pair(o.local, o.remote);
    auto it = open_.find(key);
    if (it == open_.end()) {
        open_.emplace(key, OpenSession{o.local, o.remote, event.ts_ns, event.ts_ns, 1, o.direction});
        return IngestOutcome::opened;
    }
    OpenSession& s = it->second;
    if (event.ts_ns + config_.reorder_tolerance_ns < s.end_ns) return IngestOutcome::out_of_order;
    if (event.ts_ns - s.end_ns <= config_.session_gap_ns) {
        s.end_ns = std::max(s.end_ns, event.ts_ns);
        s.binding_count += 1;
        if (s.direction == Direction::unknown) s.direction = o.direction;
        return IngestOutcome::extended;
    }
    // Gap exceeded: seal implicitly by replacing; the sealed copy is returned
    // through close paths, so keep it until then by rotating into a fresh slot.
    CallSession sealed = seal(s);
    sealed_backlog_.push_back(std::move(sealed));
    s = OpenSession{o.local, o.remote, event.ts_ns, event.ts_ns, 1, o.direction};
    return IngestOutcome::opened;
}

CallSession SessionTable::seal(const OpenSession& open) const {
    CallSession s;
    s.local = open.local;
    s.remote = open.remote;
    s.start_ns = open.start_ns;
    s.end_ns = open.end_ns;
    s.binding_count = open.binding_count;
    s.direction = open.direction;
    s.session_id = make_session_id(s.local, s.remote, s.start_ns, s.end_ns, s.binding_count);
    s.mean_keepalive_gap_s = session_stats(s).mean_keepalive_gap_s;
    return s;
}

std::vector<CallSession> SessionTable::close_idle(std::int64_t now_ns) {
    std::vector<CallSession> out = std::move(sealed_backlog_);
    sealed_backlog_.clear();
    for (auto it = open_.begin(); it != open_.end();) {
        if (now_ns - it->second.end_ns > config_.session_gap_ns) {
            out.push_back(seal(it->second));
            it = open_.erase(it);
        } else {
            ++it;
        }
    }
    std::sort(out.begin(), out.end(), [](const CallSession& a, const CallSession& b) {
        return std::tie(a.start_ns, a.session_id) < std::tie(b.start_ns, b.session_id);
    });
    return out;
}

std::vector<CallSession> SessionTable::close_all() {
    std::vector<CallSession> out = std::move(sealed_backlog_);
    sealed_backlog_.clear();
    for (const auto& [key, open] : open_) out.push_back(seal(open));
    open_.clear();
    std::sort(out.begin(), out.end(), [](const CallSession& a, const CallSession& b) {
        return std::tie(a.start_ns, a.session_id) < std::tie(b.start_ns, b.session_id);
    });
    return out;
}

json SessionTable::snapshot() const {
    json open = json::array();
    for (const auto& [key, s] : open_) {
        open.push_back(json{{"local", s.local.to_string()},
                            {"remote", s.remote.to_string()},
                            {"start_ns", s.start_ns},
                            {"end_ns", s.end_ns},
                            {"binding_count", s.binding_count},
                            {"direction", direction_name(s.direction)}});
    }
    json backlog = json::array();
    for (const auto& s : sealed_backlog_) backlog.push_back(s.to_json());
    return json{{"open", open}, {"sealed_backlog", backlog}};
}

void SessionTable::restore(const json& j) {
    open_.clear();
    sealed_backlog_.clear();
    for (const auto& item : j.at("open")) {
        OpenSession s;
        s.local = *Endpoint::parse(item.at("local").get<std::string>());
        s.remote = *Endpoint::parse(item.at("remote").get<std::string>());
        s.start_ns = item.at("start_ns").get<std::int64_t>();
        s.end_ns = item.at("end_ns").get<std::int64_t>();
        s.binding_count = item.at("binding_count").get<std::uint64_t>();
        s.direction = *direction_from_name(item.at("direction").get<std::string>());
        open_.emplace(std::make_pair(s.local, s.remote), s);
    }
    for (const auto& item : j.at("sealed_backlog"))
        sealed_backlog_.push_back(CallSession::from_json(item));
}

std::vector<HandoverLink> link_handovers(std::vector<CallSession>& sessions, std::int64_t gap_ns) {
    std::vector<HandoverLink> links;
    std::vector<bool> claimed(sessions.size(), false);
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const CallSession& prior = sessions[i];
        for (std::size_t j = 0; j < sessions.size(); ++j) {
            if (i == j || claimed[j]) continue;
            CallSession& next = sessions[j];
            if (next.local.ip != prior.local.ip) continue;
            if (next.remote == prior.remote && next.local.port == prior.local.port) continue;
            std::int64_t gap = next.start_ns - prior.end_ns;
            if (gap < 0 || gap > gap_ns) continue;
            links.push_back(HandoverLink{prior.session_id, next.session_id, gap});
            next.handover_from = prior.session_id;
            claimed[j] = true;
            break;  // at most one successor per session, earliest wins
        }
    }
    return links;
}

void SessionAssembler::push(const BindingEvent& event) {
    if (admit(event, config_.policy) == Admit::filtered_private) {
        ++filtered_private_;
        return;
    }
    if (reject_watermark_ns_ != kNoTs && event.ts_ns < reject_watermark_ns_) {
        ++out_of_order_;
        return;
    }
    if (max_ts_ns_ == kNoTs || event.ts_ns > max_ts_ns_) max_ts_ns_ = event.ts_ns;
    reject_watermark_ns_ = std::max(reject_watermark_ns_ == kNoTs ? INT64_MIN : reject_watermark_ns_,
                                    max_ts_ns_ - config_.reorder_tolerance_ns);
    Pending p{event, arrival_seq_++};
    auto pos = std::upper_bound(buffer_.begin(), buffer_.end(), p);
    buffer_.insert(pos, std::move(p));
    ingest_through(reject_watermark_ns_);
}

void SessionAssembler::ingest_through(std::int64_t frontier_ns) {
    if (ingest_frontier_ns_ != kNoTs && frontier_ns <= ingest_frontier_ns_) return;
    ingest_frontier_ns_ = frontier_ns;
    while (!buffer_.empty() && buffer_.front().event.ts_ns <= ingest_frontier_ns_) {
        if (table_.ingest(buffer_.front().event) == IngestOutcome::out_of_order) {
            ++out_of_order_;
        } else {
            ++admitted_;
        }
        buffer_.pop_front();
    }
}

std::vector<CallSession> SessionAssembler::seal_idle() {
    // Seal against the ingest frontier: everything at or before it is in the
    // table, and any future accepted event lies beyond the rejection watermark,
    // hence more than a session gap past anything sealed here.
    if (ingest_frontier_ns_ == kNoTs) return {};
    return table_.close_idle(ingest_frontier_ns_);
}

std::vector<CallSession> SessionAssembler::force_idle_flush(std::int64_t extrapolated_now_ns) {
    ingest_through(extrapolated_now_ns - config_.reorder_tolerance_ns);
    if (ingest_frontier_ns_ == kNoTs) return {};
    return table_.close_idle(ingest_frontier_ns_);
}

std::vector<CallSession> SessionAssembler::finish() {
    while (!buffer_.empty()) {
        if (table_.ingest(buffer_.front().event) == IngestOutcome::out_of_order) {
            ++out_of_order_;
        } else {
            ++admitted_;
        }
        buffer_.pop_front();
    }
    if (max_ts_ns_ != kNoTs && max_ts_ns_ > ingest_frontier_ns_) ingest_frontier_ns_ = max_ts_ns_;
    return table_.close_all();
}

json binding_event_to_json(const BindingEvent& ev) {
    return json{{"ts_ns", ev.ts_ns},
                {"src", ev.src.to_string()},
                {"dst", ev.dst.to_string()},
                {"frame_len", ev.frame_len},
                {"stun_length", ev.stun_length},
                {"transaction_id", to_hex(ev.transaction_id)}};
}

BindingEvent binding_event_from_json(const json& j) {
    BindingEvent ev;
    ev.ts_ns = j.at("ts_ns").get<std::int64_t>();
    ev.src = *Endpoint::parse(j.at("src").get<std::string>());
    ev.dst = *Endpoint::parse(j.at("dst").get<std::string>());
    ev.frame_len = j.at("frame_len").get<std::uint32_t>();
    ev.stun_length = j.at("stun_length").get<std::uint16_t>();
    ev.transaction_id = from_hex(j.at("transaction_id").get<std::string>());
    return ev;
}

json SessionAssembler::snapshot() const {
    json buffered = json::array();
    for (const auto& p : buffer_) {
        buffered.push_back(json{{"event", binding_event_to_json(p.event)}, {"arrival", p.arrival}});
    }
    return json{{"table", table_.snapshot()},
                {"buffer", buffered},
                {"max_ts_ns", max_ts_ns_},
                {"reject_watermark_ns", reject_watermark_ns_},
                {"ingest_frontier_ns", ingest_frontier_ns_},
                {"arrival_seq", arrival_seq_},
                {"filtered_private", filtered_private_},
                {"out_of_order", out_of_order_},
                {"admitted", admitted_}};
}

void SessionAssembler::restore(const json& j) {
    table_.restore(j.at("table"));
    buffer_.clear();
    for (const auto& item : j.at("buffer")) {
        buffer_.push_back(Pending{binding_event_from_json(item.at("event")),
                                  item.at("arrival").get<std::uint64_t>()});
    }
    max_ts_ns_ = j.at("max_ts_ns").get<std::int64_t>();
    reject_watermark_ns_ = j.at("reject_watermark_ns").get<std::int64_t>();
    ingest_frontier_ns_ = j.at("ingest_frontier_ns").get<std::int64_t>();
    arrival_seq_ = j.at("arrival_seq").get<std::uint64_t>();
    filtered_private_ = j.at("filtered_private").get<std::uint64_t>();
    out_of_order_ = j.at("out_of_order").get<std::uint64_t>();
    admitted_ = j.at("admitted").get<std::uint64_t>();
}

}  // namespace stunflow
