#include "stunflow/ledger.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "stunflow/bytes.hpp"
#include "stunflow/timefmt.hpp"

namespace stunflow {

using nlohmann::json;

json BaselineRecord::to_json() const {
    return json{{"case_id", case_id},
                {"investigator", investigator},
                {"started_at_ns", started_at_ns},
                {"started_at", format_iso_utc(started_at_ns)},
                {"tool_version", tool_version},
                {"method_description", method_description},
                {"environment_description", environment_description},
                {"legal_reference", legal_reference},
                {"digest_algorithm", "sha256"}};
}

BaselineRecord BaselineRecord::from_json(const json& j) {
    BaselineRecord b;
    b.case_id = j.at("case_id").get<std::string>();
    b.investigator = j.at("investigator").get<std::string>();
    b.started_at_ns = j.at("started_at_ns").get<std::int64_t>();
    b.tool_version = j.at("tool_version").get<std::string>();
    b.method_description = j.at("method_description").get<std::string>();
    b.environment_description = j.at("environment_description").get<std::string>();
    b.legal_reference = j.at("legal_reference").get<std::string>();
    return b;
}

const char* ledger_action_name(LedgerAction a) {
    switch (a) {
        case LedgerAction::baseline: return "baseline";
        case LedgerAction::segment_stored: return "segment_stored";
        case LedgerAction::segment_mirrored: return "segment_mirrored";
        case LedgerAction::analysis_run: return "analysis_run";
        case LedgerAction::report_emitted: return "report_emitted";
        case LedgerAction::iteration_diff: return "iteration_diff";
        case LedgerAction::suspended: return "suspended";
        case LedgerAction::resumed: return "resumed";
    }
    return "baseline";
}

std::optional<LedgerAction> ledger_action_from_name(std::string_view name) {
    for (auto a : {LedgerAction::baseline, LedgerAction::segment_stored,
                   LedgerAction::segment_mirrored, LedgerAction::analysis_run,
                   LedgerAction::report_emitted, LedgerAction::iteration_diff,
                   LedgerAction::suspended, LedgerAction::resumed}) {
        if (name == ledger_action_name(a)) return a;
    }
    return std::nullopt;
}

namespace {

void put_len_prefixed(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> bytes) {
    put_u32be(out, static_cast<std::uint32_t>(bytes.size()));
    out.insert(out.end(), bytes.begin(), bytes.end());
}

void put_len_prefixed(std::vector<std::uint8_t>& out, std::string_view s) {
    put_len_prefixed(out, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void put_u64_field(std::vector<std::uint8_t>& out, std::uint64_t v) {
    std::vector<std::uint8_t> raw;
    raw.reserve(8);
    for (int shift = 56; shift >= 0; shift -= 8)
        raw.push_back(static_cast<std::uint8_t>(v >> shift));
    put_len_prefixed(out, raw);
}

std::string escape_field(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::optional<std::string> unescape_field(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (++i >= s.size()) return std::nullopt;
        switch (s[i]) {
            case '\\': out += '\\'; break;
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            default: return std::nullopt;
        }
    }
    return out;
}

constexpr std::string_view kMirrorPrefix = "mirror:";

}  // namespace

std::vector<std::uint8_t> canonical_entry_bytes(const LedgerEntry& entry) {
    std::vector<std::uint8_t> out;
    put_u64_field(out, entry.seq);
    put_u64_field(out, static_cast<std::uint64_t>(entry.ts_ns));
    put_len_prefixed(out, entry.actor);
    put_len_prefixed(out, std::string_view(ledger_action_name(entry.action)));
    put_len_prefixed(out, std::span<const std::uint8_t>(entry.prev_hash.data(), entry.prev_hash.size()));
    put_len_prefixed(out, std::span<const std::uint8_t>(entry.payload_hash.data(), entry.payload_hash.size()));
    put_len_prefixed(out, entry.payload_ref);
    return out;
}

std::string encode_ledger_line(const LedgerEntry& entry) {
    std::string line;
    line += std::to_string(entry.seq);
    line += '\t';
    line += std::to_string(entry.ts_ns);
    line += '\t';
    line += escape_field(entry.actor);
    line += '\t';
    line += ledger_action_name(entry.action);
    line += '\t';
    line += digest_hex(entry.prev_hash);
    line += '\t';
    line += digest_hex(entry.payload_hash);
    line += '\t';
    line += escape_field(entry.payload_ref);
    line += '\t';
    line += digest_hex(entry.entry_hash);
    return line;
}

std::optional<LedgerEntry> parse_ledger_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        auto tab = line.find('\t', pos);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
    if (fields.size() != 8) return std::nullopt;

    LedgerEntry e;
    try {
        std::size_t used = 0;
        e.seq = std::stoull(std::string(fields[0]), &used);
        if (used != fields[0].size()) return std::nullopt;
        e.ts_ns = std::stoll(std::string(fields[1]), &used);
        if (used != fields[1].size()) return std::nullopt;
    } catch (const std::exception&) {
        return std::nullopt;
    }
    auto actor = unescape_field(fields[2]);
    auto action = ledger_action_from_name(fields[3]);
    auto prev = digest_from_hex(fields[4]);
    auto payload = digest_from_hex(fields[5]);
    auto ref = unescape_field(fields[6]);
    auto entry = digest_from_hex(fields[7]);
    if (!actor || !action || !prev || !payload || !ref || !entry) return std::nullopt;
    e.actor = *actor;
    e.action = *action;
    e.prev_hash = *prev;
    e.payload_hash = *payload;
    e.payload_ref = *ref;
    e.entry_hash = *entry;
    return e;
}

void write_file_durable(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw LedgerError(LedgerErrorCode::io, "cannot open " + path.string());
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            ::close(fd);
            throw LedgerError(LedgerErrorCode::io, "write failed: " + path.string());
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        throw LedgerError(LedgerErrorCode::io, "fsync failed: " + path.string());
    }
    ::close(fd);
}

void write_file_durable(const std::filesystem::path& path, std::string_view data) {
    write_file_durable(path, std::span<const std::uint8_t>(
                                 reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::filesystem::path Ledger::ledger_file(const std::filesystem::path& case_dir) {
    return case_dir / "ledger.log";
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LedgerError(LedgerErrorCode::io, "cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

struct ChainCheck {
    std::vector<LedgerEntry> entries;
    std::optional<std::uint64_t> first_bad;
};

// Structural verification of the chain itself (no payload re-hashing).
ChainCheck check_chain(const std::vector<std::string>& lines) {
    ChainCheck out;
    Digest expected_prev = kZeroDigest;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto entry = parse_ledger_line(lines[i]);
        if (!entry || entry->seq != i || entry->prev_hash != expected_prev) {
            out.first_bad = i;
            return out;
        }
        Digest recomputed = sha256(canonical_entry_bytes(*entry));
        if (recomputed != entry->entry_hash) {
            out.first_bad = i;
            return out;
        }
        if (i == 0 && entry->action != LedgerAction::baseline) {
            out.first_bad = i;
            return out;
        }
        expected_prev = entry->entry_hash;
        out.entries.push_back(std::move(*entry));
    }
    return out;
}

}  // namespace

Ledger Ledger::create(const std::filesystem::path& case_dir, const BaselineRecord& baseline) {
    auto require = [](const std::string& v, const char* name) {
        if (v.empty())
            throw LedgerError(LedgerErrorCode::empty_baseline_field,
                              std::string("baseline field must not be empty: ") + name);
    };
    require(baseline.case_id, "case_id");
    require(baseline.investigator, "investigator");
    require(baseline.tool_version, "tool_version");
    require(baseline.method_description, "method_description");
    require(baseline.environment_description, "environment_description");
    require(baseline.legal_reference, "legal_reference");
    if (baseline.started_at_ns == 0)
        throw LedgerError(LedgerErrorCode::empty_baseline_field, "baseline started_at not set");

    auto path = ledger_file(case_dir);
    if (std::filesystem::exists(path))
        throw LedgerError(LedgerErrorCode::already_exists,
                          "ledger already exists (append-only discipline): " + path.string());
    std::filesystem::create_directories(case_dir);

    std::string baseline_doc = baseline.to_json().dump(2) + "\n";
    write_file_durable(case_dir / "baseline.json", baseline_doc);

    Ledger ledger(case_dir, {});
    ledger.append_raw(LedgerAction::baseline, baseline.investigator, sha256(baseline_doc),
                      "baseline.json");
    return ledger;
}

Ledger Ledger::open(const std::filesystem::path& case_dir) {
    auto chain = check_chain(read_lines(ledger_file(case_dir)));
    if (chain.first_bad)
        throw LedgerError(LedgerErrorCode::chain_broken,
                          "ledger chain broken at seq " + std::to_string(*chain.first_bad));
    if (chain.entries.empty())
        throw LedgerError(LedgerErrorCode::chain_broken, "ledger has no baseline entry");
    return Ledger(case_dir, std::move(chain.entries));
}

const LedgerEntry& Ledger::append_raw(LedgerAction action, std::string_view actor,
                                      const Digest& payload_hash, const std::string& payload_ref) {
    // Refuse to extend a tampered chain: re-verify the stored lines against
    // the in-memory tail before every append.
    auto path = ledger_file(dir_);
    if (!entries_.empty()) {
        auto chain = check_chain(read_lines(path));
        if (chain.first_bad || chain.entries.size() != entries_.size() ||
            chain.entries.back().entry_hash != entries_.back().entry_hash)
            throw LedgerError(LedgerErrorCode::chain_broken,
                              "ledger verification failed before append");
    }

    LedgerEntry e;
    e.seq = entries_.size();
    e.ts_ns = wall_clock_ns();
    e.actor = std::string(actor);
    e.action = action;
    e.prev_hash = entries_.empty() ? kZeroDigest : entries_.back().entry_hash;
    e.payload_hash = payload_hash;
    e.payload_ref = payload_ref;
    e.entry_hash = sha256(canonical_entry_bytes(e));

    std::string line = encode_ledger_line(e) + "\n";
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw LedgerError(LedgerErrorCode::io, "cannot open " + path.string());
    if (::write(fd, line.data(), line.size()) != static_cast<ssize_t>(line.size())) {
        ::close(fd);
        throw LedgerError(LedgerErrorCode::io, "ledger write failed");
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        throw LedgerError(LedgerErrorCode::io, "ledger fsync failed");
    }
    ::close(fd);

    entries_.push_back(std::move(e));
    return entries_.back();
}

const LedgerEntry& Ledger::append_bytes(LedgerAction action, std::string_view actor,
                                        std::span<const std::uint8_t> payload,
                                        const std::string& payload_ref) {
    return append_raw(action, actor, sha256(payload), payload_ref);
}

const LedgerEntry& Ledger::append_file(LedgerAction action, std::string_view actor,
                                       const std::string& rel_path) {
    return append_raw(action, actor, sha256_file(dir_ / rel_path), rel_path);
}

const LedgerEntry& Ledger::append_external(LedgerAction action, std::string_view actor,
                                           const Digest& payload_hash, const std::string& ref) {
    return append_raw(action, actor, payload_hash, ref);
}

VerifyResult Ledger::verify(const std::filesystem::path& case_dir) {
    std::vector<std::string> lines;
    try {
        lines = read_lines(ledger_file(case_dir));
    } catch (const LedgerError&) {
        return VerifyResult::bad(0);
    }
    auto chain = check_chain(lines);
    if (chain.first_bad) return VerifyResult::bad(*chain.first_bad);
    if (chain.entries.empty()) return VerifyResult::bad(0);

    // Chain holds; now re-hash every reachable payload. Mirror references may
    // live on a detached volume — re-check them only when present.
    for (const auto& e : chain.entries) {
        if (e.payload_ref == "-") continue;
        std::filesystem::path target;
        if (e.payload_ref.rfind(kMirrorPrefix, 0) == 0) {
            target = std::filesystem::path(e.payload_ref.substr(kMirrorPrefix.size()));
            if (!std::filesystem::exists(target)) continue;
        } else {
            target = case_dir / e.payload_ref;
            if (!std::filesystem::exists(target)) return VerifyResult::bad(e.seq);
        }
        try {
            if (sha256_file(target) != e.payload_hash) return VerifyResult::bad(e.seq);
        } catch (const std::exception&) {
            return VerifyResult::bad(e.seq);
        }
    }
    return VerifyResult::good();
}

std::string item_key(const json& item, const std::vector<std::string>& key_fields) {
    std::string key;
    for (const auto& field : key_fields) {
        if (!key.empty()) key += "|";
        key += field + "=";
        if (item.contains(field)) {
            const auto& v = item.at(field);
            key += v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    return key;
}

std::vector<std::string> IterationDiff::non_identical_keys() const {
    std::vector<std::string> keys;
    for (const auto& it : added) keys.push_back(it.key);
    for (const auto& it : removed) keys.push_back(it.key);
    for (const auto& c : changed) keys.push_back(c.key);
    std::sort(keys.begin(), keys.end());
    return keys;
}

json IterationDiff::to_json() const {
    auto items_j = [](const std::vector<DiffItem>& items) {
        json arr = json::array();
        for (const auto& it : items) arr.push_back(json{{"key", it.key}, {"item", it.item}});
        return arr;
    };
    json changed_j = json::array();
    for (const auto& c : changed) {
        json deltas = json::array();
        for (const auto& d : c.deltas)
            deltas.push_back(json{{"field", d.field}, {"before", d.before}, {"after", d.after}});
        changed_j.push_back(json{{"key", c.key}, {"deltas", deltas}});
    }
    return json{{"kind", "diff"},         {"run_a", run_a},
                {"run_b", run_b},         {"identical", identical},
                {"added", items_j(added)}, {"removed", items_j(removed)},
                {"changed", changed_j}};
}

IterationDiff diff_iterations(const json& items_a, const json& items_b,
                              const std::vector<std::string>& key_fields, std::string run_a,
                              std::string run_b) {
    IterationDiff diff;
    diff.run_a = std::move(run_a);
    diff.run_b = std::move(run_b);

    std::map<std::string, json> map_a, map_b;
    for (const auto& item : items_a) map_a.emplace(item_key(item, key_fields), item);
    for (const auto& item : items_b) map_b.emplace(item_key(item, key_fields), item);

    for (const auto& [key, item_a] : map_a) {
        auto it = map_b.find(key);
        if (it == map_b.end()) {
            diff.removed.push_back(DiffItem{key, item_a});
            continue;
        }
        const json& item_b = it->second;
        if (item_a == item_b) {
            diff.identical.push_back(key);
            continue;
        }
        ChangedItem changed{key, {}};
        std::set<std::string> fields;
        for (const auto& [f, v] : item_a.items()) fields.insert(f);
        for (const auto& [f, v] : item_b.items()) fields.insert(f);
        for (const auto& f : fields) {
            json va = item_a.contains(f) ? item_a.at(f) : json();
            json vb = item_b.contains(f) ? item_b.at(f) : json();
            if (va != vb) changed.deltas.push_back(FieldDelta{f, va, vb});
        }
        diff.changed.push_back(std::move(changed));
    }
    for (const auto& [key, item_b] : map_b) {
        if (map_a.count(key)) continue;
        diff.added.push_back(DiffItem{key, item_b});
    }
    return diff;
}

}  // namespace stunflow
