#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stunflow/digest.hpp"

namespace stunflow {

/// Pre-acquisition documentation sealed as ledger entry 0. Every field is
/// required; legality of the legal reference is the operator's problem,
/// presence is ours.
struct BaselineRecord {
    std::string case_id;
    std::string investigator;
    std::int64_t started_at_ns = 0;
    std::string tool_version;
    std::string method_description;
    std::string environment_description;
    std::string legal_reference;

    nlohmann::json to_json() const;
    static BaselineRecord from_json(const nlohmann::json& j);
};

enum class LedgerAction {
    baseline,
    segment_stored,
    segment_mirrored,
    analysis_run,
    report_emitted,
    iteration_diff,
    suspended,
    resumed,
};

const char* ledger_action_name(LedgerAction a);
std::optional<LedgerAction> ledger_action_from_name(std::string_view name);

struct LedgerEntry {
    std::uint64_t seq = 0;
    std::int64_t ts_ns = 0;  // wall clock
    std::string actor;
    LedgerAction action = LedgerAction::baseline;
    Digest prev_hash{};
    Digest payload_hash{};
    std::string payload_ref;  // case-relative path, "mirror:<path>", or "-" for inline-only
    Digest entry_hash{};
};

/// Canonical binary form hashed into entry_hash: length-prefixed field
/// concatenation in fixed order (seq, ts, actor, action, prev_hash,
/// payload_hash, payload_ref), integers big-endian fixed width.
std::vector<std::uint8_t> canonical_entry_bytes(const LedgerEntry& entry);

struct VerifyResult {
    bool ok = true;
    std::uint64_t first_bad_seq = 0;

    static VerifyResult good() { return {true, 0}; }
    static VerifyResult bad(std::uint64_t seq) { return {false, seq}; }
};

enum class LedgerErrorCode {
    empty_baseline_field,
    chain_broken,
    bad_resume_token,
    already_exists,
    io,
};

struct LedgerError : std::runtime_error {
    LedgerErrorCode code;
    LedgerError(LedgerErrorCode c, const std::string& what)
        : std::runtime_error(what), code(c) {}
};

/*
 * Append-only custody ledger.
 *
 * One text line per entry under <case_dir>/ledger.log:
 *   seq<TAB>ts_ns<TAB>actor<TAB>action<TAB>prev_hash<TAB>payload_hash<TAB>payload_ref<TAB>entry_hash
 * Free-text fields escape tab, newline and backslash, digests are lowercase
 * hex, so a human can read the file and any splice shows up in verify.
 *
 * Chain rule: entry_hash(n) = SHA-256 over the canonical bytes, which include
 * prev_hash(n) == entry_hash(n-1); genesis prev_hash is 32 zero bytes. Appends
 * re-verify the stored chain first and are flushed to disk before returning.
 *
 * Single writer per ledger; verification is read-only and may run alongside.
 */
class Ledger {
public:
    static Ledger create(const std::filesystem::path& case_dir, const BaselineRecord& baseline);
    static Ledger open(const std::filesystem::path& case_dir);

    const LedgerEntry& append_bytes(LedgerAction action, std::string_view actor,
                                    std::span<const std::uint8_t> payload,
                                    const std::string& payload_ref = "-");
    const LedgerEntry& append_file(LedgerAction action, std::string_view actor,
                                   const std::string& rel_path);
    const LedgerEntry& append_external(LedgerAction action, std::string_view actor,
                                       const Digest& payload_hash, const std::string& ref);

    static VerifyResult verify(const std::filesystem::path& case_dir);

    const std::vector<LedgerEntry>& entries() const { return entries_; }
    std::uint64_t next_seq() const { return entries_.size(); }
    const std::filesystem::path& dir() const { return dir_; }
    static std::filesystem::path ledger_file(const std::filesystem::path& case_dir);

private:
    Ledger(std::filesystem::path dir, std::vector<LedgerEntry> entries)
        : dir_(std::move(dir)), entries_(std::move(entries)) {}

    const LedgerEntry& append_raw(LedgerAction action, std::string_view actor,
                                  const Digest& payload_hash, const std::string& payload_ref);

    std::filesystem::path dir_;
    std::vector<LedgerEntry> entries_;
};

std::string encode_ledger_line(const LedgerEntry& entry);
std::optional<LedgerEntry> parse_ledger_line(std::string_view line);

/// Comparison of two analysis runs' item lists (JSON objects keyed by the
/// identity fields). The four lists partition the union of both runs' items.
struct FieldDelta {
    std::string field;
    nlohmann::json before;
    nlohmann::json after;
};

struct ChangedItem {
    std::string key;
    std::vector<FieldDelta> deltas;
};

struct DiffItem {
    std::string key;
    nlohmann::json item;
};

struct IterationDiff {
    std::string run_a;
    std::string run_b;
    std::vector<std::string> identical;  // item keys
    std::vector<DiffItem> added;         // only in run_b
    std::vector<DiffItem> removed;       // only in run_a
    std::vector<ChangedItem> changed;

    bool all_identical() const { return added.empty() && removed.empty() && changed.empty(); }
    std::vector<std::string> non_identical_keys() const;
    nlohmann::json to_json() const;
};

std::string item_key(const nlohmann::json& item, const std::vector<std::string>& key_fields);

IterationDiff diff_iterations(const nlohmann::json& items_a, const nlohmann::json& items_b,
                              const std::vector<std::string>& key_fields,
                              std::string run_a = {}, std::string run_b = {});

/// write + flush + fsync; the flush-before-ack contract for evidence files.
void write_file_durable(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_file_durable(const std::filesystem::path& path, std::string_view data);

}  // namespace stunflow
