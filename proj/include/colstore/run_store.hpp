#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "colstore/bloom.hpp"
#include "colstore/keys.hpp"
#include "colstore/learned_index.hpp"
#include "colstore/proof.hpp"
#include "colstore/version_tree.hpp"

namespace colstore {

// Parameters a run needs from the engine configuration.
struct RunConfig {
    uint32_t fanout = 4;  // hash-file MHT fanout
    uint32_t f_exp = 16;  // CDC expected fanout (version trees)
    uint32_t f_max = 64;  // CDC forced-cut fanout
    // keep_recent versions retained per tree after pruning; nullopt keeps
    // full archive trees.
    std::optional<uint64_t> keep_recent;
};

// One row of the state file: the latest version of an address in this run
// plus the byte offset of its version tree in the version file.
struct StateEntry {
    Address addr{};
    uint64_t blk = 0;
    Value32 value{};
    uint64_t version_offset = 0;
};

// Result of a per-run provenance lookup.
struct RunVersions {
    std::vector<std::pair<uint64_t, Value32>> versions;
    RunSubProof proof;
    // version range held by this run's tree for the address (0/0 if absent)
    uint64_t tree_min_blk = 0;
    uint64_t tree_max_blk = 0;
};

// Immutable on-disk sorted run: state, index, version and hash files plus a
// Bloom filter sidecar. File contents are a pure function of the logical
// entries, independent of level/run ids (those appear only in file names).
class Run {
public:
    static constexpr size_t kPageSize = 4096;
    static constexpr size_t kEntrySize = 80;  // addr(32) blk(8) value(32) offset(8)
    static constexpr size_t kEntriesPerPage = kPageSize / kEntrySize;  // 51

    // entries sorted by compound key; one version tree per address.
    static Run build_from_flush(const std::string& dir, uint32_t level, uint32_t run_id,
                                const std::vector<std::pair<CompoundKey, Value32>>& entries,
                                const RunConfig& cfg);

    // runs ordered oldest to newest; per-address trees merged chronologically.
    static Run build_from_merge(const std::string& dir, uint32_t level, uint32_t run_id,
                                const std::vector<const Run*>& runs, const RunConfig& cfg);

    // Reload a previously built run from its files.
    static Run open(const std::string& dir, uint32_t level, uint32_t run_id,
                    const RunConfig& cfg);

    // Latest version of addr in this run; at most two state-file page reads.
    std::optional<std::pair<uint64_t, Value32>> get_latest(const Address& addr) const;

    // Versions of addr in [blk_l, blk_u] with a sub-proof against this
    // run's root; absence yields a straddling-leaf proof.
    RunVersions get_versions(const Address& addr, uint64_t blk_l, uint64_t blk_u) const;

    const Hash32& root_hash() const { return root_hash_; }
    uint64_t min_blk() const { return min_blk_; }
    uint64_t max_blk() const { return max_blk_; }
    uint64_t entry_count() const { return entry_count_; }
    uint64_t page_count() const { return (entry_count_ + kEntriesPerPage - 1) / kEntriesPerPage; }
    uint32_t level() const { return level_; }
    uint32_t run_id() const { return run_id_; }

    // Full scans used by merges and reorg rebuilds.
    std::vector<StateEntry> all_state_entries() const;
    VersionTree read_version_tree(uint64_t offset) const;

    void remove_files() const;
    std::string file_path(const char* ext) const;

    uint64_t page_reads() const { return page_reads_; }
    void reset_page_reads() const { page_reads_ = 0; }

private:
    struct AddrRecord {
        Address addr;
        uint64_t latest_blk;
        Value32 latest_value;
        VersionTree tree;
    };
    static Run build_files(const std::string& dir, uint32_t level, uint32_t run_id,
                           std::vector<AddrRecord> records, const RunConfig& cfg);

    // Locate addr's state entry; on absence, the global indices of the
    // straddling entries (either may be missing at the ends).
    struct Lookup {
        std::optional<StateEntry> entry;
        uint64_t leaf_index = 0;
        std::optional<uint64_t> pred_index, succ_index;
    };
    Lookup find_state_entry(const Address& addr) const;
    StateEntry read_entry(uint64_t index) const;
    HashFilePath hash_path(uint64_t leaf_index) const;
    HashFileLeaf leaf_for(const StateEntry& e) const;

    std::string dir_;
    uint32_t level_ = 0, run_id_ = 0;
    RunConfig cfg_;
    BloomFilter bloom_;
    LearnedIndex index_;  // replaced on build/open
    Hash32 root_hash_{};
    uint64_t min_blk_ = 0, max_blk_ = 0;
    uint64_t entry_count_ = 0;
    mutable uint64_t page_reads_ = 0;

    Run() = default;
};

}  // namespace colstore
