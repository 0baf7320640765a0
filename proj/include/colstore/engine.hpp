#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "colstore/proof.hpp"
#include "colstore/rs_tree.hpp"
#include "colstore/run_store.hpp"

namespace colstore {

struct EngineConfig {
    std::string data_dir;
    uint64_t B = 8;       // in-memory capacity; a group is promoted at the
                          // first block commit where it holds >= B/2 entries,
                          // so flushes always fall on block boundaries; even
    uint32_t T = 2;       // size ratio: runs per level before a merge
    uint32_t fanout = 4;  // hash-file MHT fanout
    uint32_t f_exp = 16;  // CDC expected fanout (RS-trees and version trees)
    uint32_t f_max = 64;  // CDC forced-cut fanout
    std::optional<uint64_t> keep_recent;  // versions kept per pruned tree; nullopt = archive
};

// One entry of a checkpointed root_hash_list, with the block-range metadata
// used when a rewind has to rebuild the corresponding tier.
struct CkptEntry {
    Hash32 hash{};
    bool is_run = false;
    uint32_t level = 0, run_id = 0;  // runs only
    uint64_t min_blk = 0, max_blk = 0;
    bool has_blocks = false;  // false for an empty tier
};

// Durable snapshot taken at every flush point: the pre-flush root_hash_list
// (for digest catch-up after in-memory rewinds and for on-disk rewinds) plus
// the post-flush run layout and WAL window needed for crash recovery.
struct Checkpoint {
    uint64_t block = 0;
    uint64_t wait_start = 0, wait_end = 0;  // WAL record indices [start, end)
    std::vector<CkptEntry> pre_flush;       // [dyn, wait, runs newest-first]
    std::vector<CkptEntry> post_runs;       // runs after flush + cascade, newest-first
    std::vector<uint32_t> next_run_id;      // per level (L1 first)

    std::vector<uint8_t> serialize() const;
    static Checkpoint deserialize(std::span<const uint8_t> bytes);
};

// Top-level LSM engine: two in-memory RS-tree groups plus on-disk sorted
// runs, with per-block index digests over the ordered root_hash_list.
class Engine {
public:
    explicit Engine(EngineConfig cfg);  // opens or recovers data_dir
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    // Writes at block height head()+1.
    void put(const Address& addr, const Value32& value);
    // Finalizes block blk (== head()+1) and returns the index digest.
    Hash32 commit_block(uint64_t blk);

    std::optional<std::pair<uint64_t, Value32>> get(const Address& addr) const;

    std::pair<ProvResult, MerkleProof> prov_query(const Address& addr, uint64_t blk_l,
                                                  uint64_t blk_u) const;

    // Ordered tier roots: [dyn, wait, runs newest-level-first, newest-run-
    // first]; the index digest is the hash of their concatenation.
    std::vector<Hash32> root_hash_list() const;
    Hash32 digest() const;

    // Puts plus commit for one block; unlike put() this is also allowed
    // during the post-rewind catch-up window.
    void apply_block(uint64_t blk, const std::vector<std::pair<Address, Value32>>& puts);

    uint64_t head() const { return head_; }
    uint64_t flushed_max_blk() const { return flushed_max_blk_; }
    bool blocked() const { return blocked_; }
    const EngineConfig& config() const { return cfg_; }

    size_t dyn_size() const { return dyn_.size(); }
    size_t wait_size() const { return wait_.size(); }
    size_t level_count() const { return levels_.size(); }
    size_t run_count(size_t level) const { return levels_[level].size(); }
    const Run& run_at(size_t level, size_t idx) const { return levels_[level][idx]; }

    // Crash-injection hook: throws IoError at the given internal step of the
    // next flush (1 = after run files written, 2 = after checkpoint written,
    // 3 = after old runs deleted). 0 disables.
    void set_crash_point(int step) { crash_point_ = step; }

private:
    friend struct EngineTestAccess;
    friend void rewind_in_memory(Engine&, const struct ForkRequest&);
    friend void chain_reorg_on_disk(Engine&, const struct ForkRequest&);

    RunConfig run_config() const;
    void put_internal(const Address& addr, const Value32& value, uint64_t blk);
    void maybe_flush();
    void flush();
    uint64_t cur_rec() const;  // WAL index of the next record (real or replayed)
    void replay_records(uint64_t first, uint64_t last);
    void cascade(std::vector<Run>& pending_delete);
    std::vector<CkptEntry> live_entries() const;  // [dyn, wait, runs...]
    std::vector<CkptEntry> current_entries() const;  // snapshot tail when blocked
    void write_checkpoint(const Checkpoint& ck);
    std::string checkpoint_path(uint64_t blk) const;
    void wal_append(uint64_t blk, const Address& addr, const Value32& value);
    void wal_sync();
    void wal_truncate(uint64_t record_count);
    void truncate_wal_after_block(uint64_t blk);
    std::vector<std::tuple<uint64_t, Address, Value32>> wal_read(uint64_t first,
                                                                 uint64_t last) const;
    uint64_t wal_record_count() const;
    void recover();
    static CkptEntry mem_entry(const RsTree& tree);
    static CkptEntry run_entry(const Run& run);
    std::optional<Checkpoint> latest_checkpoint_before(uint64_t blk) const;

    EngineConfig cfg_;
    uint64_t head_ = 0;  // last committed block
    RsTree dyn_, wait_;
    std::vector<std::vector<Run>> levels_;  // [0] = L1; runs oldest-first
    std::vector<uint32_t> next_run_id_;     // per level
    uint64_t flushed_max_blk_ = 0;          // newest block with any on-disk state
    uint64_t wal_count_ = 0;                // records written
    uint64_t dyn_start_ = 0;                // WAL index of dyn's first record
    uint64_t replay_cursor_ = 0;            // next WAL index during replay
    int wal_fd_ = -1;
    bool blocked_ = false;                   // post-rewind catch-up window
    std::vector<CkptEntry> snapshot_tail_;   // checkpoint entries [1..] while blocked
    std::optional<Checkpoint> last_ckpt_;
    bool replaying_ = false;  // suppress WAL/checkpoint writes during recovery
    int crash_point_ = 0;
};

}  // namespace colstore
