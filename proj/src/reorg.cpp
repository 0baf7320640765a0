#include "colstore/reorg.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>

namespace colstore {

namespace fs = std::filesystem;

namespace {

void erase_after(RsTree& tree, uint64_t blk_rew) {
    for (const auto& [k, v] : tree.entries())
        if (k.blk > blk_rew) tree.erase(k);
}

void remove_checkpoints_after(const Engine& e, uint64_t blk_rew) {
    std::vector<fs::path> doomed;
    for (const auto& de : fs::directory_iterator(e.config().data_dir)) {
        unsigned long long b = 0;
        if (std::sscanf(de.path().filename().c_str(), "ckpt_%020llu.bin", &b) == 1 &&
            b > blk_rew)
            doomed.push_back(de.path());
    }
    for (const auto& p : doomed) fs::remove(p);
}

void apply_suffix(Engine& e, const ForkRequest& fork) {
    for (const auto& b : fork.canonical_suffix) {
        if (b.blk != e.head() + 1)
            throw Error("canonical suffix must be contiguous from blk_rew + 1");
        e.apply_block(b.blk, b.puts);
    }
}

}  // namespace

bool can_rewind_in_memory(const Engine& engine, uint64_t blk_rew) {
    return blk_rew >= engine.flushed_max_blk();
}

void rewind_in_memory(Engine& e, const ForkRequest& fork) {
    if (fork.blk_rew > e.head_) throw Error("rewind target is beyond the current head");
    if (!can_rewind_in_memory(e, fork.blk_rew))
        throw RewindTooDeep("rewound states reach on-disk runs");

    e.truncate_wal_after_block(fork.blk_rew);

    uint64_t wait_max = 0;
    for (const auto& [k, v] : e.wait_.entries()) wait_max = std::max(wait_max, k.blk);
    if (e.wait_.empty() || fork.blk_rew >= wait_max) {
        // case A: the rewind is confined to the dynamic group
        erase_after(e.dyn_, fork.blk_rew);
    } else {
        // case B: discard dyn, reinstate wait as the new dynamic group, and
        // serve digests from the flush snapshot until the groups refill
        if (!e.last_ckpt_) throw RewindTooDeep("no flush snapshot available");
        e.dyn_ = std::move(e.wait_);
        e.wait_ = RsTree(e.cfg_.f_exp, e.cfg_.f_max);
        erase_after(e.dyn_, fork.blk_rew);
        e.blocked_ = true;
        e.snapshot_tail_.assign(e.last_ckpt_->pre_flush.begin() + 1,
                                e.last_ckpt_->pre_flush.end());
        remove_checkpoints_after(e, fork.blk_rew);
    }
    e.head_ = fork.blk_rew;
    apply_suffix(e, fork);
}

void chain_reorg_on_disk(Engine& e, const ForkRequest& fork) {
    auto ck = e.latest_checkpoint_before(fork.blk_rew);
    if (!ck) throw NoCheckpointBeforeRewind("no checkpoint at or before the rewind block");

    // All states reachable from the current index, used to rebuild changed
    // tiers without re-executing transactions.
    std::map<CompoundKey, Value32> all;
    for (const RsTree* tree : {&e.dyn_, &e.wait_})
        for (const auto& [k, v] : tree->entries()) all[k] = v;
    for (const auto& level : e.levels_) {
        for (const Run& run : level) {
            for (const StateEntry& se : run.all_state_entries()) {
                VersionTree t = run.read_version_tree(se.version_offset);
                for (const auto& [b, v] : t.retained_versions()) all[{se.addr, b}] = v;
            }
        }
    }

    // Pull the current runs out, keyed for retention matching.
    std::map<std::pair<uint32_t, uint32_t>, Run> old_runs;
    for (auto& level : e.levels_)
        for (Run& run : level)
            old_runs.emplace(std::make_pair(run.level(), run.run_id()), std::move(run));
    e.levels_.clear();

    // Restore the checkpoint's run layout: retain matching runs, rebuild the
    // rest from the gathered states within each run's block range.
    uint32_t max_level = 0;
    for (const auto& entry : ck->post_runs) max_level = std::max(max_level, entry.level);
    std::vector<std::vector<Run>> new_levels(
        std::max<size_t>(max_level, ck->next_run_id.size()));
    size_t retained = 0;
    for (auto it = ck->post_runs.rbegin(); it != ck->post_runs.rend(); ++it) {
        // reversed: oldest level / oldest run first
        auto key = std::make_pair(it->level, it->run_id);
        auto found = old_runs.find(key);
        if (found != old_runs.end() && found->second.root_hash() == it->hash) {
            new_levels[it->level - 1].push_back(std::move(found->second));
            old_runs.erase(found);
            ++retained;
            continue;
        }
        std::vector<std::pair<CompoundKey, Value32>> states;
        for (const auto& [k, v] : all)
            if (k.blk >= it->min_blk && k.blk <= it->max_blk) states.emplace_back(k, v);
        Run rebuilt =
            Run::build_from_flush(e.cfg_.data_dir, it->level, it->run_id, states,
                                  e.run_config());
        if (!(rebuilt.root_hash() == it->hash)) {
            rebuilt.remove_files();
            throw InsufficientRetention(
                "rebuilt run does not match the checkpoint (pruned states missing?)");
        }
        new_levels[it->level - 1].push_back(std::move(rebuilt));
    }
    (void)retained;

    // Rebuild the waiting group from its WAL window.
    RsTree new_wait(e.cfg_.f_exp, e.cfg_.f_max);
    for (const auto& [blk, a, v] : e.wal_read(ck->wait_start, ck->wait_end))
        new_wait.insert({a, blk}, v);
    if (!(new_wait.root_hash() == ck->pre_flush[0].hash))
        throw CorruptCheckpoint("waiting group mismatch after log replay");

    // Discard runs absent from the restored layout, and checkpoints and WAL
    // records of rewound blocks.
    for (const auto& [key, run] : old_runs) run.remove_files();
    remove_checkpoints_after(e, fork.blk_rew);
    e.truncate_wal_after_block(fork.blk_rew);

    e.levels_ = std::move(new_levels);
    e.next_run_id_ = ck->next_run_id;
    e.next_run_id_.resize(std::max(e.levels_.size(), e.next_run_id_.size()), 1);
    e.wait_ = std::move(new_wait);
    e.dyn_ = RsTree(e.cfg_.f_exp, e.cfg_.f_max);
    e.flushed_max_blk_ = 0;
    for (const auto& entry : ck->post_runs)
        if (entry.has_blocks) e.flushed_max_blk_ = std::max(e.flushed_max_blk_, entry.max_blk);
    e.blocked_ = false;
    e.snapshot_tail_.clear();
    e.last_ckpt_ = *ck;
    e.head_ = ck->block;  // the checkpoint block flushed fully at its commit
    e.dyn_start_ = ck->wait_end;

    // Replay this node's own blocks between the checkpoint and the common
    // ancestor (they are canonical and still in the WAL), then the suffix.
    e.replay_records(ck->wait_end, e.wal_record_count());
    e.head_ = std::max(e.head_, fork.blk_rew);
    apply_suffix(e, fork);
}

}  // namespace colstore
