#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "colstore/engine.hpp"

namespace colstore {

// A chain switch: rewind to common ancestor blk_rew, then append the
// canonical blocks (contiguous from blk_rew + 1).
struct ForkRequest {
    uint64_t blk_rew = 0;
    struct Block {
        uint64_t blk = 0;
        std::vector<std::pair<Address, Value32>> puts;
    };
    std::vector<Block> canonical_suffix;
};

// True when every state written after blk_rew still lives in the in-memory
// groups, so the frequent (memory-only) rewind path applies.
bool can_rewind_in_memory(const Engine& engine, uint64_t blk_rew);

// Frequent path: rewind within dyn/wait, then replay the canonical suffix.
// While the rewind spans both groups the engine stays blocked (digests come
// from the last flush snapshot) until the groups refill to the flush point.
void rewind_in_memory(Engine& engine, const ForkRequest& fork);

// Rare path: restore the latest checkpoint at or before blk_rew, retain
// unchanged runs, rebuild changed tiers from the current index, then replay
// first the engine's own blocks up to blk_rew and then the canonical suffix.
void chain_reorg_on_disk(Engine& engine, const ForkRequest& fork);

}  // namespace colstore
