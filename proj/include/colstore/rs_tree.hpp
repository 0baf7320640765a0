#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "colstore/cdc.hpp"
#include "colstore/hash.hpp"
#include "colstore/keys.hpp"
#include "colstore/proof.hpp"

namespace colstore {

// One tree entry: value for leaves, child hash for internal nodes. For
// internal entries the key is the largest key in the child's subtree.
struct RsEntry {
    CompoundKey key;
    std::array<uint8_t, 32> word{};
};

struct RsNode {
    std::vector<RsEntry> entries;
    Hash32 hash{};

    const CompoundKey& max_key() const { return entries.back().key; }
};

// In-memory rewind-supported Merkle tree. Node boundaries come from the
// CDC cut-point rule, so the structure (and root hash) is a pure function
// of the stored key-value set, independent of update order.
class RsTree {
public:
    RsTree(uint32_t f_exp = 16, uint32_t f_max = 64);

    void insert(const CompoundKey& key, const Value32& value);
    void erase(const CompoundKey& key);

    std::optional<std::pair<uint64_t, Value32>> search_latest(const Address& addr) const;

    std::pair<std::vector<std::pair<CompoundKey, Value32>>, RsRangeProof> search_range(
        const CompoundKey& key_lo, const CompoundKey& key_hi) const;

    Hash32 root_hash() const;
    size_t size() const { return entry_count_; }
    bool empty() const { return entry_count_ == 0; }
    size_t height() const { return levels_.size(); }
    size_t node_count() const;

    bool contains(const CompoundKey& key) const;

    // All key-value pairs in key order.
    std::vector<std::pair<CompoundKey, Value32>> entries() const;

    // Partition sorted entries into nodes at CDC cut points / f_max; the
    // final node may be partial.
    static std::vector<RsNode> cdc_create_nodes(const std::vector<RsEntry>& entries,
                                                const cdc::CdcParams& params);

    uint32_t f_exp() const { return f_exp_; }
    uint32_t f_max() const { return params_.f_max; }

private:
    friend struct RsTreeTestAccess;

    void apply_edit(size_t level, size_t first, size_t last, std::vector<RsEntry> replacement);
    void finalize_top();
    // (leaf index, entry index) of the largest entry < key, if any.
    std::optional<std::pair<size_t, size_t>> predecessor(const CompoundKey& key) const;

    uint32_t f_exp_;
    cdc::CdcParams params_;                 // cnt stays 0; copied per partition
    std::vector<std::vector<RsNode>> levels_;  // [0] = leaves
    size_t entry_count_ = 0;
};

}  // namespace colstore
