#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "colstore/bytes.hpp"
#include "colstore/cdc.hpp"
#include "colstore/errors.hpp"
#include "colstore/hash.hpp"
#include "colstore/keys.hpp"
#include "colstore/proof.hpp"

namespace colstore {

// One version-tree entry: for leaves the word is the state value at that
// block; for internal nodes the word is the child hash and blk is the
// largest version in the child's subtree.
struct VtEntry {
    uint64_t blk = 0;
    std::array<uint8_t, 32> word{};
};

struct VtNode {
    std::vector<VtEntry> entries;
    Hash32 hash{};

    uint64_t max_blk() const { return entries.back().blk; }
};

// Prunable CDC Merkle tree over one address's historical <blk, value>
// pairs. Node boundaries come from the CDC cut-point rule, so the
// structure is a pure function of the version list; trees over disjoint
// version ranges can be merged using only boundary nodes, and interior
// nodes can be pruned without changing the root hash.
class VersionTree {
public:
    VersionTree(uint32_t f_exp = 16, uint32_t f_max = 64);

    // Bottom-up construction from strictly increasing versions.
    static VersionTree build(const std::vector<std::pair<uint64_t, Value32>>& pairs,
                             uint32_t f_exp = 16, uint32_t f_max = 64);

    // Merge two trees whose version ranges do not overlap (all versions of
    // t_l below all versions of t_r). Works on pruned inputs as long as
    // the boundary nodes required by the retention rule are present.
    static VersionTree merge(const VersionTree& t_l, const VersionTree& t_r);

    // Drop all nodes except the boundary paths required for future merges
    // (leftmost node per level plus successors while at f_max capacity,
    // rightmost node per level, their ancestors) and the leaves covering
    // the keep_recent most recent versions. Root hash is unchanged.
    VersionTree prune(uint64_t keep_recent = 0) const;

    // Versions with blk in [blk_l, blk_u] plus a proof whose expanded
    // boundary leaves witness completeness on both sides.
    std::pair<std::vector<std::pair<uint64_t, Value32>>, VtRangeProof> query_range(
        uint64_t blk_l, uint64_t blk_u) const;

    Hash32 root_hash() const;
    bool empty() const { return levels_.empty(); }
    bool pruned() const;
    size_t height() const { return levels_.size(); }
    size_t node_count() const;  // retained nodes
    uint64_t min_blk() const;   // requires non-empty
    uint64_t max_blk() const;

    // <blk, value> pairs held by retained leaves, ascending.
    std::vector<std::pair<uint64_t, Value32>> retained_versions() const;

    // Canonical breadth-first encoding (see docs/version_file.md).
    std::vector<uint8_t> serialize_bfs() const;
    static VersionTree deserialize_bfs(ByteReader& r, uint32_t f_exp, uint32_t f_max);
    static VersionTree deserialize_bfs(std::span<const uint8_t> bytes, uint32_t f_exp,
                                       uint32_t f_max);

    uint32_t f_exp() const { return f_exp_; }
    uint32_t f_max() const { return params_.f_max; }

    // Partition entries into nodes at CDC cut points / f_max.
    static std::vector<VtNode> cdc_create_nodes(const std::vector<VtEntry>& entries,
                                                const cdc::CdcParams& params);

private:
    friend struct VersionTreeTestAccess;

    // Sparse level: node_count is the number of positions the level has in
    // the full tree; only retained positions appear in the map.
    struct Level {
        uint64_t node_count = 0;
        std::map<uint64_t, VtNode> nodes;
    };

    const VtNode* node_at(size_t level, uint64_t pos) const;
    const VtNode& need_node(size_t level, uint64_t pos, const char* what) const;
    // Position at level-1 of the first child of node (level, pos).
    uint64_t first_child_index(size_t level, uint64_t pos) const;
    // (parent position, entry offset) of child index at level-1.
    std::pair<uint64_t, size_t> locate_parent(size_t level, uint64_t child) const;
    std::optional<uint64_t> floor_leaf(uint64_t y) const;    // leaf of largest blk <= y
    std::optional<uint64_t> ceil_leaf_ge(uint64_t x) const;  // leaf of smallest blk >= x
    uint64_t rightmost_leaf_of(size_t level, uint64_t pos) const;
    void build_upper_levels();

    uint32_t f_exp_;
    cdc::CdcParams params_;      // cnt stays 0; copied per partition
    std::vector<Level> levels_;  // [0] = leaves
};

}  // namespace colstore
