#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "colstore/bytes.hpp"
#include "colstore/keys.hpp"

namespace colstore {

// --- RS-tree range proof -------------------------------------------------

struct RsProofEntry {
    CompoundKey key;
    std::array<uint8_t, 32> word;  // value (leaf) or child hash (internal)
    bool expanded = false;         // internal only: child appears one level down
};

struct RsProofNode {
    std::vector<RsProofEntry> entries;
};

// Levels root-first; the last level holds leaf nodes with full entries.
// An empty proof stands for the empty tree.
struct RsRangeProof {
    std::vector<std::vector<RsProofNode>> levels;

    // Recomputes the root hash from the included nodes; nullopt if the
    // proof is structurally inconsistent.
    std::optional<Hash32> compute_root() const;
};

// --- Version-tree range proof --------------------------------------------

struct VtProofEntry {
    uint64_t blk = 0;
    std::array<uint8_t, 32> word;
    bool expanded = false;
};

struct VtProofNode {
    std::vector<VtProofEntry> entries;
};

struct VtRangeProof {
    std::vector<std::vector<VtProofNode>> levels;

    std::optional<Hash32> compute_root() const;
};

// --- Hash-file Merkle path -----------------------------------------------

// Leaf payload of the per-run MHT: H(addr || blk || value || vt_root).
struct HashFileLeaf {
    Address addr{};
    uint64_t blk = 0;
    Value32 value{};
    Hash32 vt_root{};

    Hash32 leaf_hash() const;
};

// Path for one leaf of the complete f-ary MHT: per level, the full group
// of sibling hashes with our position within the group.
struct HashFilePath {
    uint64_t leaf_index = 0;
    uint64_t leaf_count = 0;
    uint32_t fanout = 0;
    // levels bottom-up; each: sibling hashes of the group (ours excluded),
    // plus our index within the group.
    struct Level {
        uint32_t pos_in_group = 0;
        std::vector<Hash32> siblings;
    };
    std::vector<Level> levels;

    std::optional<Hash32> compute_root(const Hash32& leaf_hash) const;
};

// --- Per-run sub-proof ----------------------------------------------------

enum class SubProofKind : uint8_t { BareRoot = 0, RsPath = 1, RunPath = 2 };

// Presence: the address's hash-file leaf plus its version-tree range proof.
// Absence: the straddling leaves (one or two) proving no leaf holds addr.
struct RunSubProof {
    bool present = false;
    // present
    HashFileLeaf leaf;
    HashFilePath leaf_path;
    VtRangeProof vt_proof;
    std::vector<std::pair<uint64_t, Value32>> versions;  // proven versions from this run
    // absent (bloom positive but addr missing): boundary leaves
    std::vector<HashFileLeaf> absence_leaves;
    std::vector<HashFilePath> absence_paths;

    std::optional<Hash32> compute_root(const Address& query_addr) const;
};

struct SubProof {
    SubProofKind kind = SubProofKind::BareRoot;
    Hash32 bare_root{};          // BareRoot
    RsRangeProof rs;             // RsPath
    RunSubProof run;             // RunPath
};

// Ordered to match the prover's root_hash_list: [dyn, wait, runs...].
struct MerkleProof {
    std::vector<SubProof> subs;

    std::vector<uint8_t> serialize() const;
    static MerkleProof deserialize(std::span<const uint8_t> bytes);
};

// Query results: versions with their originating block heights.
struct ProvResult {
    std::vector<std::pair<uint64_t, Value32>> versions;  // ascending blk

    std::vector<uint8_t> serialize() const;
    static ProvResult deserialize(std::span<const uint8_t> bytes);
};

}  // namespace colstore
