#pragma once

#include <span>

#include "colstore/proof.hpp"

namespace colstore {

// Client-side verification outcome. Accept means the results are exactly the
// committed versions of the address inside [blk_l, blk_u] under the digest.
enum class Verdict {
    Accept,
    DigestMismatch,       // recomputed digest differs, or a result value
                          // contradicts the committed one
    GapInVersions,        // results add, drop, or miss committed versions
    Malformed,            // proof is structurally inconsistent
    IndeterminatePruned,  // completeness not provable: the proof stops at a
                          // pruned region of a version tree
};

const char* verdict_name(Verdict v);

// Pure function of its arguments: recomputes every sub-proof root, hashes the
// concatenation against the digest, and checks that the results equal the
// proven in-range versions with all boundary witnesses in place.
Verdict verify_prov(const Hash32& digest, const Address& addr, uint64_t blk_l, uint64_t blk_u,
                    const ProvResult& results, const MerkleProof& proof);

// Same, from wire bytes; returns Malformed when either blob fails to parse.
Verdict verify_prov_bytes(const Hash32& digest, const Address& addr, uint64_t blk_l,
                          uint64_t blk_u, std::span<const uint8_t> results_bytes,
                          std::span<const uint8_t> proof_bytes);

}  // namespace colstore
