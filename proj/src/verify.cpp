#include "colstore/verify.hpp"

#include <map>

#include "colstore/hash.hpp"

namespace colstore {

namespace {

// Range-proof shape shared by RS-tree and version-tree proofs: levels run
// root-first; every upper level must expand one contiguous, nonempty run of
// entries, and completeness follows from boundary witnesses around that run.
struct Coverage {
    bool structural = false;  // contiguous single run per level, nonempty nodes
    bool left = false;        // nothing in range hidden left of the expansion
    bool right = false;       // ... or right of it
    bool leaf_below = false;  // expanded leaf entry strictly below the range
    bool upper_below = false; // entry left of the run proves content below it
    std::vector<std::pair<uint64_t, Value32>> in_range;  // ascending blk
};

// key_of(entry) -> Key (internal entries carry their subtree's max key);
// on_leaf(entry) classifies expanded leaf entries into Coverage.
template <typename Node, typename Key, typename KeyOf, typename LeafFn>
Coverage analyze_range_proof(const std::vector<std::vector<Node>>& levels, const Key& lo,
                             const Key& hi, KeyOf key_of, LeafFn on_leaf) {
    Coverage c;
    if (levels.empty()) {  // the empty tree: trivially complete
        c.structural = c.left = c.right = true;
        return c;
    }
    if (levels.back().empty()) return c;

    bool upper_left_ok = true;  // every level: run at offset 0 or witness before it
    bool rightmost = true;
    for (size_t k = 0; k + 1 < levels.size(); ++k) {
        std::ptrdiff_t run_start = -1, run_end = -1, total = 0;
        bool gap_after_run = false;
        std::optional<Key> preceding;
        for (const auto& n : levels[k]) {
            if (n.entries.empty()) return c;
            for (const auto& e : n.entries) {
                if (e.expanded) {
                    if (run_start >= 0 && gap_after_run) return c;  // split run
                    if (run_start < 0) run_start = total;
                    run_end = total;
                } else if (run_start < 0) {
                    preceding = key_of(e);
                } else {
                    gap_after_run = true;
                }
                ++total;
            }
        }
        if (run_start < 0) return c;  // nothing expanded above a present level
        if (run_start > 0) {
            if (!preceding) return c;
            if (*preceding < lo)
                c.upper_below = true;
            else
                upper_left_ok = false;
        }
        if (run_end != total - 1) rightmost = false;
    }

    std::optional<Key> first_key, last_key;
    for (const auto& n : levels.back()) {
        if (n.entries.empty()) return c;
        for (const auto& e : n.entries) {
            if (e.expanded) return c;  // leaf entries have nothing below them
            if (!first_key) first_key = key_of(e);
            last_key = key_of(e);
            on_leaf(e, c);
        }
    }
    c.structural = true;
    c.left = upper_left_ok || *first_key < lo;
    c.right = rightmost || hi < *last_key;
    return c;
}

Coverage analyze_rs(const RsRangeProof& p, const Address& addr, uint64_t blk_l,
                    uint64_t blk_u) {
    CompoundKey lo{addr, blk_l}, hi{addr, blk_u};
    return analyze_range_proof(
        p.levels, lo, hi, [](const RsProofEntry& e) { return e.key; },
        [&](const RsProofEntry& e, Coverage& c) {
            if (!(e.key.addr == addr)) return;
            if (e.key.blk < blk_l) c.leaf_below = true;
            if (e.key.blk >= blk_l && e.key.blk <= blk_u)
                c.in_range.emplace_back(e.key.blk, e.word);
        });
}

Coverage analyze_vt(const VtRangeProof& p, uint64_t blk_l, uint64_t blk_u) {
    return analyze_range_proof(
        p.levels, blk_l, blk_u, [](const VtProofEntry& e) { return e.blk; },
        [&](const VtProofEntry& e, Coverage& c) {
            if (e.blk < blk_l) c.leaf_below = true;
            if (e.blk >= blk_l && e.blk <= blk_u) c.in_range.emplace_back(e.blk, e.word);
        });
}

}  // namespace

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Accept: return "accept";
        case Verdict::DigestMismatch: return "digest-mismatch";
        case Verdict::GapInVersions: return "gap-in-versions";
        case Verdict::Malformed: return "malformed";
        case Verdict::IndeterminatePruned: return "indeterminate-pruned";
    }
    return "unknown";
}

Verdict verify_prov(const Hash32& digest, const Address& addr, uint64_t blk_l, uint64_t blk_u,
                    const ProvResult& results, const MerkleProof& proof) {
    if (blk_l > blk_u) return Verdict::Malformed;

    std::vector<uint8_t> concat;
    bool have_below = false;          // proven version of addr strictly below blk_l
    bool bare_without_witness = false;
    bool rs_gap = false, vt_gap = false;
    std::map<uint64_t, Value32> proven;

    auto merge = [&](const std::vector<std::pair<uint64_t, Value32>>& vs) {
        for (const auto& [blk, v] : vs)
            if (!proven.emplace(blk, v).second) return false;  // duplicate height
        return true;
    };

    for (const auto& sub : proof.subs) {
        Hash32 root{};
        switch (sub.kind) {
            case SubProofKind::BareRoot:
                // sound only once an older version of addr is already proven:
                // deeper tiers then hold strictly older versions, all below range
                if (!have_below) bare_without_witness = true;
                root = sub.bare_root;
                break;
            case SubProofKind::RsPath: {
                auto r = sub.rs.compute_root();
                if (!r) return Verdict::Malformed;
                Coverage c = analyze_rs(sub.rs, addr, blk_l, blk_u);
                if (!c.structural) return Verdict::Malformed;
                if (!(c.left && c.right)) rs_gap = true;
                if (c.leaf_below) have_below = true;
                if (!merge(c.in_range)) return Verdict::Malformed;
                root = *r;
                break;
            }
            case SubProofKind::RunPath: {
                auto r = sub.run.compute_root(addr);
                if (!r) return Verdict::Malformed;
                if (sub.run.present) {
                    Coverage c = analyze_vt(sub.run.vt_proof, blk_l, blk_u);
                    if (!c.structural) return Verdict::Malformed;
                    if (c.in_range != sub.run.versions) return Verdict::Malformed;
                    if (!(c.left && c.right)) vt_gap = true;
                    // every version in this tree belongs to addr, so either
                    // witness form proves a below-range version exists
                    if (c.leaf_below || c.upper_below) have_below = true;
                    if (!merge(c.in_range)) return Verdict::Malformed;
                }
                root = *r;
                break;
            }
            default:
                return Verdict::Malformed;
        }
        concat.insert(concat.end(), root.begin(), root.end());
    }

    if (!(sha256(concat) == digest)) return Verdict::DigestMismatch;

    // A result contradicting the committed value at its height is a forgery
    // against the digest, not a gap.
    for (const auto& [blk, v] : results.versions) {
        auto it = proven.find(blk);
        if (it != proven.end() && !(it->second == v)) return Verdict::DigestMismatch;
    }

    if (vt_gap) return Verdict::IndeterminatePruned;
    if (rs_gap || bare_without_witness) return Verdict::GapInVersions;

    if (results.versions.size() != proven.size()) return Verdict::GapInVersions;
    auto it = proven.begin();
    for (const auto& rv : results.versions) {
        if (rv.first != it->first || !(rv.second == it->second))
            return Verdict::GapInVersions;
        ++it;
    }
    return Verdict::Accept;
}

Verdict verify_prov_bytes(const Hash32& digest, const Address& addr, uint64_t blk_l,
                          uint64_t blk_u, std::span<const uint8_t> results_bytes,
                          std::span<const uint8_t> proof_bytes) {
    try {
        ProvResult results = ProvResult::deserialize(results_bytes);
        MerkleProof proof = MerkleProof::deserialize(proof_bytes);
        return verify_prov(digest, addr, blk_l, blk_u, results, proof);
    } catch (const Error&) {
        return Verdict::Malformed;
    }
}

}  // namespace colstore
