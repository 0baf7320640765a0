#include "colstore/proof.hpp"

#include <algorithm>

#include "colstore/hash.hpp"

namespace colstore {

Hash32 HashFileLeaf::leaf_hash() const {
    Sha256Stream h;
    h.update(addr);
    uint8_t blk_be[8];
    store_u64_be(blk_be, blk);
    h.update({blk_be, 8});
    h.update(value);
    h.update(vt_root);
    return h.finish();
}

std::optional<Hash32> HashFilePath::compute_root(const Hash32& leaf_hash) const {
    if (fanout < 2 || leaf_count == 0 || leaf_index >= leaf_count) return std::nullopt;
    Hash32 cur = leaf_hash;
    uint64_t level_count = leaf_count;
    uint64_t idx = leaf_index;
    size_t li = 0;
    while (level_count > 1) {
        if (li >= levels.size()) return std::nullopt;
        const Level& lvl = levels[li++];
        uint64_t group = idx / fanout;
        uint64_t gstart = group * fanout;
        uint64_t gsize = std::min<uint64_t>(fanout, level_count - gstart);
        if (lvl.pos_in_group != idx - gstart) return std::nullopt;
        if (lvl.siblings.size() + 1 != gsize) return std::nullopt;
        Sha256Stream h;
        size_t s = 0;
        for (uint64_t i = 0; i < gsize; ++i)
            h.update(i == lvl.pos_in_group ? cur : lvl.siblings[s++]);
        cur = h.finish();
        level_count = (level_count + fanout - 1) / fanout;
        idx = group;
    }
    if (li != levels.size()) return std::nullopt;
    return cur;
}

std::optional<Hash32> RunSubProof::compute_root(const Address& query_addr) const {
    if (present) {
        if (!(leaf.addr == query_addr)) return std::nullopt;
        auto vt_root = vt_proof.compute_root();
        if (!vt_root || !(*vt_root == leaf.vt_root)) return std::nullopt;
        return leaf_path.compute_root(leaf.leaf_hash());
    }
    // Absence: one or two leaves straddling the query address. Two leaves
    // must be adjacent with addr strictly between them; a single leaf must
    // sit at the matching end of the file.
    if (absence_leaves.empty() || absence_leaves.size() > 2 ||
        absence_leaves.size() != absence_paths.size())
        return std::nullopt;
    for (const auto& l : absence_leaves)
        if (l.addr == query_addr) return std::nullopt;
    std::optional<Hash32> root;
    for (size_t i = 0; i < absence_leaves.size(); ++i) {
        auto r = absence_paths[i].compute_root(absence_leaves[i].leaf_hash());
        if (!r) return std::nullopt;
        if (root && !(*root == *r)) return std::nullopt;
        root = r;
    }
    uint64_t leaf_count = absence_paths[0].leaf_count;
    for (const auto& p : absence_paths)
        if (p.leaf_count != leaf_count) return std::nullopt;
    if (absence_leaves.size() == 2) {
        if (absence_paths[0].leaf_index + 1 != absence_paths[1].leaf_index)
            return std::nullopt;
        if (!(absence_leaves[0].addr < query_addr &&
              query_addr < absence_leaves[1].addr))
            return std::nullopt;
    } else {
        const auto& l = absence_leaves[0];
        const auto& p = absence_paths[0];
        if (query_addr < l.addr) {
            if (p.leaf_index != 0) return std::nullopt;
        } else {
            if (p.leaf_index + 1 != leaf_count) return std::nullopt;
        }
    }
    return root;
}

// --- Wire format -----------------------------------------------------------

namespace {

// Bounds a deserialized element count by the bytes left to read, so a
// corrupt count fails cleanly instead of attempting a huge allocation.
uint32_t read_count(ByteReader& r, uint32_t raw, size_t min_item_bytes) {
    if (uint64_t(raw) * min_item_bytes > r.remaining())
        throw MalformedBytes("proof: count exceeds remaining bytes");
    return raw;
}

void put_rs_proof(std::vector<uint8_t>& out, const RsRangeProof& p) {
    put_u32_be(out, uint32_t(p.levels.size()));
    for (const auto& level : p.levels) {
        put_u32_be(out, uint32_t(level.size()));
        for (const auto& node : level) {
            put_u16_be(out, uint16_t(node.entries.size()));
            for (const auto& e : node.entries) {
                put_bytes(out, e.key.encode());
                // expanded words are recomputed from the level below, so the
                // canonical encoding stores zeros in their place
                put_bytes(out, e.expanded ? Hash32{} : e.word);
                out.push_back(e.expanded ? 1 : 0);
            }
        }
    }
}

RsRangeProof read_rs_proof(ByteReader& r) {
    RsRangeProof p;
    uint32_t nl = read_count(r, r.u32(), 4);
    for (uint32_t i = 0; i < nl; ++i) {
        std::vector<RsProofNode> level(read_count(r, r.u32(), 2));
        for (auto& node : level) {
            node.entries.resize(read_count(r, r.u16(), 73));
            for (auto& e : node.entries) {
                e.key.addr = r.bytes<32>();
                e.key.blk = r.u64();
                e.word = r.bytes<32>();
                uint8_t x = r.u8();
                if (x > 1) throw MalformedBytes("proof: bad expanded flag");
                e.expanded = x;
                if (e.expanded && !(e.word == Hash32{}))
                    throw MalformedBytes("proof: expanded entry with a stored word");
            }
        }
        p.levels.push_back(std::move(level));
    }
    return p;
}

void put_vt_proof(std::vector<uint8_t>& out, const VtRangeProof& p) {
    put_u32_be(out, uint32_t(p.levels.size()));
    for (const auto& level : p.levels) {
        put_u32_be(out, uint32_t(level.size()));
        for (const auto& node : level) {
            put_u16_be(out, uint16_t(node.entries.size()));
            for (const auto& e : node.entries) {
                put_u64_be(out, e.blk);
                put_bytes(out, e.expanded ? Hash32{} : e.word);
                out.push_back(e.expanded ? 1 : 0);
            }
        }
    }
}

VtRangeProof read_vt_proof(ByteReader& r) {
    VtRangeProof p;
    uint32_t nl = read_count(r, r.u32(), 4);
    for (uint32_t i = 0; i < nl; ++i) {
        std::vector<VtProofNode> level(read_count(r, r.u32(), 2));
        for (auto& node : level) {
            node.entries.resize(read_count(r, r.u16(), 41));
            for (auto& e : node.entries) {
                e.blk = r.u64();
                e.word = r.bytes<32>();
                uint8_t x = r.u8();
                if (x > 1) throw MalformedBytes("proof: bad expanded flag");
                e.expanded = x;
                if (e.expanded && !(e.word == Hash32{}))
                    throw MalformedBytes("proof: expanded entry with a stored word");
            }
        }
        p.levels.push_back(std::move(level));
    }
    return p;
}

void put_leaf(std::vector<uint8_t>& out, const HashFileLeaf& l) {
    put_bytes(out, l.addr);
    put_u64_be(out, l.blk);
    put_bytes(out, l.value);
    put_bytes(out, l.vt_root);
}

HashFileLeaf read_leaf(ByteReader& r) {
    HashFileLeaf l;
    l.addr = r.bytes<32>();
    l.blk = r.u64();
    l.value = r.bytes<32>();
    l.vt_root = r.bytes<32>();
    return l;
}

void put_path(std::vector<uint8_t>& out, const HashFilePath& p) {
    put_u64_be(out, p.leaf_index);
    put_u64_be(out, p.leaf_count);
    put_u32_be(out, p.fanout);
    put_u32_be(out, uint32_t(p.levels.size()));
    for (const auto& lvl : p.levels) {
        put_u32_be(out, lvl.pos_in_group);
        put_u16_be(out, uint16_t(lvl.siblings.size()));
        for (const auto& s : lvl.siblings) put_bytes(out, s);
    }
}

HashFilePath read_path(ByteReader& r) {
    HashFilePath p;
    p.leaf_index = r.u64();
    p.leaf_count = r.u64();
    p.fanout = r.u32();
    p.levels.resize(read_count(r, r.u32(), 6));
    for (auto& lvl : p.levels) {
        lvl.pos_in_group = r.u32();
        lvl.siblings.resize(read_count(r, r.u16(), 32));
        for (auto& s : lvl.siblings) s = r.bytes<32>();
    }
    return p;
}

void put_versions(std::vector<uint8_t>& out,
                  const std::vector<std::pair<uint64_t, Value32>>& vs) {
    put_u32_be(out, uint32_t(vs.size()));
    for (const auto& [b, v] : vs) {
        put_u64_be(out, b);
        put_bytes(out, v);
    }
}

std::vector<std::pair<uint64_t, Value32>> read_versions(ByteReader& r) {
    std::vector<std::pair<uint64_t, Value32>> vs(read_count(r, r.u32(), 40));
    for (auto& [b, v] : vs) {
        b = r.u64();
        v = r.bytes<32>();
    }
    return vs;
}

}  // namespace

std::vector<uint8_t> MerkleProof::serialize() const {
    std::vector<uint8_t> out;
    put_u32_be(out, uint32_t(subs.size()));
    for (const auto& sub : subs) {
        out.push_back(uint8_t(sub.kind));
        switch (sub.kind) {
            case SubProofKind::BareRoot:
                put_bytes(out, sub.bare_root);
                break;
            case SubProofKind::RsPath:
                put_rs_proof(out, sub.rs);
                break;
            case SubProofKind::RunPath: {
                out.push_back(sub.run.present ? 1 : 0);
                if (sub.run.present) {
                    put_leaf(out, sub.run.leaf);
                    put_path(out, sub.run.leaf_path);
                    put_vt_proof(out, sub.run.vt_proof);
                    put_versions(out, sub.run.versions);
                } else {
                    out.push_back(uint8_t(sub.run.absence_leaves.size()));
                    for (const auto& l : sub.run.absence_leaves) put_leaf(out, l);
                    for (const auto& p : sub.run.absence_paths) put_path(out, p);
                }
                break;
            }
        }
    }
    return out;
}

MerkleProof MerkleProof::deserialize(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    MerkleProof proof;
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        SubProof sub;
        uint8_t kind = r.u8();
        if (kind > 2) throw MalformedBytes("proof: bad sub-proof tag");
        sub.kind = SubProofKind(kind);
        switch (sub.kind) {
            case SubProofKind::BareRoot:
                sub.bare_root = r.bytes<32>();
                break;
            case SubProofKind::RsPath:
                sub.rs = read_rs_proof(r);
                break;
            case SubProofKind::RunPath: {
                uint8_t present = r.u8();
                if (present > 1) throw MalformedBytes("proof: bad presence flag");
                sub.run.present = present;
                if (sub.run.present) {
                    sub.run.leaf = read_leaf(r);
                    sub.run.leaf_path = read_path(r);
                    sub.run.vt_proof = read_vt_proof(r);
                    sub.run.versions = read_versions(r);
                } else {
                    uint8_t cnt = r.u8();
                    if (cnt == 0 || cnt > 2) throw MalformedBytes("proof: bad leaf count");
                    for (uint8_t j = 0; j < cnt; ++j)
                        sub.run.absence_leaves.push_back(read_leaf(r));
                    for (uint8_t j = 0; j < cnt; ++j)
                        sub.run.absence_paths.push_back(read_path(r));
                }
                break;
            }
        }
        proof.subs.push_back(std::move(sub));
    }
    if (!r.done()) throw MalformedBytes("proof: trailing bytes");
    return proof;
}

std::vector<uint8_t> ProvResult::serialize() const {
    std::vector<uint8_t> out;
    put_versions(out, versions);
    return out;
}

ProvResult ProvResult::deserialize(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    ProvResult res;
    res.versions = read_versions(r);
    if (!r.done()) throw MalformedBytes("results: trailing bytes");
    return res;
}

}  // namespace colstore
