#include "colstore/version_tree.hpp"

#include <algorithm>
#include <cassert>

namespace colstore {

namespace {

constexpr size_t kEntryBytes = 40;  // blk(8) || word(32)

std::array<uint8_t, kEntryBytes> encode_entry(const VtEntry& e) {
    std::array<uint8_t, kEntryBytes> out;
    store_u64_be(out.data(), e.blk);
    std::memcpy(out.data() + 8, e.word.data(), 32);
    return out;
}

Hash32 hash_entries(const std::vector<VtEntry>& entries) {
    Sha256Stream h;
    for (const auto& e : entries) {
        auto enc = encode_entry(e);
        h.update(enc);
    }
    return h.finish();
}

VtNode make_node(std::vector<VtEntry> entries) {
    VtNode n;
    n.hash = hash_entries(entries);
    n.entries = std::move(entries);
    return n;
}

}  // namespace

VersionTree::VersionTree(uint32_t f_exp, uint32_t f_max)
    : f_exp_(f_exp), params_(cdc::init_params(f_exp, f_max, kEntryBytes)) {}

std::vector<VtNode> VersionTree::cdc_create_nodes(const std::vector<VtEntry>& entries,
                                                  const cdc::CdcParams& base) {
    cdc::CdcParams p = base;
    p.cnt = 0;
    std::vector<VtNode> out;
    std::vector<VtEntry> cur;
    for (const auto& e : entries) {
        cur.push_back(e);
        auto enc = encode_entry(e);
        if (cdc::cut_point(p, enc) == cdc::CutResult::CUT) {
            out.push_back(make_node(std::move(cur)));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(make_node(std::move(cur)));
    return out;
}

void VersionTree::build_upper_levels() {
    while (levels_.back().node_count > 1) {
        const Level& below = levels_.back();
        std::vector<VtEntry> ents;
        ents.reserve(below.node_count);
        for (uint64_t i = 0; i < below.node_count; ++i)
            ents.push_back({need_node(levels_.size() - 1, i, "build").max_blk(),
                            need_node(levels_.size() - 1, i, "build").hash});
        auto nodes = cdc_create_nodes(ents, params_);
        Level lvl;
        lvl.node_count = nodes.size();
        for (uint64_t i = 0; i < nodes.size(); ++i) lvl.nodes.emplace(i, std::move(nodes[i]));
        levels_.push_back(std::move(lvl));
    }
    // A root with a single entry collapses onto its only child.
    while (levels_.size() >= 2 && levels_[levels_.size() - 2].node_count == 1)
        levels_.pop_back();
}

VersionTree VersionTree::build(const std::vector<std::pair<uint64_t, Value32>>& pairs,
                               uint32_t f_exp, uint32_t f_max) {
    VersionTree t(f_exp, f_max);
    if (pairs.empty()) return t;
    std::vector<VtEntry> leaves;
    leaves.reserve(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (i > 0 && pairs[i].first <= pairs[i - 1].first)
            throw UnsortedInput("build: versions must be strictly increasing");
        leaves.push_back({pairs[i].first, pairs[i].second});
    }
    auto nodes = cdc_create_nodes(leaves, t.params_);
    Level lvl;
    lvl.node_count = nodes.size();
    for (uint64_t i = 0; i < nodes.size(); ++i) lvl.nodes.emplace(i, std::move(nodes[i]));
    t.levels_.push_back(std::move(lvl));
    t.build_upper_levels();
    return t;
}

const VtNode* VersionTree::node_at(size_t level, uint64_t pos) const {
    const auto& m = levels_[level].nodes;
    auto it = m.find(pos);
    return it == m.end() ? nullptr : &it->second;
}

const VtNode& VersionTree::need_node(size_t level, uint64_t pos, const char* what) const {
    const VtNode* n = node_at(level, pos);
    if (!n) throw InsufficientRetention(std::string(what) + ": required node pruned");
    return *n;
}

bool VersionTree::pruned() const {
    for (const auto& lvl : levels_)
        if (lvl.nodes.size() < lvl.node_count) return true;
    return false;
}

Hash32 VersionTree::root_hash() const {
    if (levels_.empty()) return empty_hash();
    return need_node(levels_.size() - 1, 0, "root").hash;
}

size_t VersionTree::node_count() const {
    size_t n = 0;
    for (const auto& lvl : levels_) n += lvl.nodes.size();
    return n;
}

uint64_t VersionTree::min_blk() const {
    return need_node(0, 0, "min_blk").entries.front().blk;
}

uint64_t VersionTree::max_blk() const {
    return need_node(0, levels_[0].node_count - 1, "max_blk").entries.back().blk;
}

std::vector<std::pair<uint64_t, Value32>> VersionTree::retained_versions() const {
    std::vector<std::pair<uint64_t, Value32>> out;
    if (levels_.empty()) return out;
    for (const auto& [pos, n] : levels_[0].nodes)
        for (const auto& e : n.entries) out.emplace_back(e.blk, e.word);
    return out;
}

// --- merge ----------------------------------------------------------------

VersionTree VersionTree::merge(const VersionTree& t_l, const VersionTree& t_r) {
    if (t_l.empty()) return t_r;
    if (t_r.empty()) return t_l;
    if (t_l.f_exp_ != t_r.f_exp_ || t_l.params_.f_max != t_r.params_.f_max)
        throw InvalidFanout("merge: fanout parameters differ");
    if (!(t_l.max_blk() < t_r.min_blk()))
        throw OverlapViolation("merge: version ranges overlap");

    VersionTree m(t_l.f_exp_, t_l.params_.f_max);
    const size_t hl = t_l.levels_.size(), hr = t_r.levels_.size();
    const size_t top = std::max(hl, hr);

    std::vector<VtEntry> e_upd;     // entries for seam nodes made one level down
    uint64_t consumed_below = 0;    // t_r nodes replaced at the level below

    for (size_t k = 0; k < top; ++k) {
        // Left part of the seam stream: everything of t_l's rightmost node
        // at this level, minus (above the leaves) its entry for the child
        // replaced below, spliced with the new child entries.
        std::vector<VtEntry> repl;
        uint64_t left_keep = 0;  // t_l nodes [0, left_keep) copied unchanged
        if (k < hl) {
            const Level& L = t_l.levels_[k];
            const VtNode& last = t_l.need_node(k, L.node_count - 1, "merge");
            left_keep = L.node_count - 1;
            if (k == 0) {
                repl = last.entries;
            } else {
                repl.assign(last.entries.begin(), last.entries.end() - 1);
                repl.insert(repl.end(), e_upd.begin(), e_upd.end());
            }
        } else {
            repl = e_upd;
        }

        // Right part: the tail of the t_r node partially replaced below.
        uint64_t right_skip = 0;  // t_r nodes [0, right_skip) already replaced
        if (k < hr && k > 0 && consumed_below > 0) {
            uint64_t cum = 0, p = 0;
            while (true) {
                const VtNode& n = t_r.need_node(k, p, "merge");
                cum += n.entries.size();
                if (cum >= consumed_below) break;
                ++p;
            }
            const VtNode& pn = t_r.need_node(k, p, "merge");
            size_t off = pn.entries.size() - size_t(cum - consumed_below);
            repl.insert(repl.end(), pn.entries.begin() + long(off), pn.entries.end());
            right_skip = p + 1;
        }

        // Re-cut the seam, consuming further t_r nodes until a produced cut
        // lands exactly on one of t_r's old node boundaries.
        cdc::CdcParams p = m.params_;
        p.cnt = 0;
        std::vector<VtNode> seam;
        std::vector<VtEntry> cur;
        auto feed = [&](const VtEntry& e) {
            cur.push_back(e);
            auto enc = encode_entry(e);
            if (cdc::cut_point(p, enc) == cdc::CutResult::CUT) {
                seam.push_back(make_node(std::move(cur)));
                cur.clear();
            }
        };
        for (const auto& e : repl) feed(e);
        uint64_t consumed = right_skip;
        if (k < hr) {
            const Level& R = t_r.levels_[k];
            while (consumed < R.node_count) {
                if (cur.empty()) break;  // aligned with an old boundary
                const VtNode& n = t_r.need_node(k, consumed, "merge");
                for (const auto& e : n.entries) feed(e);
                ++consumed;
            }
        }
        if (!cur.empty()) seam.push_back(make_node(std::move(cur)));

        // Assemble the merged level: t_l prefix, seam, t_r suffix.
        Level ml;
        if (k < hl)
            for (const auto& [pos, n] : t_l.levels_[k].nodes)
                if (pos < left_keep) ml.nodes.emplace(pos, n);
        uint64_t base = left_keep;
        e_upd.clear();
        for (uint64_t i = 0; i < seam.size(); ++i) {
            e_upd.push_back({seam[i].max_blk(), seam[i].hash});
            ml.nodes.emplace(base + i, std::move(seam[i]));
        }
        uint64_t seam_end = base + e_upd.size();
        if (k < hr) {
            const Level& R = t_r.levels_[k];
            for (const auto& [pos, n] : R.nodes)
                if (pos >= consumed) ml.nodes.emplace(seam_end + (pos - consumed), n);
            ml.node_count = seam_end + (R.node_count - consumed);
            // If t_r's root level aligned without being consumed and t_l is
            // taller, the surviving root node still needs an entry in the
            // level above (it has no parent of its own).
            if (k + 1 == hr && k + 1 < top && consumed == 0) {
                const VtNode& rroot = t_r.need_node(k, 0, "merge");
                e_upd.push_back({rroot.max_blk(), rroot.hash});
            }
        } else {
            ml.node_count = seam_end;
        }
        m.levels_.push_back(std::move(ml));
        consumed_below = consumed;
    }
    m.build_upper_levels();
    return m;
}

// --- prune ----------------------------------------------------------------

VersionTree VersionTree::prune(uint64_t keep_recent) const {
    if (levels_.empty()) return *this;
    const size_t h = levels_.size();

    // Extend a prefix boundary through successors while they sit at f_max
    // capacity, including the first that does not: a merge seam can only
    // stay misaligned across nodes whose cut was forced by f_max.
    auto chain_extend = [&](size_t k, uint64_t j) {
        while (true) {
            const VtNode& n = need_node(k, j, "prune");
            if (n.entries.size() < params_.f_max || j + 1 == levels_[k].node_count) return j;
            ++j;
        }
    };
    // Parent position of a prefix child (walk from the left).
    auto parent_of_prefix = [&](size_t k, uint64_t child) {
        uint64_t cum = 0, i = 0;
        while (true) {
            cum += need_node(k, i, "prune").entries.size();
            if (child < cum) return i;
            ++i;
        }
    };
    // Parent position of a suffix child (walk from the right; works with
    // gaps in the middle since per-level node counts are known).
    auto parent_of_suffix = [&](size_t k, uint64_t child) {
        uint64_t total = levels_[k - 1].node_count;
        uint64_t cum = 0;
        uint64_t i = levels_[k].node_count;
        while (i-- > 0) {
            cum += need_node(k, i, "prune").entries.size();
            if (total - cum <= child) return i;
        }
        throw InsufficientRetention("prune: suffix walk ran out of nodes");
    };

    std::vector<uint64_t> P(h), S(h);
    {
        const uint64_t n0 = levels_[0].node_count;
        P[0] = chain_extend(0, 0);
        uint64_t s = n0 - 1;
        uint64_t covered = need_node(0, s, "prune").entries.size();
        while (covered < keep_recent && s > 0 && node_at(0, s - 1)) {
            --s;
            covered += node_at(0, s)->entries.size();
        }
        S[0] = s;
    }
    for (size_t k = 1; k < h; ++k) {
        // A merge seam replaces entries inside the ancestor of the prefix
        // boundary, so realignment can only be observed at the end of the
        // next unchanged node; keep it too before extending the f_max chain.
        uint64_t anc = parent_of_prefix(k, P[k - 1]);
        P[k] = chain_extend(k, std::min(anc + 1, levels_[k].node_count - 1));
        S[k] = parent_of_suffix(k, S[k - 1]);
    }

    VersionTree out(f_exp_, params_.f_max);
    out.levels_.resize(h);
    for (size_t k = 0; k < h; ++k) {
        out.levels_[k].node_count = levels_[k].node_count;
        for (uint64_t pos = 0; pos <= P[k]; ++pos)
            out.levels_[k].nodes.emplace(pos, need_node(k, pos, "prune"));
        for (uint64_t pos = std::max(S[k], P[k] + 1); pos < levels_[k].node_count; ++pos)
            out.levels_[k].nodes.emplace(pos, need_node(k, pos, "prune"));
    }
    return out;
}

// --- positional navigation ------------------------------------------------

uint64_t VersionTree::first_child_index(size_t level, uint64_t pos) const {
    uint64_t cum = 0;
    bool ok = true;
    for (uint64_t i = 0; i < pos; ++i) {
        const VtNode* n = node_at(level, i);
        if (!n) {
            ok = false;
            break;
        }
        cum += n->entries.size();
    }
    if (ok) return cum;
    const uint64_t total = levels_[level - 1].node_count;
    cum = 0;
    uint64_t i = levels_[level].node_count;
    while (i-- > pos) {
        const VtNode* n = node_at(level, i);
        if (!n) throw PrunedRange("query: positions not locatable in pruned region");
        cum += n->entries.size();
    }
    return total - cum;
}

std::pair<uint64_t, size_t> VersionTree::locate_parent(size_t level, uint64_t child) const {
    uint64_t cum = 0;
    for (uint64_t i = 0; i < levels_[level].node_count; ++i) {
        const VtNode* n = node_at(level, i);
        if (!n) break;
        if (child < cum + n->entries.size()) return {i, size_t(child - cum)};
        cum += n->entries.size();
    }
    const uint64_t total = levels_[level - 1].node_count;
    cum = 0;
    uint64_t i = levels_[level].node_count;
    while (i-- > 0) {
        const VtNode* n = node_at(level, i);
        if (!n) break;
        cum += n->entries.size();
        uint64_t start = total - cum;
        if (child >= start) return {i, size_t(child - start)};
    }
    throw PrunedRange("query: parent node pruned");
}

uint64_t VersionTree::rightmost_leaf_of(size_t level, uint64_t pos) const {
    while (level > 0) {
        const VtNode* n = node_at(level, pos);
        if (!n) throw PrunedRange("query: node pruned");
        pos = first_child_index(level, pos) + n->entries.size() - 1;
        --level;
    }
    return pos;
}

std::optional<uint64_t> VersionTree::floor_leaf(uint64_t y) const {
    // The first child whose max >= y may still hold keys <= y (its min is
    // unknown without descending); children after it cannot. Probe that
    // child, and fall back to the previous child's rightmost leaf.
    struct Desc {
        const VersionTree* t;
        std::optional<uint64_t> operator()(size_t lv, uint64_t p, uint64_t y) const {
            const VtNode* n = t->node_at(lv, p);
            if (!n) throw PrunedRange("query: node pruned");
            if (lv == 0) return n->entries.front().blk <= y ? std::optional(p) : std::nullopt;
            size_t j = 0;
            while (j + 1 < n->entries.size() && n->entries[j].blk < y) ++j;
            uint64_t fc = t->first_child_index(lv, p);
            auto r = (*this)(lv - 1, fc + j, y);
            if (r) return r;
            if (j == 0) return std::nullopt;
            return t->rightmost_leaf_of(lv - 1, fc + j - 1);
        }
    };
    return Desc{this}(levels_.size() - 1, 0, y);
}

std::optional<uint64_t> VersionTree::ceil_leaf_ge(uint64_t x) const {
    size_t level = levels_.size() - 1;
    uint64_t pos = 0;
    while (true) {
        const VtNode* n = node_at(level, pos);
        if (!n) throw PrunedRange("query: node pruned");
        if (level == 0) return n->entries.back().blk >= x ? std::optional(pos) : std::nullopt;
        size_t i = 0;
        while (i < n->entries.size() && n->entries[i].blk < x) ++i;
        if (i == n->entries.size()) return std::nullopt;
        pos = first_child_index(level, pos) + i;
        --level;
    }
}

// --- range query ----------------------------------------------------------

std::pair<std::vector<std::pair<uint64_t, Value32>>, VtRangeProof> VersionTree::query_range(
    uint64_t blk_l, uint64_t blk_u) const {
    std::vector<std::pair<uint64_t, Value32>> results;
    VtRangeProof proof;
    if (levels_.empty()) return {results, proof};

    const uint64_t n0 = levels_[0].node_count;
    // Expand from the leaf holding the first version >= blk_l - 1 through
    // the leaf holding the first version > blk_u: the straddling versions
    // act as completeness witnesses a verifier can check. When a boundary
    // has no such version the expansion snaps to the matching edge leaf, so
    // absence is still provable.
    auto la = ceil_leaf_ge(blk_l == 0 ? 0 : blk_l - 1);
    auto lb = ceil_leaf_ge(blk_u == UINT64_MAX ? UINT64_MAX : blk_u + 1);
    uint64_t li = la ? *la : n0 - 1;
    uint64_t ri = lb ? *lb : n0 - 1;

    for (uint64_t i = li; i <= ri; ++i) {
        const VtNode* n = node_at(0, i);
        if (!n) throw PrunedRange("query: leaf pruned");
        for (const auto& e : n->entries)
            if (e.blk >= blk_l && e.blk <= blk_u) results.emplace_back(e.blk, e.word);
    }

    std::vector<std::vector<VtProofNode>> rev_levels;
    {
        std::vector<VtProofNode> leaf_nodes;
        for (uint64_t i = li; i <= ri; ++i) {
            VtProofNode pn;
            for (const auto& e : node_at(0, i)->entries)
                pn.entries.push_back({e.blk, e.word, false});
            leaf_nodes.push_back(std::move(pn));
        }
        rev_levels.push_back(std::move(leaf_nodes));
    }
    uint64_t child_lo = li, child_hi = ri;
    for (size_t k = 1; k < levels_.size(); ++k) {
        auto [pf, off_f] = locate_parent(k, child_lo);
        auto [pl, off_l] = locate_parent(k, child_hi);
        (void)off_f;
        (void)off_l;
        uint64_t child_idx = first_child_index(k, pf);
        std::vector<VtProofNode> lvl_nodes;
        for (uint64_t j = pf; j <= pl; ++j) {
            const VtNode* n = node_at(k, j);
            if (!n) throw PrunedRange("query: internal node pruned");
            VtProofNode pn;
            for (const auto& e : n->entries) {
                bool exp = child_idx >= child_lo && child_idx <= child_hi;
                pn.entries.push_back({e.blk, e.word, exp});
                ++child_idx;
            }
            lvl_nodes.push_back(std::move(pn));
        }
        rev_levels.push_back(std::move(lvl_nodes));
        child_lo = pf;
        child_hi = pl;
    }
    proof.levels.assign(rev_levels.rbegin(), rev_levels.rend());
    return {results, proof};
}

std::optional<Hash32> VtRangeProof::compute_root() const {
    if (levels.empty()) return empty_hash();
    std::vector<Hash32> below;
    for (const auto& n : levels.back()) {
        if (n.entries.empty()) return std::nullopt;
        std::vector<VtEntry> es;
        for (const auto& e : n.entries) es.push_back({e.blk, e.word});
        below.push_back(hash_entries(es));
    }
    for (size_t k = levels.size() - 1; k-- > 0;) {
        std::vector<Hash32> cur;
        size_t next_child = 0;
        for (const auto& n : levels[k]) {
            if (n.entries.empty()) return std::nullopt;
            std::vector<VtEntry> es;
            for (const auto& e : n.entries) {
                VtEntry ve{e.blk, e.word};
                if (e.expanded) {
                    if (next_child >= below.size()) return std::nullopt;
                    ve.word = below[next_child++];
                }
                es.push_back(ve);
            }
            cur.push_back(hash_entries(es));
        }
        if (next_child != below.size()) return std::nullopt;
        below = std::move(cur);
    }
    if (below.size() != 1) return std::nullopt;
    return below[0];
}

// --- serialization --------------------------------------------------------

std::vector<uint8_t> VersionTree::serialize_bfs() const {
    std::vector<uint8_t> out;
    put_u32_be(out, uint32_t(levels_.size()));
    // Header and nodes both run root-first (breadth-first order).
    for (size_t k = levels_.size(); k-- > 0;) {
        const Level& lvl = levels_[k];
        put_u64_be(out, lvl.node_count);
        std::vector<uint8_t> bitmap((lvl.node_count + 7) / 8, 0);
        for (const auto& [pos, n] : lvl.nodes) bitmap[pos / 8] |= uint8_t(0x80u >> (pos % 8));
        put_bytes(out, bitmap);
    }
    for (size_t k = levels_.size(); k-- > 0;) {
        for (const auto& [pos, n] : levels_[k].nodes) {
            put_u16_be(out, uint16_t(n.entries.size()));
            for (const auto& e : n.entries) {
                auto enc = encode_entry(e);
                put_bytes(out, enc);
            }
        }
    }
    return out;
}

VersionTree VersionTree::deserialize_bfs(ByteReader& r, uint32_t f_exp, uint32_t f_max) {
    VersionTree t(f_exp, f_max);
    uint32_t level_count = r.u32();
    if (level_count == 0) return t;
    t.levels_.resize(level_count);
    std::vector<std::vector<uint64_t>> present(level_count);  // root-first order
    for (uint32_t i = 0; i < level_count; ++i) {
        size_t k = level_count - 1 - i;  // stored root-first
        uint64_t count = r.u64();
        if (count == 0) throw MalformedBytes("version tree: empty level");
        t.levels_[k].node_count = count;
        size_t nbytes = size_t((count + 7) / 8);
        for (size_t b = 0; b < nbytes; ++b) {
            uint8_t byte = r.u8();
            for (int bit = 0; bit < 8; ++bit) {
                uint64_t pos = b * 8 + uint64_t(bit);
                if (pos < count && (byte & (0x80u >> bit))) present[i].push_back(pos);
            }
        }
    }
    if (t.levels_[level_count - 1].node_count != 1)
        throw MalformedBytes("version tree: top level must have one node");
    for (uint32_t i = 0; i < level_count; ++i) {
        size_t k = level_count - 1 - i;
        for (uint64_t pos : present[i]) {
            uint16_t ec = r.u16();
            if (ec == 0) throw MalformedBytes("version tree: empty node");
            std::vector<VtEntry> es;
            es.reserve(ec);
            uint64_t prev = 0;
            for (uint16_t j = 0; j < ec; ++j) {
                VtEntry e;
                e.blk = r.u64();
                auto w = r.bytes<32>();
                e.word = w;
                if (j > 0 && e.blk <= prev)
                    throw MalformedBytes("version tree: entries not increasing");
                prev = e.blk;
                es.push_back(e);
            }
            t.levels_[k].nodes.emplace(pos, make_node(std::move(es)));
        }
    }
    return t;
}

VersionTree VersionTree::deserialize_bfs(std::span<const uint8_t> bytes, uint32_t f_exp,
                                         uint32_t f_max) {
    ByteReader r(bytes);
    VersionTree t = deserialize_bfs(r, f_exp, f_max);
    if (!r.done()) throw MalformedBytes("version tree: trailing bytes");
    return t;
}

}  // namespace colstore
