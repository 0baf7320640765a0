#include "colstore/rs_tree.hpp"

#include <algorithm>
#include <cassert>

namespace colstore {

namespace {

constexpr size_t kEntryBytes = 72;  // addr(32) || blk(8) || word(32)

std::array<uint8_t, kEntryBytes> encode_entry(const RsEntry& e) {
    std::array<uint8_t, kEntryBytes> out;
    std::memcpy(out.data(), e.key.addr.data(), 32);
    store_u64_be(out.data() + 32, e.key.blk);
    std::memcpy(out.data() + 40, e.word.data(), 32);
    return out;
}

Hash32 hash_entries(const std::vector<RsEntry>& entries) {
    Sha256Stream h;
    for (const auto& e : entries) {
        auto enc = encode_entry(e);
        h.update(enc);
    }
    return h.finish();
}

RsNode make_node(std::vector<RsEntry> entries) {
    RsNode n;
    n.hash = hash_entries(entries);
    n.entries = std::move(entries);
    return n;
}

}  // namespace

RsTree::RsTree(uint32_t f_exp, uint32_t f_max)
    : f_exp_(f_exp), params_(cdc::init_params(f_exp, f_max, kEntryBytes)) {}

std::vector<RsNode> RsTree::cdc_create_nodes(const std::vector<RsEntry>& entries,
                                             const cdc::CdcParams& base) {
    cdc::CdcParams p = base;
    p.cnt = 0;
    std::vector<RsNode> out;
    std::vector<RsEntry> cur;
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

namespace {

struct RecutResult {
    std::vector<RsNode> nodes;
    size_t last_consumed;  // nodes [first, last_consumed] are replaced
};

// Re-partition a contiguous region of one level. `replacement` stands in
// for the entries of nodes [first, last]; further nodes are consumed until
// a produced cut lands exactly on an old node boundary, at which point the
// remainder of the level is untouched.
RecutResult recut(const std::vector<RsNode>& level, size_t first, size_t last,
                  const std::vector<RsEntry>& replacement, const cdc::CdcParams& base) {
    (void)first;
    cdc::CdcParams p = base;
    p.cnt = 0;
    RecutResult rr;
    std::vector<RsEntry> cur;
    auto feed = [&](const RsEntry& e) {
        cur.push_back(e);
        auto enc = encode_entry(e);
        if (cdc::cut_point(p, enc) == cdc::CutResult::CUT) {
            rr.nodes.push_back(make_node(std::move(cur)));
            cur.clear();
        }
    };
    for (const auto& e : replacement) feed(e);
    size_t next = last + 1;
    while (next < level.size()) {
        if (cur.empty()) break;  // aligned with an old boundary
        for (const auto& e : level[next].entries) feed(e);
        ++next;
    }
    if (!cur.empty()) rr.nodes.push_back(make_node(std::move(cur)));
    rr.last_consumed = next - 1;
    return rr;
}

// Parent node index and entry offset for a child index, via entry counts.
std::pair<size_t, size_t> locate_child(const std::vector<RsNode>& parents, size_t child) {
    size_t acc = 0;
    for (size_t i = 0; i < parents.size(); ++i) {
        size_t n = parents[i].entries.size();
        if (child < acc + n) return {i, child - acc};
        acc += n;
    }
    assert(false && "child index out of range");
    return {0, 0};
}

}  // namespace

void RsTree::apply_edit(size_t level, size_t first, size_t last,
                        std::vector<RsEntry> replacement) {
    auto rr = recut(levels_[level], first, last, replacement, params_);
    size_t consumed_last = rr.last_consumed;

    std::vector<RsEntry> child_entries;
    child_entries.reserve(rr.nodes.size());
    for (const auto& n : rr.nodes) child_entries.push_back({n.max_key(), n.hash});

    const bool has_parent = level + 1 < levels_.size();
    size_t pf = 0, pl = 0, off_f = 0, off_l = 0;
    if (has_parent) {
        std::tie(pf, off_f) = locate_child(levels_[level + 1], first);
        std::tie(pl, off_l) = locate_child(levels_[level + 1], consumed_last);
    }

    auto& lvl = levels_[level];
    lvl.erase(lvl.begin() + first, lvl.begin() + consumed_last + 1);
    lvl.insert(lvl.begin() + first, rr.nodes.begin(), rr.nodes.end());

    if (!has_parent) {
        finalize_top();
        return;
    }

    const auto& parents = levels_[level + 1];
    std::vector<RsEntry> parent_repl;
    parent_repl.insert(parent_repl.end(), parents[pf].entries.begin(),
                       parents[pf].entries.begin() + off_f);
    parent_repl.insert(parent_repl.end(), child_entries.begin(), child_entries.end());
    parent_repl.insert(parent_repl.end(), parents[pl].entries.begin() + off_l + 1,
                       parents[pl].entries.end());
    apply_edit(level + 1, pf, pl, std::move(parent_repl));
}

void RsTree::finalize_top() {
    // Drop trailing empty levels (full-tree deletion path).
    while (!levels_.empty() && levels_.back().empty()) levels_.pop_back();
    if (levels_.empty()) return;
    while (levels_.back().size() > 1) {
        std::vector<RsEntry> ents;
        ents.reserve(levels_.back().size());
        for (const auto& n : levels_.back()) ents.push_back({n.max_key(), n.hash});
        levels_.push_back(cdc_create_nodes(ents, params_));
    }
    // A root with a single entry collapses onto its only child.
    while (levels_.size() >= 2 && levels_[levels_.size() - 2].size() == 1) levels_.pop_back();
}

void RsTree::insert(const CompoundKey& key, const Value32& value) {
    if (levels_.empty()) {
        levels_.push_back(cdc_create_nodes({{key, value}}, params_));
        entry_count_ = 1;
        finalize_top();
        return;
    }
    auto& leaves = levels_[0];
    // First leaf whose max key >= key; else the last leaf.
    size_t i = leaves.size() - 1;
    {
        size_t lo = 0, hi = leaves.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (leaves[mid].max_key() < key)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < leaves.size()) i = lo;
    }
    std::vector<RsEntry> repl = leaves[i].entries;
    auto it = std::lower_bound(repl.begin(), repl.end(), key,
                               [](const RsEntry& e, const CompoundKey& k) { return e.key < k; });
    if (it != repl.end() && it->key == key) throw DuplicateKey("insert: key already present");
    repl.insert(it, {key, value});
    apply_edit(0, i, i, std::move(repl));
    ++entry_count_;
}

void RsTree::erase(const CompoundKey& key) {
    if (levels_.empty()) throw KeyNotFound("erase: key not found");
    auto& leaves = levels_[0];
    size_t lo = 0, hi = leaves.size();
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (leaves[mid].max_key() < key)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo == leaves.size()) throw KeyNotFound("erase: key not found");
    std::vector<RsEntry> repl = leaves[lo].entries;
    auto it = std::lower_bound(repl.begin(), repl.end(), key,
                               [](const RsEntry& e, const CompoundKey& k) { return e.key < k; });
    if (it == repl.end() || it->key != key) throw KeyNotFound("erase: key not found");
    repl.erase(it);
    if (entry_count_ == 1) {
        levels_.clear();
        entry_count_ = 0;
        return;
    }
    apply_edit(0, lo, lo, std::move(repl));
    --entry_count_;
}

bool RsTree::contains(const CompoundKey& key) const {
    if (levels_.empty()) return false;
    const auto& leaves = levels_[0];
    size_t lo = 0, hi = leaves.size();
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (leaves[mid].max_key() < key)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo == leaves.size()) return false;
    const auto& es = leaves[lo].entries;
    auto it = std::lower_bound(es.begin(), es.end(), key,
                               [](const RsEntry& e, const CompoundKey& k) { return e.key < k; });
    return it != es.end() && it->key == key;
}

Hash32 RsTree::root_hash() const {
    if (levels_.empty()) return empty_hash();
    return levels_.back()[0].hash;
}

size_t RsTree::node_count() const {
    size_t n = 0;
    for (const auto& lvl : levels_) n += lvl.size();
    return n;
}

std::vector<std::pair<CompoundKey, Value32>> RsTree::entries() const {
    std::vector<std::pair<CompoundKey, Value32>> out;
    out.reserve(entry_count_);
    if (levels_.empty()) return out;
    for (const auto& n : levels_[0])
        for (const auto& e : n.entries) out.emplace_back(e.key, e.word);
    return out;
}

std::optional<std::pair<size_t, size_t>> RsTree::predecessor(const CompoundKey& key) const {
    if (levels_.empty()) return std::nullopt;
    const auto& leaves = levels_[0];
    // Last leaf whose first entry < key.
    size_t lo = 0, hi = leaves.size();
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (leaves[mid].entries.front().key < key)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo == 0) return std::nullopt;
    size_t li = lo - 1;
    const auto& es = leaves[li].entries;
    auto it = std::lower_bound(es.begin(), es.end(), key,
                               [](const RsEntry& e, const CompoundKey& k) { return e.key < k; });
    assert(it != es.begin());
    return std::make_pair(li, size_t(it - es.begin()) - 1);
}

std::optional<std::pair<uint64_t, Value32>> RsTree::search_latest(const Address& addr) const {
    CompoundKey probe{addr, CompoundKey::kMaxBlk};
    auto p = predecessor(probe);
    if (!p) return std::nullopt;
    const auto& e = levels_[0][p->first].entries[p->second];
    if (e.key.addr != addr) return std::nullopt;
    return std::make_pair(e.key.blk, e.word);
}

std::pair<std::vector<std::pair<CompoundKey, Value32>>, RsRangeProof> RsTree::search_range(
    const CompoundKey& key_lo, const CompoundKey& key_hi) const {
    std::vector<std::pair<CompoundKey, Value32>> results;
    RsRangeProof proof;
    if (levels_.empty()) return {results, proof};

    const auto& leaves = levels_[0];
    // Leaf range: from the leaf holding pred(key_lo) (or the first leaf)
    // through the leaf holding succ(key_hi) (or the last leaf), so the
    // boundary witnesses straddling the range are always included.
    size_t li = 0;
    if (auto p = predecessor(key_lo)) li = p->first;
    size_t ri = leaves.size() - 1;
    {
        // First leaf whose max key > key_hi holds the successor.
        size_t lo = 0, hi = leaves.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (!(key_hi < leaves[mid].max_key()))
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < leaves.size()) ri = lo;
    }
    if (ri < li) ri = li;

    for (size_t i = li; i <= ri; ++i)
        for (const auto& e : leaves[i].entries)
            if (!(e.key < key_lo) && !(key_hi < e.key)) results.emplace_back(e.key, e.word);

    // Bottom-up path: parents of the included node range at each level.
    std::vector<std::vector<RsProofNode>> rev_levels;
    {
        std::vector<RsProofNode> leaf_nodes;
        for (size_t i = li; i <= ri; ++i) {
            RsProofNode pn;
            for (const auto& e : leaves[i].entries) pn.entries.push_back({e.key, e.word, false});
            leaf_nodes.push_back(std::move(pn));
        }
        rev_levels.push_back(std::move(leaf_nodes));
    }
    size_t child_lo = li, child_hi = ri;
    for (size_t k = 0; k + 1 < levels_.size(); ++k) {
        const auto& parents = levels_[k + 1];
        auto [pf, off_f] = locate_child(parents, child_lo);
        auto [pl, off_l] = locate_child(parents, child_hi);
        std::vector<RsProofNode> lvl_nodes;
        size_t child_idx = 0;
        for (size_t j = 0; j < pf; ++j) child_idx += parents[j].entries.size();
        for (size_t j = pf; j <= pl; ++j) {
            RsProofNode pn;
            for (const auto& e : parents[j].entries) {
                bool exp = child_idx >= child_lo && child_idx <= child_hi;
                pn.entries.push_back({e.key, e.word, exp});
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

// --- proof root recomputation (implementation shared with verify) --------

std::optional<Hash32> RsRangeProof::compute_root() const {
    if (levels.empty()) return empty_hash();
    // Bottom-up: hash leaf nodes, then substitute into expanded slots.
    std::vector<Hash32> below;
    const auto& leaf_level = levels.back();
    for (const auto& n : leaf_level) {
        if (n.entries.empty()) return std::nullopt;
        std::vector<RsEntry> es;
        for (const auto& e : n.entries) es.push_back({e.key, e.word});
        below.push_back(hash_entries(es));
    }
    for (size_t k = levels.size() - 1; k-- > 0;) {
        std::vector<Hash32> cur;
        size_t next_child = 0;
        for (const auto& n : levels[k]) {
            if (n.entries.empty()) return std::nullopt;
            std::vector<RsEntry> es;
            for (const auto& e : n.entries) {
                RsEntry re{e.key, e.word};
                if (e.expanded) {
                    if (next_child >= below.size()) return std::nullopt;
                    re.word = below[next_child++];
                }
                es.push_back(re);
            }
            cur.push_back(hash_entries(es));
        }
        if (next_child != below.size()) return std::nullopt;
        below = std::move(cur);
    }
    if (below.size() != 1) return std::nullopt;
    return below[0];
}

}  // namespace colstore
