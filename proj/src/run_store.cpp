#include "colstore/run_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>

#include "colstore/hash.hpp"

namespace colstore {

namespace {

void write_file_sync(const std::string& path, std::span<const uint8_t> bytes) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw IoError("open for write failed: " + path);
    size_t off = 0;
    while (off < bytes.size()) {
        ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
        if (n < 0) {
            ::close(fd);
            throw IoError("write failed: " + path);
        }
        off += size_t(n);
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        throw IoError("fsync failed: " + path);
    }
    ::close(fd);
}

std::vector<uint8_t> read_file(const std::string& path) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw IoError("open for read failed: " + path);
    off_t size = ::lseek(fd, 0, SEEK_END);
    if (size < 0) {
        ::close(fd);
        throw IoError("lseek failed: " + path);
    }
    std::vector<uint8_t> out(static_cast<size_t>(size));
    size_t off = 0;
    while (off < out.size()) {
        ssize_t n = ::pread(fd, out.data() + off, out.size() - off, off_t(off));
        if (n <= 0) {
            ::close(fd);
            throw IoError("read failed: " + path);
        }
        off += size_t(n);
    }
    ::close(fd);
    return out;
}

std::vector<uint8_t> read_range(const std::string& path, uint64_t offset, size_t len) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw IoError("open for read failed: " + path);
    std::vector<uint8_t> out(len);
    size_t off = 0;
    while (off < len) {
        ssize_t n = ::pread(fd, out.data() + off, len - off, off_t(offset + off));
        if (n < 0) {
            ::close(fd);
            throw IoError("read failed: " + path);
        }
        if (n == 0) break;  // short file (zero padding handled by caller)
        off += size_t(n);
    }
    ::close(fd);
    out.resize(off);
    return out;
}

uint64_t file_size_of(const std::string& path) {
    std::error_code ec;
    auto s = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("stat failed: " + path);
    return uint64_t(s);
}

std::vector<uint8_t> encode_state_entry(const StateEntry& e) {
    std::vector<uint8_t> out;
    out.reserve(Run::kEntrySize);
    put_bytes(out, e.addr);
    put_u64_be(out, e.blk);
    put_bytes(out, e.value);
    put_u64_be(out, e.version_offset);
    return out;
}

StateEntry decode_state_entry(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    StateEntry e;
    e.addr = r.bytes<32>();
    e.blk = r.u64();
    e.value = r.bytes<32>();
    e.version_offset = r.u64();
    return e;
}

// Complete f-ary MHT, leaves first, one concatenated hash per node per
// level; parents hash the concatenation of their (up to f) children. A
// single node ends the file; a lone leaf is its own root.
std::vector<std::vector<Hash32>> build_mht_levels(std::vector<Hash32> leaves, uint32_t fanout) {
    std::vector<std::vector<Hash32>> levels;
    levels.push_back(std::move(leaves));
    while (levels.back().size() > 1) {
        const auto& below = levels.back();
        std::vector<Hash32> up;
        for (size_t g = 0; g < below.size(); g += fanout) {
            Sha256Stream h;
            for (size_t i = g; i < std::min(below.size(), g + fanout); ++i) h.update(below[i]);
            up.push_back(h.finish());
        }
        levels.push_back(std::move(up));
    }
    return levels;
}

}  // namespace

std::string Run::file_path(const char* ext) const {
    return dir_ + "/L" + std::to_string(level_) + "_R" + std::to_string(run_id_) + "." + ext;
}

Run Run::build_files(const std::string& dir, uint32_t level, uint32_t run_id,
                     std::vector<AddrRecord> records, const RunConfig& cfg) {
    if (records.empty()) throw EmptyInput("run build: no records");
    Run run;
    run.dir_ = dir;
    run.level_ = level;
    run.run_id_ = run_id;
    run.cfg_ = cfg;
    run.entry_count_ = records.size();

    // version file + per-address offsets and tree roots
    std::vector<uint8_t> version_bytes;
    std::vector<uint64_t> offsets;
    std::vector<Hash32> vt_roots;
    bool first = true;
    for (const auto& rec : records) {
        offsets.push_back(version_bytes.size());
        auto blob = rec.tree.serialize_bfs();
        put_bytes(version_bytes, blob);
        vt_roots.push_back(rec.tree.root_hash());
        if (first) {
            run.min_blk_ = rec.tree.min_blk();
            run.max_blk_ = rec.tree.max_blk();
            first = false;
        } else {
            run.min_blk_ = std::min(run.min_blk_, rec.tree.min_blk());
            run.max_blk_ = std::max(run.max_blk_, rec.tree.max_blk());
        }
    }

    // state file (padded pages) and index training input
    std::vector<uint8_t> state_bytes;
    std::vector<Address> page_firsts;
    for (size_t i = 0; i < records.size(); ++i) {
        if (i % kEntriesPerPage == 0) {
            state_bytes.resize((i / kEntriesPerPage) * kPageSize, 0);
            page_firsts.push_back(records[i].addr);
        }
        StateEntry e{records[i].addr, records[i].latest_blk, records[i].latest_value, offsets[i]};
        put_bytes(state_bytes, encode_state_entry(e));
    }
    state_bytes.resize((records.size() + kEntriesPerPage - 1) / kEntriesPerPage * kPageSize, 0);
    run.index_ = LearnedIndex::train(page_firsts);

    // hash file
    std::vector<Hash32> leaves;
    for (size_t i = 0; i < records.size(); ++i) {
        HashFileLeaf leaf{records[i].addr, records[i].latest_blk, records[i].latest_value,
                          vt_roots[i]};
        leaves.push_back(leaf.leaf_hash());
    }
    auto levels = build_mht_levels(std::move(leaves), cfg.fanout);
    run.root_hash_ = levels.back()[0];
    std::vector<uint8_t> hash_bytes;
    put_u64_be(hash_bytes, uint64_t(records.size()));
    for (const auto& lvl : levels)
        for (const auto& h : lvl) put_bytes(hash_bytes, h);

    // bloom filter
    std::vector<Address> addrs;
    addrs.reserve(records.size());
    for (const auto& rec : records) addrs.push_back(rec.addr);
    run.bloom_ = BloomFilter(addrs);

    write_file_sync(run.file_path("state"), state_bytes);
    write_file_sync(run.file_path("index"), run.index_.serialize());
    write_file_sync(run.file_path("version"), version_bytes);
    write_file_sync(run.file_path("hash"), hash_bytes);
    write_file_sync(run.file_path("bloom"), run.bloom_.serialize());
    return run;
}

Run Run::build_from_flush(const std::string& dir, uint32_t level, uint32_t run_id,
                          const std::vector<std::pair<CompoundKey, Value32>>& entries,
                          const RunConfig& cfg) {
    if (entries.empty()) throw EmptyInput("flush: no entries");
    std::vector<AddrRecord> records;
    size_t i = 0;
    while (i < entries.size()) {
        const Address& addr = entries[i].first.addr;
        std::vector<std::pair<uint64_t, Value32>> versions;
        while (i < entries.size() && entries[i].first.addr == addr) {
            if (i > 0 && !(entries[i - 1].first < entries[i].first))
                throw UnsortedInput("flush: entries not sorted");
            versions.emplace_back(entries[i].first.blk, entries[i].second);
            ++i;
        }
        VersionTree tree = VersionTree::build(versions, cfg.f_exp, cfg.f_max);
        if (cfg.keep_recent) tree = tree.prune(*cfg.keep_recent);
        records.push_back(
            {addr, versions.back().first, versions.back().second, std::move(tree)});
    }
    return build_files(dir, level, run_id, std::move(records), cfg);
}

Run Run::build_from_merge(const std::string& dir, uint32_t level, uint32_t run_id,
                          const std::vector<const Run*>& runs, const RunConfig& cfg) {
    if (runs.empty()) throw EmptyInput("merge: no runs");
    // Gather per-run state entries; streams are sorted by addr.
    struct Cursor {
        const Run* run;
        std::vector<StateEntry> entries;
        size_t pos = 0;
    };
    std::vector<Cursor> cursors;
    for (const Run* r : runs) cursors.push_back({r, r->all_state_entries(), 0});

    std::vector<AddrRecord> records;
    while (true) {
        const Address* next = nullptr;
        for (const auto& c : cursors)
            if (c.pos < c.entries.size() &&
                (!next || c.entries[c.pos].addr < *next))
                next = &c.entries[c.pos].addr;
        if (!next) break;
        Address addr = *next;
        VersionTree tree(cfg.f_exp, cfg.f_max);
        uint64_t latest_blk = 0;
        Value32 latest_value{};
        for (auto& c : cursors) {  // oldest to newest
            if (c.pos >= c.entries.size() || !(c.entries[c.pos].addr == addr)) continue;
            const StateEntry& e = c.entries[c.pos];
            VersionTree t = c.run->read_version_tree(e.version_offset);
            tree = tree.empty() ? std::move(t) : VersionTree::merge(tree, t);
            latest_blk = e.blk;
            latest_value = e.value;
            ++c.pos;
        }
        if (cfg.keep_recent) tree = tree.prune(*cfg.keep_recent);
        records.push_back({addr, latest_blk, latest_value, std::move(tree)});
    }
    return build_files(dir, level, run_id, std::move(records), cfg);
}

Run Run::open(const std::string& dir, uint32_t level, uint32_t run_id, const RunConfig& cfg) {
    Run run;
    run.dir_ = dir;
    run.level_ = level;
    run.run_id_ = run_id;
    run.cfg_ = cfg;
    auto version_bytes = read_file(run.file_path("version"));
    ByteReader r(version_bytes);
    bool first = true;
    uint64_t count = 0;
    while (!r.done()) {
        VersionTree t = VersionTree::deserialize_bfs(r, cfg.f_exp, cfg.f_max);
        if (t.empty()) throw MalformedBytes("version file: empty tree");
        if (first) {
            run.min_blk_ = t.min_blk();
            run.max_blk_ = t.max_blk();
            first = false;
        } else {
            run.min_blk_ = std::min(run.min_blk_, t.min_blk());
            run.max_blk_ = std::max(run.max_blk_, t.max_blk());
        }
        ++count;
    }
    run.entry_count_ = count;
    run.bloom_ = BloomFilter::deserialize(read_file(run.file_path("bloom")));
    run.index_ = LearnedIndex::deserialize(read_file(run.file_path("index")), run.page_count());
    auto hash_bytes = read_file(run.file_path("hash"));
    if (hash_bytes.size() < 8 + 32) throw MalformedBytes("hash file: too short");
    std::memcpy(run.root_hash_.data(), hash_bytes.data() + hash_bytes.size() - 32, 32);
    if (load_u64_be(hash_bytes.data()) != count)
        throw MalformedBytes("hash file: leaf count mismatch");
    return run;
}

std::vector<StateEntry> Run::all_state_entries() const {
    auto bytes = read_file(file_path("state"));
    std::vector<StateEntry> out;
    out.reserve(entry_count_);
    for (uint64_t i = 0; i < entry_count_; ++i) {
        uint64_t page = i / kEntriesPerPage, slot = i % kEntriesPerPage;
        size_t off = size_t(page * kPageSize + slot * kEntrySize);
        out.push_back(decode_state_entry({bytes.data() + off, kEntrySize}));
    }
    return out;
}

VersionTree Run::read_version_tree(uint64_t offset) const {
    uint64_t size = file_size_of(file_path("version"));
    if (offset >= size) throw IoError("version offset out of range");
    auto bytes = read_range(file_path("version"), offset, size_t(size - offset));
    ByteReader r(bytes);
    return VersionTree::deserialize_bfs(r, cfg_.f_exp, cfg_.f_max);
}

StateEntry Run::read_entry(uint64_t index) const {
    uint64_t page = index / kEntriesPerPage, slot = index % kEntriesPerPage;
    auto bytes =
        read_range(file_path("state"), page * kPageSize + slot * kEntrySize, kEntrySize);
    if (bytes.size() != kEntrySize) throw IoError("state entry read short");
    return decode_state_entry(bytes);
}

Run::Lookup Run::find_state_entry(const Address& addr) const {
    auto read_page = [&](uint64_t page) {
        ++page_reads_;
        auto bytes = read_range(file_path("state"), page * kPageSize, kPageSize);
        uint64_t n = std::min<uint64_t>(kEntriesPerPage,
                                        entry_count_ - page * kEntriesPerPage);
        std::vector<StateEntry> out;
        for (uint64_t i = 0; i < n; ++i)
            out.push_back(decode_state_entry({bytes.data() + i * kEntrySize, kEntrySize}));
        return out;
    };
    uint64_t pages = page_count();
    uint64_t p = std::min(index_.predict(addr), pages - 1);
    auto entries = read_page(p);
    if (addr < entries.front().addr && p > 0) {
        --p;
        entries = read_page(p);
    } else if (entries.back().addr < addr && p + 1 < pages) {
        ++p;
        entries = read_page(p);
    }
    auto it = std::lower_bound(entries.begin(), entries.end(), addr,
                               [](const StateEntry& e, const Address& a) { return e.addr < a; });
    Lookup lk;
    uint64_t base = p * kEntriesPerPage;
    if (it != entries.end() && it->addr == addr) {
        lk.entry = *it;
        lk.leaf_index = base + uint64_t(it - entries.begin());
        return lk;
    }
    uint64_t ins = base + uint64_t(it - entries.begin());
    if (ins > 0) lk.pred_index = ins - 1;
    if (ins < entry_count_) lk.succ_index = ins;
    lk.leaf_index = ins;
    return lk;
}

std::optional<std::pair<uint64_t, Value32>> Run::get_latest(const Address& addr) const {
    if (!bloom_.may_contain(addr)) return std::nullopt;
    auto lk = find_state_entry(addr);
    if (!lk.entry) return std::nullopt;
    return std::make_pair(lk.entry->blk, lk.entry->value);
}

HashFilePath Run::hash_path(uint64_t leaf_index) const {
    auto bytes = read_file(file_path("hash"));
    ByteReader r(bytes);
    uint64_t leaf_count = r.u64();
    HashFilePath path;
    path.leaf_index = leaf_index;
    path.leaf_count = leaf_count;
    path.fanout = cfg_.fanout;
    uint64_t level_count = leaf_count;
    uint64_t level_off = 8;  // byte offset of current level
    uint64_t idx = leaf_index;
    while (level_count > 1) {
        uint64_t group = idx / cfg_.fanout;
        uint64_t gstart = group * cfg_.fanout;
        uint64_t gsize = std::min<uint64_t>(cfg_.fanout, level_count - gstart);
        HashFilePath::Level lvl;
        lvl.pos_in_group = uint32_t(idx - gstart);
        for (uint64_t i = 0; i < gsize; ++i) {
            if (i == idx - gstart) continue;
            Hash32 h;
            std::memcpy(h.data(), bytes.data() + level_off + (gstart + i) * 32, 32);
            lvl.siblings.push_back(h);
        }
        path.levels.push_back(std::move(lvl));
        level_off += level_count * 32;
        level_count = (level_count + cfg_.fanout - 1) / cfg_.fanout;
        idx = group;
    }
    return path;
}

HashFileLeaf Run::leaf_for(const StateEntry& e) const {
    return {e.addr, e.blk, e.value, read_version_tree(e.version_offset).root_hash()};
}

RunVersions Run::get_versions(const Address& addr, uint64_t blk_l, uint64_t blk_u) const {
    RunVersions out;
    Lookup lk = bloom_.may_contain(addr) ? find_state_entry(addr) : [&] {
        // Bloom negative: derive the straddling indices without the index
        // by a binary search over state entries (absence still needs a
        // provable path).
        Lookup l;
        uint64_t lo = 0, hi = entry_count_;
        while (lo < hi) {
            uint64_t mid = (lo + hi) / 2;
            if (read_entry(mid).addr < addr)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < entry_count_) {
            StateEntry e = read_entry(lo);
            if (e.addr == addr) {
                l.entry = e;
                l.leaf_index = lo;
                return l;
            }
        }
        if (lo > 0) l.pred_index = lo - 1;
        if (lo < entry_count_) l.succ_index = lo;
        l.leaf_index = lo;
        return l;
    }();
    if (lk.entry) {
        VersionTree tree = read_version_tree(lk.entry->version_offset);
        auto [versions, vt_proof] = tree.query_range(blk_l, blk_u);
        out.versions = versions;
        out.proof.present = true;
        out.proof.leaf = {lk.entry->addr, lk.entry->blk, lk.entry->value, tree.root_hash()};
        out.proof.leaf_path = hash_path(lk.leaf_index);
        out.proof.vt_proof = std::move(vt_proof);
        out.proof.versions = out.versions;
        out.tree_min_blk = tree.min_blk();
        out.tree_max_blk = tree.max_blk();
        return out;
    }
    out.proof.present = false;
    for (auto idx : {lk.pred_index, lk.succ_index}) {
        if (!idx) continue;
        StateEntry e = read_entry(*idx);
        out.proof.absence_leaves.push_back(leaf_for(e));
        out.proof.absence_paths.push_back(hash_path(*idx));
    }
    return out;
}

void Run::remove_files() const {
    for (const char* ext : {"state", "index", "version", "hash", "bloom"}) {
        std::error_code ec;
        std::filesystem::remove(file_path(ext), ec);
    }
}

}  // namespace colstore
