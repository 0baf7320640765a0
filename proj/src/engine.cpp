#include "colstore/engine.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "colstore/hash.hpp"

namespace colstore {

namespace fs = std::filesystem;

namespace {

constexpr size_t kWalRecord = 72;  // blk(8) addr(32) value(32)
constexpr uint32_t kCkptMagic = 0x434B5054;

void put_entry(std::vector<uint8_t>& out, const CkptEntry& e) {
    uint8_t flags = uint8_t((e.is_run ? 1 : 0) | (e.has_blocks ? 2 : 0));
    out.push_back(flags);
    put_u32_be(out, e.level);
    put_u32_be(out, e.run_id);
    put_bytes(out, e.hash);
    put_u64_be(out, e.min_blk);
    put_u64_be(out, e.max_blk);
}

CkptEntry read_entry(ByteReader& r) {
    CkptEntry e;
    uint8_t flags = r.u8();
    if (flags > 3) throw MalformedBytes("checkpoint: bad entry flags");
    e.is_run = flags & 1;
    e.has_blocks = flags & 2;
    e.level = r.u32();
    e.run_id = r.u32();
    e.hash = r.bytes<32>();
    e.min_blk = r.u64();
    e.max_blk = r.u64();
    return e;
}

}  // namespace

std::vector<uint8_t> Checkpoint::serialize() const {
    std::vector<uint8_t> out;
    put_u32_be(out, kCkptMagic);
    put_u64_be(out, block);
    put_u64_be(out, wait_start);
    put_u64_be(out, wait_end);
    put_u32_be(out, uint32_t(pre_flush.size()));
    for (const auto& e : pre_flush) put_entry(out, e);
    put_u32_be(out, uint32_t(post_runs.size()));
    for (const auto& e : post_runs) put_entry(out, e);
    put_u32_be(out, uint32_t(next_run_id.size()));
    for (uint32_t id : next_run_id) put_u32_be(out, id);
    return out;
}

Checkpoint Checkpoint::deserialize(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    Checkpoint ck;
    if (r.u32() != kCkptMagic) throw MalformedBytes("checkpoint: bad magic");
    ck.block = r.u64();
    ck.wait_start = r.u64();
    ck.wait_end = r.u64();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) ck.pre_flush.push_back(read_entry(r));
    n = r.u32();
    for (uint32_t i = 0; i < n; ++i) ck.post_runs.push_back(read_entry(r));
    n = r.u32();
    for (uint32_t i = 0; i < n; ++i) ck.next_run_id.push_back(r.u32());
    if (!r.done()) throw MalformedBytes("checkpoint: trailing bytes");
    if (ck.pre_flush.size() < 2) throw MalformedBytes("checkpoint: missing group entries");
    return ck;
}

Engine::Engine(EngineConfig cfg)
    : cfg_(std::move(cfg)),
      dyn_(cfg_.f_exp, cfg_.f_max),
      wait_(cfg_.f_exp, cfg_.f_max) {
    if (cfg_.B < 2 || cfg_.B % 2 != 0) throw Error("engine: B must be even and >= 2");
    if (cfg_.T < 2) throw Error("engine: T must be >= 2");
    fs::create_directories(cfg_.data_dir);
    std::string wal_path = cfg_.data_dir + "/wal.log";
    wal_fd_ = ::open(wal_path.c_str(), O_RDWR | O_CREAT, 0644);
    if (wal_fd_ < 0) throw IoError("open wal failed: " + wal_path);
    off_t size = ::lseek(wal_fd_, 0, SEEK_END);
    wal_count_ = uint64_t(size) / kWalRecord;
    if (uint64_t(size) % kWalRecord != 0) {
        // torn tail from a crash mid-append; records are only durable at
        // block commits, so drop the partial record
        wal_truncate(wal_count_);
    }
    recover();
}

Engine::~Engine() {
    if (wal_fd_ >= 0) ::close(wal_fd_);
}

RunConfig Engine::run_config() const {
    return {cfg_.fanout, cfg_.f_exp, cfg_.f_max, cfg_.keep_recent};
}

// --- WAL -------------------------------------------------------------------

void Engine::wal_append(uint64_t blk, const Address& addr, const Value32& value) {
    uint8_t rec[kWalRecord];
    store_u64_be(rec, blk);
    std::memcpy(rec + 8, addr.data(), 32);
    std::memcpy(rec + 40, value.data(), 32);
    if (::pwrite(wal_fd_, rec, kWalRecord, off_t(wal_count_ * kWalRecord)) !=
        ssize_t(kWalRecord))
        throw IoError("wal append failed");
    ++wal_count_;
}

void Engine::wal_sync() {
    if (::fsync(wal_fd_) != 0) throw IoError("wal fsync failed");
}

void Engine::wal_truncate(uint64_t record_count) {
    if (::ftruncate(wal_fd_, off_t(record_count * kWalRecord)) != 0)
        throw IoError("wal truncate failed");
    wal_count_ = record_count;
}

uint64_t Engine::wal_record_count() const { return wal_count_; }

void Engine::truncate_wal_after_block(uint64_t blk) {
    // records are appended in block order, so rewound blocks form the tail
    uint64_t keep = wal_count_;
    while (keep > 0 && std::get<0>(wal_read(keep - 1, keep)[0]) > blk) --keep;
    wal_truncate(keep);
    wal_sync();
}

std::vector<std::tuple<uint64_t, Address, Value32>> Engine::wal_read(uint64_t first,
                                                                     uint64_t last) const {
    std::vector<std::tuple<uint64_t, Address, Value32>> out;
    for (uint64_t i = first; i < last; ++i) {
        uint8_t rec[kWalRecord];
        if (::pread(wal_fd_, rec, kWalRecord, off_t(i * kWalRecord)) != ssize_t(kWalRecord))
            throw IoError("wal read failed");
        Address a;
        Value32 v;
        std::memcpy(a.data(), rec + 8, 32);
        std::memcpy(v.data(), rec + 40, 32);
        out.emplace_back(load_u64_be(rec), a, v);
    }
    return out;
}

// --- Checkpoints -----------------------------------------------------------

std::string Engine::checkpoint_path(uint64_t blk) const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "/ckpt_%020llu.bin", (unsigned long long)blk);
    return cfg_.data_dir + buf;
}

void Engine::write_checkpoint(const Checkpoint& ck) {
    std::string path = checkpoint_path(ck.block);
    std::string tmp = path + ".tmp";
    auto bytes = ck.serialize();
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw IoError("checkpoint open failed: " + tmp);
    if (::write(fd, bytes.data(), bytes.size()) != ssize_t(bytes.size()) ||
        ::fsync(fd) != 0) {
        ::close(fd);
        throw IoError("checkpoint write failed: " + tmp);
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("checkpoint rename failed: " + path);
}

std::optional<Checkpoint> Engine::latest_checkpoint_before(uint64_t blk) const {
    std::optional<uint64_t> best;
    for (const auto& de : fs::directory_iterator(cfg_.data_dir)) {
        unsigned long long b = 0;
        if (std::sscanf(de.path().filename().c_str(), "ckpt_%020llu.bin", &b) == 1 &&
            b <= blk && (!best || b > *best))
            best = b;
    }
    if (!best) return std::nullopt;
    std::ifstream f(checkpoint_path(*best), std::ios::binary);
    std::vector<uint8_t> bytes{std::istreambuf_iterator<char>(f),
                               std::istreambuf_iterator<char>()};
    try {
        return Checkpoint::deserialize(bytes);
    } catch (const MalformedBytes& e) {
        throw CorruptCheckpoint(e.what());
    }
}

// --- Tier bookkeeping ------------------------------------------------------

CkptEntry Engine::mem_entry(const RsTree& tree) {
    CkptEntry e;
    e.hash = tree.root_hash();
    e.is_run = false;
    if (!tree.empty()) {
        e.has_blocks = true;
        e.min_blk = ~uint64_t(0);
        for (const auto& [k, v] : tree.entries()) {
            e.min_blk = std::min(e.min_blk, k.blk);
            e.max_blk = std::max(e.max_blk, k.blk);
        }
    }
    return e;
}

CkptEntry Engine::run_entry(const Run& run) {
    CkptEntry e;
    e.hash = run.root_hash();
    e.is_run = true;
    e.level = run.level();
    e.run_id = run.run_id();
    e.has_blocks = true;
    e.min_blk = run.min_blk();
    e.max_blk = run.max_blk();
    return e;
}

std::vector<CkptEntry> Engine::live_entries() const {
    std::vector<CkptEntry> out;
    out.push_back(mem_entry(dyn_));
    out.push_back(mem_entry(wait_));
    for (const auto& level : levels_)
        for (auto it = level.rbegin(); it != level.rend(); ++it)
            out.push_back(run_entry(*it));
    return out;
}

std::vector<CkptEntry> Engine::current_entries() const {
    if (!blocked_) return live_entries();
    std::vector<CkptEntry> out;
    out.push_back(mem_entry(dyn_));
    out.insert(out.end(), snapshot_tail_.begin(), snapshot_tail_.end());
    return out;
}

std::vector<Hash32> Engine::root_hash_list() const {
    std::vector<Hash32> out;
    for (const auto& e : current_entries()) out.push_back(e.hash);
    return out;
}

Hash32 Engine::digest() const {
    Sha256Stream h;
    for (const auto& root : root_hash_list()) h.update(root);
    return h.finish();
}

// --- Writes ----------------------------------------------------------------

void Engine::put(const Address& addr, const Value32& value) {
    if (blocked_) throw ReorgBlocked("engine is catching up after a rewind");
    put_internal(addr, value, head_ + 1);
}

void Engine::put_internal(const Address& addr, const Value32& value, uint64_t blk) {
    CompoundKey key{addr, blk};
    if (dyn_.contains(key) || wait_.contains(key))
        throw DuplicateWrite("duplicate write for address at this block");
    if (!replaying_) wal_append(blk, addr, value);
    dyn_.insert(key, value);
}

uint64_t Engine::cur_rec() const { return replaying_ ? replay_cursor_ : wal_count_; }

// Flushes happen only at block commits, never between the puts of one block,
// so every on-disk run covers whole blocks and run block ranges are disjoint.
// Rewinds rely on this: a checkpoint run can be rebuilt from exactly the
// states whose block falls inside its range.
void Engine::maybe_flush() {
    if (dyn_.size() >= cfg_.B / 2) flush();
}

void Engine::flush() {
    Checkpoint ck;
    ck.block = head_ + 1;  // flush runs at commit, before the head advances
    ck.pre_flush = current_entries();
    ck.wait_start = dyn_start_;  // the window of the group being promoted
    ck.wait_end = cur_rec();

    std::vector<Run> pending_delete;
    if (!wait_.empty()) {
        auto entries = wait_.entries();  // key order
        uint64_t wait_max = 0;
        for (const auto& [k, v] : entries) wait_max = std::max(wait_max, k.blk);
        if (levels_.empty()) {
            levels_.emplace_back();
            next_run_id_.push_back(1);
        }
        Run run = Run::build_from_flush(cfg_.data_dir, 1, next_run_id_[0]++, entries,
                                        run_config());
        if (crash_point_ == 1) throw IoError("injected crash: run files written");
        levels_[0].push_back(std::move(run));
        flushed_max_blk_ = std::max(flushed_max_blk_, wait_max);
    }
    wait_ = std::move(dyn_);
    dyn_ = RsTree(cfg_.f_exp, cfg_.f_max);
    dyn_start_ = ck.wait_end;
    blocked_ = false;  // groups realigned with the snapshot's flush point
    snapshot_tail_.clear();

    cascade(pending_delete);

    for (const auto& level : levels_)
        for (auto it = level.rbegin(); it != level.rend(); ++it)
            ck.post_runs.push_back(run_entry(*it));
    ck.next_run_id = next_run_id_;
    if (!replaying_) {
        wal_sync();
        write_checkpoint(ck);
    }
    last_ckpt_ = ck;
    if (crash_point_ == 2) throw IoError("injected crash: checkpoint written");
    for (const auto& r : pending_delete) r.remove_files();
    if (crash_point_ == 3) throw IoError("injected crash: old runs deleted");
}

void Engine::cascade(std::vector<Run>& pending_delete) {
    for (size_t i = 0; i < levels_.size(); ++i) {
        if (levels_[i].size() < cfg_.T) continue;
        if (i + 1 >= levels_.size()) {
            levels_.emplace_back();
            next_run_id_.push_back(1);
        }
        std::vector<const Run*> inputs;  // oldest first
        for (const auto& r : levels_[i]) inputs.push_back(&r);
        Run merged = Run::build_from_merge(cfg_.data_dir, uint32_t(i + 2),
                                           next_run_id_[i + 1]++, inputs, run_config());
        for (auto& r : levels_[i]) pending_delete.push_back(std::move(r));
        levels_[i].clear();
        levels_[i + 1].push_back(std::move(merged));
    }
}

Hash32 Engine::commit_block(uint64_t blk) {
    if (blk != head_ + 1) throw Error("commit_block: expected block " +
                                      std::to_string(head_ + 1));
    maybe_flush();
    head_ = blk;
    if (!replaying_) wal_sync();
    return digest();
}

void Engine::apply_block(uint64_t blk, const std::vector<std::pair<Address, Value32>>& puts) {
    for (const auto& [a, v] : puts) put_internal(a, v, blk);
    maybe_flush();
    head_ = blk;
    if (!replaying_) wal_sync();
}

// --- Reads -----------------------------------------------------------------

std::optional<std::pair<uint64_t, Value32>> Engine::get(const Address& addr) const {
    if (blocked_) throw ReorgBlocked("engine is catching up after a rewind");
    if (auto r = dyn_.search_latest(addr)) return r;
    if (auto r = wait_.search_latest(addr)) return r;
    for (const auto& level : levels_)
        for (auto it = level.rbegin(); it != level.rend(); ++it)
            if (auto r = it->get_latest(addr)) return r;
    return std::nullopt;
}

std::pair<ProvResult, MerkleProof> Engine::prov_query(const Address& addr, uint64_t blk_l,
                                                      uint64_t blk_u) const {
    if (blocked_) throw ReorgBlocked("engine is catching up after a rewind");
    if (blk_l > blk_u) throw Error("prov_query: blk_l > blk_u");

    ProvResult res;
    MerkleProof proof;
    bool have_below = false;

    auto mem_tier = [&](const RsTree& tree) {
        auto [pairs, rs] = tree.search_range({addr, blk_l}, {addr, blk_u});
        SubProof sub;
        sub.kind = SubProofKind::RsPath;
        sub.rs = std::move(rs);
        proof.subs.push_back(std::move(sub));
        for (const auto& [k, v] : pairs)
            if (k.addr == addr) res.versions.emplace_back(k.blk, v);
        if (!have_below)
            for (const auto& [k, v] : tree.entries())
                if (k.addr == addr && k.blk < blk_l) have_below = true;
    };
    mem_tier(dyn_);
    mem_tier(wait_);

    for (const auto& level : levels_) {
        for (auto it = level.rbegin(); it != level.rend(); ++it) {
            if (have_below) {
                // versions of addr in older runs are strictly older than the
                // below-range witness already found, so a bare root suffices
                SubProof sub;
                sub.kind = SubProofKind::BareRoot;
                sub.bare_root = it->root_hash();
                proof.subs.push_back(std::move(sub));
                continue;
            }
            RunVersions rv = it->get_versions(addr, blk_l, blk_u);  // may throw PrunedRange
            if (rv.proof.present && rv.tree_min_blk < blk_l) have_below = true;
            SubProof sub;
            sub.kind = SubProofKind::RunPath;
            sub.run = std::move(rv.proof);
            proof.subs.push_back(std::move(sub));
            for (const auto& [b, v] : rv.versions) res.versions.emplace_back(b, v);
        }
    }

    std::sort(res.versions.begin(), res.versions.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return {std::move(res), std::move(proof)};
}

// --- Recovery --------------------------------------------------------------

// Re-applies WAL records [first, last) through the normal write path, with
// the same per-commit flush cadence as the original execution, so the tier
// layout after replay matches the one before the crash or rewind.
void Engine::replay_records(uint64_t first, uint64_t last) {
    replaying_ = true;
    replay_cursor_ = first;
    std::optional<uint64_t> open_blk;
    for (const auto& [blk, a, v] : wal_read(first, last)) {
        if (open_blk && blk != *open_blk) {
            maybe_flush();
            head_ = *open_blk;
        }
        if (!open_blk || blk != *open_blk) {
            open_blk = blk;
            if (blk > head_ + 1) head_ = blk - 1;  // blocks without puts
        }
        put_internal(a, v, blk);
        ++replay_cursor_;
    }
    if (open_blk) {
        maybe_flush();
        head_ = *open_blk;
    }
    replaying_ = false;
}

void Engine::recover() {
    uint64_t replay_from = 0;
    auto ck = latest_checkpoint_before(~uint64_t(0));
    if (ck) {
        // restore the post-flush run layout
        std::map<uint32_t, std::vector<const CkptEntry*>> by_level;
        for (const auto& e : ck->post_runs) by_level[e.level].push_back(&e);
        uint32_t max_level = 0;
        for (const auto& [lvl, _] : by_level) max_level = std::max(max_level, lvl);
        levels_.assign(std::max<size_t>(max_level, ck->next_run_id.size()), {});
        next_run_id_ = ck->next_run_id;
        next_run_id_.resize(levels_.size(), 1);
        for (const auto& [lvl, entries] : by_level) {
            // stored newest-first; levels hold runs oldest-first
            for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
                Run run = [&] {
                    try {
                        return Run::open(cfg_.data_dir, lvl, (*it)->run_id, run_config());
                    } catch (const Error& e) {
                        throw CorruptCheckpoint(std::string("referenced run unreadable: ") +
                                                e.what());
                    }
                }();
                if (!(run.root_hash() == (*it)->hash))
                    throw CorruptCheckpoint("run hash mismatch");
                flushed_max_blk_ = std::max(flushed_max_blk_, run.max_blk());
                levels_[lvl - 1].push_back(std::move(run));
            }
        }
        // drop files from unfinished flush or merge operations
        std::vector<fs::path> doomed;
        for (const auto& de : fs::directory_iterator(cfg_.data_dir)) {
            unsigned lvl = 0, rid = 0;
            char ext[16];
            if (std::sscanf(de.path().filename().c_str(), "L%u_R%u.%15s", &lvl, &rid, ext) ==
                3) {
                bool referenced = false;
                for (const auto& e : ck->post_runs)
                    if (e.level == lvl && e.run_id == rid) referenced = true;
                if (!referenced) doomed.push_back(de.path());
            }
        }
        for (const auto& p : doomed) fs::remove(p);
        // rebuild the waiting group from its WAL window
        for (const auto& [blk, a, v] : wal_read(ck->wait_start, ck->wait_end))
            wait_.insert({a, blk}, v);
        if (!(wait_.root_hash() == ck->pre_flush[0].hash))
            throw CorruptCheckpoint("waiting group mismatch after replay");
        head_ = ck->block;  // the checkpoint block flushed fully at its commit
        dyn_start_ = ck->wait_end;
        last_ckpt_ = *ck;
        replay_from = ck->wait_end;
    }
    replay_records(replay_from, wal_count_);
}

}  // namespace colstore
