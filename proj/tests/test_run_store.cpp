#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "colstore/hash.hpp"
#include "colstore/run_store.hpp"

using namespace colstore;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("colstore_run_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

using Writes = std::vector<std::pair<CompoundKey, Value32>>;

Writes sorted_writes(const std::map<uint64_t, std::vector<uint64_t>>& per_addr) {
    Writes out;
    for (const auto& [a, blks] : per_addr)
        for (uint64_t b : blks)
            out.push_back({{address_from_u64(a), b}, value_from_u64(a * 1000000 + b)});
    return out;
}

Hash32 cat_hash(const std::vector<Hash32>& parts) {
    Sha256Stream h;
    for (const auto& p : parts) h.update(p);
    return h.finish();
}

std::vector<uint8_t> slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Brute-force recompute of the run root from its logical contents.
Hash32 oracle_root(const Writes& writes, uint32_t fanout, const RunConfig& cfg) {
    std::map<Address, std::vector<std::pair<uint64_t, Value32>>> per_addr;
    for (const auto& [k, v] : writes) per_addr[k.addr].push_back({k.blk, v});
    std::vector<Hash32> level;
    for (const auto& [addr, vs] : per_addr) {
        VersionTree t = VersionTree::build(vs, cfg.f_exp, cfg.f_max);
        HashFileLeaf leaf{addr, vs.back().first, vs.back().second, t.root_hash()};
        level.push_back(leaf.leaf_hash());
    }
    while (level.size() > 1) {
        std::vector<Hash32> up;
        for (size_t g = 0; g < level.size(); g += fanout) {
            std::vector<Hash32> group(level.begin() + long(g),
                                      level.begin() + long(std::min(level.size(), g + fanout)));
            up.push_back(cat_hash(group));
        }
        level = std::move(up);
    }
    return level[0];
}

}  // namespace

TEST_CASE("single-address run: files, root, lookups") {
    TempDir td;
    RunConfig cfg;
    Writes w = sorted_writes({{7, {42}}});
    Run run = Run::build_from_flush(td.str(), 0, 1, w, cfg);

    for (const char* ext : {"state", "index", "version", "hash", "bloom"})
        CHECK(fs::exists(td.path / ("L0_R1." + std::string(ext))));

    // one leaf: root equals the leaf hash itself
    VersionTree t = VersionTree::build({{42, value_from_u64(7000042)}}, cfg.f_exp, cfg.f_max);
    HashFileLeaf leaf{address_from_u64(7), 42, value_from_u64(7000042), t.root_hash()};
    CHECK(run.root_hash() == leaf.leaf_hash());
    CHECK(run.entry_count() == 1);
    CHECK(run.min_blk() == 42);
    CHECK(run.max_blk() == 42);

    auto got = run.get_latest(address_from_u64(7));
    REQUIRE(got.has_value());
    CHECK(got->first == 42);
    CHECK(got->second == value_from_u64(7000042));
    CHECK_FALSE(run.get_latest(address_from_u64(8)).has_value());

    auto rv = run.get_versions(address_from_u64(7), 0, 100);
    REQUIRE(rv.versions.size() == 1);
    CHECK(rv.versions[0].first == 42);
    auto root = rv.proof.compute_root(address_from_u64(7));
    REQUIRE(root.has_value());
    CHECK(*root == run.root_hash());
}

TEST_CASE("two-run merge produces the three-leaf layout") {
    TempDir td;
    RunConfig cfg;
    // older run: k1 only; newer run: a later k1 version plus k2 and k3
    Run r1 = Run::build_from_flush(td.str(), 0, 1, sorted_writes({{1, {2, 5}}}), cfg);
    Run r2 = Run::build_from_flush(td.str(), 0, 2,
                                   sorted_writes({{1, {12}}, {2, {7, 14}}, {3, {16}}}), cfg);
    Run m = Run::build_from_merge(td.str(), 1, 1, {&r1, &r2}, cfg);

    CHECK(m.entry_count() == 3);
    CHECK(m.min_blk() == 2);
    CHECK(m.max_blk() == 16);

    // latest-version state rows survive the merge
    auto g1 = m.get_latest(address_from_u64(1));
    auto g3 = m.get_latest(address_from_u64(3));
    REQUIRE(g1.has_value());
    CHECK(g1->first == 12);
    REQUIRE(g3.has_value());
    CHECK(g3->first == 16);
    CHECK(g3->second == value_from_u64(3000016));

    // merged k1 tree equals a fresh build over all its versions, and the
    // run root is the hash of the three concatenated leaf hashes
    auto rv1 = m.get_versions(address_from_u64(1), 0, CompoundKey::kMaxBlk);
    REQUIRE(rv1.versions.size() == 3);
    CHECK(rv1.versions[0].first == 2);
    CHECK(rv1.versions[2].first == 12);

    VersionTree t1 = VersionTree::build({{2, value_from_u64(1000002)},
                                         {5, value_from_u64(1000005)},
                                         {12, value_from_u64(1000012)}},
                                        cfg.f_exp, cfg.f_max);
    VersionTree t2 = VersionTree::build({{7, value_from_u64(2000007)},
                                         {14, value_from_u64(2000014)}},
                                        cfg.f_exp, cfg.f_max);
    VersionTree t3 = VersionTree::build({{16, value_from_u64(3000016)}}, cfg.f_exp, cfg.f_max);
    Hash32 h6 = HashFileLeaf{address_from_u64(1), 12, value_from_u64(1000012),
                             t1.root_hash()}.leaf_hash();
    Hash32 h7 = HashFileLeaf{address_from_u64(2), 14, value_from_u64(2000014),
                             t2.root_hash()}.leaf_hash();
    Hash32 h8 = HashFileLeaf{address_from_u64(3), 16, value_from_u64(3000016),
                             t3.root_hash()}.leaf_hash();
    CHECK(m.root_hash() == cat_hash({h6, h7, h8}));
}

TEST_CASE("run root matches an independent recomputation") {
    TempDir td;
    std::mt19937_64 rng(11);
    RunConfig cfg;
    cfg.f_exp = 4;
    cfg.f_max = 16;
    std::map<uint64_t, std::vector<uint64_t>> per_addr;
    for (int a = 0; a < 300; ++a) {
        uint64_t addr = rng() % 100000;
        uint64_t blk = 1 + rng() % 5;
        for (int i = 0; i < int(1 + rng() % 8); ++i) {
            per_addr[addr].push_back(blk);
            blk += 1 + rng() % 9;
        }
    }
    Writes w = sorted_writes(per_addr);
    Run run = Run::build_from_flush(td.str(), 2, 3, w, cfg);
    CHECK(run.root_hash() == oracle_root(w, cfg.fanout, cfg));
}

TEST_CASE("merging a single archive run reproduces identical files") {
    TempDir td;
    std::mt19937_64 rng(12);
    RunConfig cfg;
    std::map<uint64_t, std::vector<uint64_t>> per_addr;
    for (int a = 0; a < 200; ++a)
        for (uint64_t b = 1 + rng() % 4; per_addr[a].size() < 1 + rng() % 6; b += 1 + rng() % 7)
            per_addr[a].push_back(b);
    Run r = Run::build_from_flush(td.str(), 0, 1, sorted_writes(per_addr), cfg);
    Run m = Run::build_from_merge(td.str(), 1, 1, {&r}, cfg);
    CHECK(m.root_hash() == r.root_hash());
    for (const char* ext : {"state", "index", "version", "hash", "bloom"})
        CHECK(slurp(m.file_path(ext)) == slurp(r.file_path(ext)));
}

TEST_CASE("pruned and archive builds share the same root") {
    TempDir td;
    std::mt19937_64 rng(13);
    std::map<uint64_t, std::vector<uint64_t>> per_addr;
    for (int a = 0; a < 150; ++a) {
        uint64_t blk = 1 + rng() % 3;
        for (int i = 0; i < 40; ++i) {
            per_addr[a].push_back(blk);
            blk += 1 + rng() % 5;
        }
    }
    Writes w = sorted_writes(per_addr);
    RunConfig archive;
    archive.f_exp = 4;
    archive.f_max = 16;
    RunConfig pruned = archive;
    pruned.keep_recent = 4;
    Run ra = Run::build_from_flush(td.str(), 0, 1, w, archive);
    Run rp = Run::build_from_flush(td.str(), 0, 2, w, pruned);
    CHECK(rp.root_hash() == ra.root_hash());
    CHECK(fs::file_size(rp.file_path("version")) < fs::file_size(ra.file_path("version")));
    // block range metadata survives pruning (boundary leaves are retained)
    CHECK(rp.min_blk() == ra.min_blk());
    CHECK(rp.max_blk() == ra.max_blk());
}

TEST_CASE("get_latest costs at most two page reads") {
    TempDir td;
    std::mt19937_64 rng(14);
    RunConfig cfg;
    std::set<uint64_t> addr_set;
    while (addr_set.size() < 6000) addr_set.insert(rng() % 10000000);
    std::map<uint64_t, std::vector<uint64_t>> per_addr;
    for (uint64_t a : addr_set) per_addr[a] = {1 + rng() % 100};
    Run run = Run::build_from_flush(td.str(), 0, 1, sorted_writes(per_addr), cfg);
    CHECK(run.page_count() > 100);
    for (uint64_t a : addr_set) {
        run.reset_page_reads();
        auto got = run.get_latest(address_from_u64(a));
        REQUIRE(got.has_value());
        CHECK(got->first == per_addr[a][0]);
        CHECK(run.page_reads() <= 2);
    }
    size_t bloom_rejects = 0;
    for (int t = 0; t < 3000; ++t) {
        uint64_t a = 10000000 + rng() % 10000000;
        run.reset_page_reads();
        CHECK_FALSE(run.get_latest(address_from_u64(a)).has_value());
        CHECK(run.page_reads() <= 2);
        if (run.page_reads() == 0) ++bloom_rejects;
    }
    // 10 bits/key, 7 probes: the filter should reject the vast majority
    CHECK(bloom_rejects > 2700);
}

TEST_CASE("presence proofs verify and tampering breaks them") {
    TempDir td;
    std::mt19937_64 rng(15);
    RunConfig cfg;
    cfg.f_exp = 4;
    cfg.f_max = 16;
    std::map<uint64_t, std::vector<uint64_t>> per_addr;
    std::set<uint64_t> addr_set;
    while (addr_set.size() < 500) addr_set.insert(1 + rng() % 100000);
    for (uint64_t a : addr_set) {
        uint64_t blk = 1 + rng() % 10;
        for (int i = 0; i < int(1 + rng() % 12); ++i) {
            per_addr[a].push_back(blk);
            blk += 1 + rng() % 8;
        }
    }
    Run run = Run::build_from_flush(td.str(), 0, 1, sorted_writes(per_addr), cfg);
    for (int t = 0; t < 200; ++t) {
        auto it = per_addr.begin();
        std::advance(it, long(rng() % per_addr.size()));
        const auto& [a, blks] = *it;
        uint64_t lo = 1 + rng() % 100, hi = lo + rng() % 100;
        auto rv = run.get_versions(address_from_u64(a), lo, hi);
        std::vector<uint64_t> expect;
        for (uint64_t b : blks)
            if (b >= lo && b <= hi) expect.push_back(b);
        REQUIRE(rv.versions.size() == expect.size());
        for (size_t i = 0; i < expect.size(); ++i) {
            CHECK(rv.versions[i].first == expect[i]);
            CHECK(rv.versions[i].second == value_from_u64(a * 1000000 + expect[i]));
        }
        auto root = rv.proof.compute_root(address_from_u64(a));
        REQUIRE(root.has_value());
        CHECK(*root == run.root_hash());

        auto bad = rv.proof;
        bad.leaf.value[31] ^= 1;
        auto bad_root = bad.compute_root(address_from_u64(a));
        CHECK((!bad_root.has_value() || !(*bad_root == run.root_hash())));

        auto wrong = rv.proof.compute_root(address_from_u64(a + 1));
        CHECK((!wrong.has_value() || !(*wrong == run.root_hash())));
    }
}

TEST_CASE("absence proofs pin the straddling leaves") {
    TempDir td;
    RunConfig cfg;
    std::map<uint64_t, std::vector<uint64_t>> per_addr;
    for (uint64_t a = 10; a <= 1000; a += 10) per_addr[a] = {5};
    Run run = Run::build_from_flush(td.str(), 0, 1, sorted_writes(per_addr), cfg);

    SUBCASE("interior gap") {
        auto rv = run.get_versions(address_from_u64(55), 0, 100);
        CHECK(rv.versions.empty());
        CHECK_FALSE(rv.proof.present);
        REQUIRE(rv.proof.absence_leaves.size() == 2);
        CHECK(rv.proof.absence_leaves[0].addr == address_from_u64(50));
        CHECK(rv.proof.absence_leaves[1].addr == address_from_u64(60));
        auto root = rv.proof.compute_root(address_from_u64(55));
        REQUIRE(root.has_value());
        CHECK(*root == run.root_hash());
        // the same proof must not verify for an address outside the gap
        auto other = rv.proof.compute_root(address_from_u64(65));
        CHECK((!other.has_value() || !(*other == run.root_hash())));
    }
    SUBCASE("below the smallest address") {
        auto rv = run.get_versions(address_from_u64(3), 0, 100);
        CHECK_FALSE(rv.proof.present);
        REQUIRE(rv.proof.absence_leaves.size() == 1);
        CHECK(rv.proof.absence_leaves[0].addr == address_from_u64(10));
        auto root = rv.proof.compute_root(address_from_u64(3));
        REQUIRE(root.has_value());
        CHECK(*root == run.root_hash());
    }
    SUBCASE("above the largest address") {
        auto rv = run.get_versions(address_from_u64(2000), 0, 100);
        CHECK_FALSE(rv.proof.present);
        REQUIRE(rv.proof.absence_leaves.size() == 1);
        CHECK(rv.proof.absence_leaves[0].addr == address_from_u64(1000));
        auto root = rv.proof.compute_root(address_from_u64(2000));
        REQUIRE(root.has_value());
        CHECK(*root == run.root_hash());
    }
    SUBCASE("absence proof rejects a present address") {
        auto rv = run.get_versions(address_from_u64(55), 0, 100);
        CHECK_FALSE(rv.proof.compute_root(address_from_u64(50)).has_value());
    }
}

TEST_CASE("open reloads a run faithfully") {
    TempDir td;
    std::mt19937_64 rng(16);
    RunConfig cfg;
    cfg.keep_recent = 3;
    cfg.f_exp = 4;
    cfg.f_max = 16;
    std::map<uint64_t, std::vector<uint64_t>> per_addr;
    for (int a = 0; a < 400; ++a) {
        uint64_t blk = 1 + rng() % 5;
        for (int i = 0; i < int(1 + rng() % 20); ++i) {
            per_addr[a].push_back(blk);
            blk += 1 + rng() % 6;
        }
    }
    Run built = Run::build_from_flush(td.str(), 3, 7, sorted_writes(per_addr), cfg);
    Run opened = Run::open(td.str(), 3, 7, cfg);
    CHECK(opened.root_hash() == built.root_hash());
    CHECK(opened.entry_count() == built.entry_count());
    CHECK(opened.min_blk() == built.min_blk());
    CHECK(opened.max_blk() == built.max_blk());
    for (int t = 0; t < 200; ++t) {
        uint64_t a = rng() % 450;
        CHECK(opened.get_latest(address_from_u64(a)) == built.get_latest(address_from_u64(a)));
    }
    // recent (unpruned) provenance still works through the reopened run
    const auto& blks = per_addr[123];
    auto rv = opened.get_versions(address_from_u64(123), blks.back(), blks.back());
    REQUIRE(rv.versions.size() == 1);
    auto root = rv.proof.compute_root(address_from_u64(123));
    REQUIRE(root.has_value());
    CHECK(*root == opened.root_hash());
}
