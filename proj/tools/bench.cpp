// Benchmark harness: workload runs, provenance-query measurements, chain
// rewind drills, and offline proof verification. Metrics go to CSV with a
// `metric,key,value` schema (key empty for scalars).
#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include "colstore/reorg.hpp"
#include "colstore/verify.hpp"
#include "colstore/workload.hpp"

using namespace colstore;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double cpu_us() {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return double(ts.tv_sec) * 1e6 + double(ts.tv_nsec) * 1e-3;
}

// Data directory: $COLSTORE_DATA_DIR/<tag> if set, else a tmp subdir.
// Recreated empty: bench runs always start from a fresh engine.
fs::path data_dir(const std::string& tag) {
    fs::path base;
    if (const char* env = std::getenv("COLSTORE_DATA_DIR"))
        base = env;
    else
        base = fs::temp_directory_path() / "colstore_bench";
    fs::path dir = base / tag;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct Csv {
    std::ofstream out;
    explicit Csv(const std::string& path) : out(path) { out << "metric,key,value\n"; }
    template <typename K, typename V>
    void row(const std::string& metric, const K& key, const V& value) {
        out << metric << "," << key << "," << value << "\n";
    }
    template <typename V>
    void row(const std::string& metric, const V& value) {
        row(metric, "", value);
    }
};

double percentile(std::vector<double>& v, double p) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    size_t i = size_t(p * double(v.size() - 1));
    return v[i];
}

// On-disk bytes grouped by file kind, plus the filesystem total.
std::map<std::string, uint64_t> storage_by_kind(const fs::path& dir) {
    std::map<std::string, uint64_t> bytes;
    for (const auto& de : fs::directory_iterator(dir)) {
        if (!de.is_regular_file()) continue;
        std::string name = de.path().filename().string();
        std::string kind;
        if (name == "wal.log")
            kind = "wal";
        else if (name.rfind("ckpt_", 0) == 0)
            kind = "checkpoint";
        else
            kind = de.path().extension().string().substr(1);  // state/index/...
        uint64_t sz = de.file_size();
        bytes[kind] += sz;
        bytes["total"] += sz;
    }
    return bytes;
}

struct EngineFlags {
    uint64_t B = 4096;
    uint32_t T = 10;
    uint32_t fanout = 4;
    std::string prune = "archive";

    void attach(CLI::App* cmd) {
        cmd->add_option("--btree-capacity", B, "in-memory capacity B (even)");
        cmd->add_option("--size-ratio", T, "runs per level before merging");
        cmd->add_option("--fanout", fanout, "hash-file Merkle tree fanout");
        cmd->add_option("--prune", prune, "keep:<k> or archive");
    }
    EngineConfig config(const std::string& tag) const {
        EngineConfig cfg;
        cfg.data_dir = data_dir(tag).string();
        cfg.B = B;
        cfg.T = T;
        cfg.fanout = fanout;
        if (prune != "archive") {
            if (prune.rfind("keep:", 0) != 0)
                throw CLI::ValidationError("--prune", "expected keep:<k> or archive");
            cfg.keep_recent = std::stoull(prune.substr(5));
        }
        return cfg;
    }
};

std::vector<uint64_t> parse_list(const std::string& csv) {
    std::vector<uint64_t> out;
    size_t pos = 0;
    while (pos < csv.size()) {
        size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        out.push_back(std::stoull(csv.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

void apply_ops(Engine& e, uint64_t blk, const std::vector<Op>& ops,
               std::vector<double>* put_us, std::vector<double>* get_us) {
    for (const auto& op : ops) {
        auto t0 = Clock::now();
        if (op.is_write)
            e.put(op.addr, op.value);
        else
            (void)e.get(op.addr);
        double us = ms_since(t0) * 1000.0;
        if (put_us && op.is_write) put_us->push_back(us);
        if (get_us && !op.is_write) get_us->push_back(us);
    }
    e.commit_block(blk);
}

void seed_engine(Engine& e, const Workload& w) {
    for (uint64_t blk = 1; blk <= w.seed_block_count(); ++blk)
        apply_ops(e, blk, w.seed_block(blk), nullptr, nullptr);
}

int cmd_run(const WorkloadSpec& spec, const EngineFlags& ef, const std::string& out) {
    Workload w(spec);
    Engine e(ef.config("run"));
    seed_engine(e, w);

    Csv csv(out);
    std::vector<double> put_us, get_us;
    uint64_t txs = 0, puts = 0;
    const uint64_t first = e.head() + 1;
    const uint64_t interval = std::max<uint64_t>(1, spec.blocks / 10);
    auto t0 = Clock::now();
    auto ti = t0;
    for (uint64_t i = 0; i < spec.blocks; ++i) {
        auto ops = w.block_ops(first + i);
        apply_ops(e, first + i, ops, &put_us, &get_us);
        txs += ops.size();
        for (const auto& op : ops) puts += op.is_write;
        if ((i + 1) % interval == 0) {
            double s = ms_since(ti) / 1000.0;
            csv.row("interval_tx_per_s", (i + 1) / interval,
                    double(interval) * spec.txs_per_block / s);
            ti = Clock::now();
        }
    }
    double total_s = ms_since(t0) / 1000.0;

    csv.row("blocks", spec.blocks);
    csv.row("txs", txs);
    csv.row("puts", puts);
    csv.row("throughput_tx_per_s", double(txs) / total_s);
    csv.row("throughput_block_per_s", double(spec.blocks) / total_s);
    for (auto [name, v] : {std::pair<const char*, std::vector<double>*>{"put", &put_us},
                           {"get", &get_us}}) {
        if (v->empty()) continue;
        csv.row(std::string("latency_") + name + "_us", "p50", percentile(*v, 0.50));
        csv.row(std::string("latency_") + name + "_us", "p90", percentile(*v, 0.90));
        csv.row(std::string("latency_") + name + "_us", "p99", percentile(*v, 0.99));
    }
    for (const auto& [kind, bytes] : storage_by_kind(e.config().data_dir))
        csv.row("storage_bytes", kind, bytes);
    csv.row("final_digest", to_hex(e.digest()));
    std::cout << "wrote " << out << " (data: " << e.config().data_dir << ")\n";
    return 0;
}

int cmd_prov(const WorkloadSpec& spec_in, const EngineFlags& ef, const std::string& ranges,
             const std::string& out, const std::string& proof_out,
             const std::string& results_out, int queries_per_range) {
    WorkloadSpec spec = spec_in;
    spec.mix = OpMix::WO;  // accumulate versions
    Workload w(spec);
    Engine e(ef.config("prov"));
    seed_engine(e, w);
    uint64_t first = e.head() + 1;
    for (uint64_t i = 0; i < spec.blocks; ++i)
        apply_ops(e, first + i, w.block_ops(first + i), nullptr, nullptr);

    Csv csv(out);
    Hash32 digest = e.digest();
    csv.row("digest", to_hex(digest));
    std::mt19937_64 rng(spec.seed + 17);
    for (uint64_t r : parse_list(ranges)) {
        double prove_us = 0, verify_us = 0, bytes = 0, nres = 0;
        for (int q = 0; q < queries_per_range; ++q) {
            Address addr = address_from_u64(rng() % std::max<uint64_t>(1, spec.base_states / 50));
            uint64_t lo = first + rng() % std::max<uint64_t>(1, spec.blocks);
            uint64_t hi = lo + r - 1;
            double c0 = cpu_us();
            auto [res, proof] = e.prov_query(addr, lo, hi);
            prove_us += cpu_us() - c0;
            auto pb = proof.serialize();
            auto rb = res.serialize();
            bytes += double(pb.size());
            nres += double(res.versions.size());
            c0 = cpu_us();
            Verdict v = verify_prov_bytes(digest, addr, lo, hi, rb, pb);
            verify_us += cpu_us() - c0;
            if (v != Verdict::Accept) {
                std::cerr << "self-check failed: " << verdict_name(v) << "\n";
                return 1;
            }
            if (q == 0 && r == parse_list(ranges).back() && !proof_out.empty()) {
                // proof envelope: addr ‖ blk_l ‖ blk_u ‖ proof bytes
                std::ofstream pf(proof_out, std::ios::binary);
                std::vector<uint8_t> env(addr.begin(), addr.end());
                put_u64_be(env, lo);
                put_u64_be(env, hi);
                put_bytes(env, pb);
                pf.write(reinterpret_cast<const char*>(env.data()), std::streamsize(env.size()));
                std::ofstream rf(results_out.empty() ? "results.bin" : results_out,
                                 std::ios::binary);
                rf.write(reinterpret_cast<const char*>(rb.data()), std::streamsize(rb.size()));
                std::cout << "proof: " << proof_out << "  digest: " << to_hex(digest) << "\n";
            }
        }
        double n = queries_per_range;
        csv.row("proof_bytes_avg", r, bytes / n);
        csv.row("prove_cpu_us_avg", r, prove_us / n);
        csv.row("verify_cpu_us_avg", r, verify_us / n);
        csv.row("results_avg", r, nres / n);
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_reorg(const WorkloadSpec& spec, const EngineFlags& ef, const std::string& depths,
              const std::string& out) {
    Workload w(spec);
    Csv csv(out);
    for (uint64_t depth : parse_list(depths)) {
        Engine e(ef.config("reorg"));
        seed_engine(e, w);
        uint64_t first = e.head() + 1;
        for (uint64_t i = 0; i < spec.blocks; ++i)
            apply_ops(e, first + i, w.block_ops(first + i), nullptr, nullptr);
        if (depth > spec.blocks + e.head()) {
            std::cerr << "depth " << depth << " exceeds chain height\n";
            return 1;
        }
        uint64_t blk_rew = e.head() - depth;
        // synthetic canonical branch replacing the rewound tail
        ForkRequest fork{blk_rew, {}};
        std::mt19937_64 rng(spec.seed * 31 + depth);
        for (uint64_t b = blk_rew + 1; b <= blk_rew + depth + 2; ++b) {
            ForkRequest::Block blk{b, {}};
            std::set<uint64_t> used;
            for (int j = 0; j < 4; ++j) {
                uint64_t a = rng() % spec.base_states;
                while (!used.insert(a).second) a = rng() % spec.base_states;
                blk.puts.emplace_back(address_from_u64(a), value_from_u64(rng()));
            }
            fork.canonical_suffix.push_back(std::move(blk));
        }
        bool frequent = can_rewind_in_memory(e, blk_rew);
        auto t0 = Clock::now();
        if (frequent)
            rewind_in_memory(e, fork);
        else
            chain_reorg_on_disk(e, fork);
        // continue past any catch-up window so the digest is comparable
        while (e.blocked()) {
            uint64_t b = e.head() + 1;
            ForkRequest::Block blk{b, {{address_from_u64(rng() % spec.base_states),
                                        value_from_u64(rng())}}};
            e.apply_block(blk.blk, blk.puts);
            fork.canonical_suffix.push_back(std::move(blk));
        }
        double ms = ms_since(t0);

        // dual-node check: a fresh engine replaying the canonical chain
        Engine twin(ef.config("reorg_twin"));
        seed_engine(twin, w);
        for (uint64_t b = first; b <= blk_rew; ++b) {
            auto ops = w.block_ops(b);
            apply_ops(twin, b, ops, nullptr, nullptr);
        }
        for (const auto& blk : fork.canonical_suffix) twin.apply_block(blk.blk, blk.puts);
        bool match = twin.digest() == e.digest();
        csv.row("rewind_ms", depth, ms);
        csv.row("path", depth, frequent ? "frequent" : "rare");
        csv.row("digest_match", depth, match ? 1 : 0);
        if (!match) {
            std::cerr << "digest mismatch at depth " << depth << "\n";
            return 1;
        }
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_verify(const std::string& proof_path, const std::string& results_path,
               const std::string& digest_hex) {
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + p);
        return std::vector<uint8_t>(std::istreambuf_iterator<char>(f), {});
    };
    auto env = slurp(proof_path);
    auto rb = slurp(results_path);
    auto dg = from_hex(digest_hex);
    if (dg.size() != 32) {
        std::cerr << "digest must be 32 hex bytes\n";
        return 2;
    }
    if (env.size() < 48) {
        std::cerr << "malformed\n";
        return 1;
    }
    Address addr;
    std::copy(env.begin(), env.begin() + 32, addr.begin());
    uint64_t lo = load_u64_be(env.data() + 32), hi = load_u64_be(env.data() + 40);
    Hash32 digest;
    std::copy(dg.begin(), dg.end(), digest.begin());
    Verdict v = verify_prov_bytes(digest, addr, lo, hi,
                                  std::span(rb),
                                  std::span(env).subspan(48));
    std::cout << verdict_name(v) << "\n";
    return v == Verdict::Accept ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"column-store engine benchmarks"};
    app.require_subcommand(1);

    WorkloadSpec spec;
    spec.base_states = 20000;
    spec.blocks = 20000;
    EngineFlags ef;
    std::string mix = "wo", dist = "uniform", out = "metrics.csv";

    auto add_workload = [&](CLI::App* cmd, bool with_mix) {
        if (with_mix)
            cmd->add_option("--mix", mix, "wo|rw|ro")
                ->check(CLI::IsMember({"wo", "rw", "ro"}));
        cmd->add_option("--dist", dist, "uniform|zipfian")
            ->check(CLI::IsMember({"uniform", "zipfian"}));
        cmd->add_option("--blocks", spec.blocks, "measured blocks");
        cmd->add_option("--base", spec.base_states, "seeded base states");
        cmd->add_option("--txs-per-block", spec.txs_per_block, "transactions per block");
        cmd->add_option("--seed", spec.seed, "workload seed");
        cmd->add_option("--out", out, "metrics CSV path");
        ef.attach(cmd);
    };

    auto* run = app.add_subcommand("run", "workload benchmark");
    add_workload(run, true);

    auto* prov = app.add_subcommand("prov", "provenance query benchmark");
    std::string ranges = "2,4,8,16,32,64,128";
    std::string proof_out, results_out;
    int queries = 20;
    add_workload(prov, false);
    prov->add_option("--ranges", ranges, "comma-separated version-range sizes");
    prov->add_option("--queries", queries, "queries per range size");
    prov->add_option("--proof-out", proof_out, "write a sample proof envelope");
    prov->add_option("--results-out", results_out, "write the matching results");

    auto* reorg = app.add_subcommand("reorg", "chain rewind drills");
    std::string depths = "0,1,4,16,64";
    add_workload(reorg, false);
    reorg->add_option("--depths", depths, "comma-separated rewind depths");

    auto* verify = app.add_subcommand("verify", "verify a proof file");
    std::string proof_path, results_path, digest_hex;
    verify->add_option("--proof", proof_path, "proof envelope file")->required();
    verify->add_option("--results", results_path, "results file")->required();
    verify->add_option("--digest", digest_hex, "trusted digest (hex)")->required();

    CLI11_PARSE(app, argc, argv);

    spec.mix = mix == "ro" ? OpMix::RO : mix == "rw" ? OpMix::RW : OpMix::WO;
    spec.dist = dist == "zipfian" ? Dist::Zipfian : Dist::Uniform;

    try {
        if (run->parsed()) return cmd_run(spec, ef, out);
        if (prov->parsed())
            return cmd_prov(spec, ef, ranges, out, proof_out, results_out, queries);
        if (reorg->parsed()) return cmd_reorg(spec, ef, depths, out);
        if (verify->parsed()) return cmd_verify(proof_path, results_path, digest_hex);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}
