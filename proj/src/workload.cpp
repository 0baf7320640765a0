#include "colstore/workload.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "colstore/errors.hpp"

namespace colstore {

double write_fraction(OpMix mix) {
    switch (mix) {
        case OpMix::RO: return 0.0;
        case OpMix::RW: return 0.5;
        case OpMix::WH: return 0.9;
        case OpMix::WO: return 1.0;
    }
    return 1.0;
}

namespace {

double zeta(uint64_t n, double theta) {
    double s = 0;
    for (uint64_t i = 1; i <= n; ++i) s += 1.0 / std::pow(double(i), theta);
    return s;
}

}  // namespace

Workload::Workload(const WorkloadSpec& spec) : spec_(spec) {
    if (spec_.base_states == 0) throw Error("workload: base_states must be positive");
    if (spec_.txs_per_block == 0) throw Error("workload: txs_per_block must be positive");
    if (spec_.dist == Dist::Zipfian) {
        const uint64_t n = spec_.base_states;
        const double theta = spec_.theta;
        zetan_ = zeta(n, theta);
        zeta2_ = zeta(2, theta);
        alpha_ = 1.0 / (1.0 - theta);
        eta_ = (1.0 - std::pow(2.0 / double(n), 1.0 - theta)) / (1.0 - zeta2_ / zetan_);
    }
}

uint64_t Workload::seed_block_count() const {
    return (spec_.base_states + spec_.txs_per_block - 1) / spec_.txs_per_block;
}

std::vector<Op> Workload::seed_block(uint64_t blk) const {
    std::mt19937_64 rng(spec_.seed * 0x9e3779b97f4a7c15ULL + blk);
    std::vector<Op> ops;
    uint64_t first = (blk - 1) * spec_.txs_per_block;
    uint64_t last = std::min<uint64_t>(first + spec_.txs_per_block, spec_.base_states);
    for (uint64_t a = first; a < last; ++a)
        ops.push_back({true, address_from_u64(a), value_from_u64(rng())});
    return ops;
}

uint64_t Workload::draw_addr(uint64_t& state) const {
    std::mt19937_64 rng(state);
    state = rng();
    if (spec_.dist == Dist::Uniform) return state % spec_.base_states;
    // Gray et al. zipfian over [0, base_states), hottest keys first
    double u = double(state >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
    double uz = u * zetan_;
    if (uz < 1.0) return 0;
    if (uz < 1.0 + std::pow(0.5, spec_.theta)) return 1;
    uint64_t v = uint64_t(double(spec_.base_states) *
                          std::pow(eta_ * u - eta_ + 1.0, alpha_));
    return std::min(v, spec_.base_states - 1);
}

std::vector<Op> Workload::block_ops(uint64_t blk) const {
    std::mt19937_64 rng(spec_.seed * 0xbf58476d1ce4e5b9ULL + blk * 0x94d049bb133111ebULL);
    const double wf = write_fraction(spec_.mix);
    std::vector<Op> ops;
    std::unordered_set<uint64_t> written;
    uint64_t state = rng();
    for (uint32_t i = 0; i < spec_.txs_per_block; ++i) {
        bool is_write = (double(rng() >> 11) * (1.0 / 9007199254740992.0)) < wf;
        uint64_t a = draw_addr(state);
        if (is_write) {
            // one write per address per block
            for (int tries = 0; written.count(a) && tries < 1000; ++tries) a = draw_addr(state);
            if (written.count(a)) continue;
            written.insert(a);
            ops.push_back({true, address_from_u64(a), value_from_u64(rng())});
        } else {
            ops.push_back({false, address_from_u64(a), {}});
        }
    }
    return ops;
}

}  // namespace colstore
