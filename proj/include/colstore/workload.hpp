#pragma once

#include <cstdint>
#include <vector>

#include "colstore/keys.hpp"

namespace colstore {

// Operation mixes by write fraction: RO 0%, RW 50%, WH 90%, WO 100%.
enum class OpMix { RO, RW, WH, WO };
enum class Dist { Uniform, Zipfian };

struct WorkloadSpec {
    OpMix mix = OpMix::WO;
    Dist dist = Dist::Uniform;
    uint64_t base_states = 20000;  // addresses seeded before measurement
    uint64_t blocks = 20000;
    uint32_t txs_per_block = 100;
    double theta = 0.99;  // zipfian skew
    uint64_t seed = 1;
};

struct Op {
    bool is_write = false;
    Address addr{};
    Value32 value{};  // writes only
};

double write_fraction(OpMix mix);

// Deterministic operation stream: the ops of a block depend only on
// (spec.seed, blk), so any two runs with the same spec see identical blocks.
class Workload {
public:
    explicit Workload(const WorkloadSpec& spec);

    // Blocks seeding the base states: fresh addresses 0..base_states-1,
    // txs_per_block writes per block, starting at block 1.
    uint64_t seed_block_count() const;
    std::vector<Op> seed_block(uint64_t blk) const;

    // Measured blocks, numbered from seed_block_count()+1 upward. Write
    // addresses are unique within a block.
    std::vector<Op> block_ops(uint64_t blk) const;

private:
    uint64_t draw_addr(uint64_t& state) const;

    WorkloadSpec spec_;
    // zipfian constants (Gray et al. / YCSB generator)
    double zetan_ = 0, zeta2_ = 0, alpha_ = 0, eta_ = 0;
};

}  // namespace colstore
