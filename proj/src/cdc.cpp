#include "colstore/cdc.hpp"

#include <bit>
#include <cmath>

namespace colstore::cdc {

namespace {

// splitmix64 step; table seed is the fixed constant 0x434F4C45.
uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::array<uint64_t, 256> make_table() {
    std::array<uint64_t, 256> t;
    uint64_t state = 0x434F4C45ULL;
    for (auto& v : t) v = splitmix64(state);
    return t;
}

}  // namespace

const std::array<uint64_t, 256>& gear_table() {
    static const auto table = make_table();
    return table;
}

CdcParams init_params(uint32_t f_exp, uint32_t f_max, uint32_t entry_size) {
    if (f_exp < 2 || f_max < f_exp)
        throw InvalidFanout("init_params: need 2 <= f_exp <= f_max");
    uint32_t b = uint32_t(std::lround(std::log2(double(f_exp))));
    CdcParams p;
    p.mask = (b >= 64) ? ~uint64_t(0) : ((uint64_t(1) << b) - 1);
    p.cnt = 0;
    p.f_max = f_max;
    p.entry_size = entry_size;
    return p;
}

CutResult cut_point(CdcParams& params, std::span<const uint8_t> entry) {
    if (entry.size() != params.entry_size)
        throw LengthMismatch("cut_point: entry length != entry_size");
    params.cnt += 1;
    if (params.cnt >= params.f_max) {
        params.cnt = 0;
        return CutResult::CUT;
    }
    const auto& table = gear_table();
    uint64_t fp = 0;
    for (uint8_t b : entry) fp = (fp << 1) + table[b];
    if ((fp & params.mask) == 0) {
        params.cnt = 0;
        return CutResult::CUT;
    }
    return CutResult::NOCUT;
}

}  // namespace colstore::cdc
