#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "colstore/errors.hpp"

namespace colstore::cdc {

enum class CutResult { NOCUT, CUT };

// Chunking parameters. cnt tracks the number of entries committed to the
// node under construction, including the entry being examined.
struct CdcParams {
    uint64_t mask = 0;
    uint32_t cnt = 0;
    uint32_t f_max = 0;
    uint32_t entry_size = 0;
};

/// 256 fixed 64-bit Gear constants; identical across builds.
const std::array<uint64_t, 256>& gear_table();

/// mask gets round(log2(f_exp)) low bits so the per-entry cut probability
/// is ~1/f_exp. Throws InvalidFanout if f_exp < 2 or f_max < f_exp.
CdcParams init_params(uint32_t f_exp, uint32_t f_max, uint32_t entry_size);

/// Decide whether `entry` ends the node under construction. The entry
/// always joins the current node; CUT means it is the node's last entry.
/// A node reaching f_max entries is cut regardless of content. The Gear
/// fingerprint is reset for every entry, so the decision depends only on
/// this entry's bytes and the count since the last cut.
CutResult cut_point(CdcParams& params, std::span<const uint8_t> entry);

}  // namespace colstore::cdc
