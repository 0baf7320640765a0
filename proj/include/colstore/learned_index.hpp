#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "colstore/bytes.hpp"
#include "colstore/errors.hpp"

namespace colstore {

// One epsilon-bounded segment: for addr in its span, the target value is
// approximately slope * (addr - first_key) + intercept. The intercept is
// the exact target of first_key, so consecutive intercepts also delimit
// each model's output range.
struct LinearModel {
    Address first_key{};
    double slope = 0.0;
    double intercept = 0.0;
};

// Recursive piecewise-linear index from 32-byte address to state-file page
// id. The bottom layer is trained on the first address of each page; each
// upper layer indexes the first_keys of the layer below, until a layer fits
// in a single 4 KiB page. Every present address predicts within one page of
// its true location.
class LearnedIndex {
public:
    // page_first_keys[i] = first address stored in page i; strictly
    // increasing.
    static LearnedIndex train(const std::vector<Address>& page_first_keys);

    // Page id such that an entry for addr, if present, lies in the
    // returned page or one of its neighbours; absent addresses map to
    // their insertion-position page.
    uint64_t predict(const Address& addr) const;

    uint64_t page_count() const { return page_count_; }
    size_t layer_count() const { return layers_.size(); }
    const std::vector<LinearModel>& layer(size_t i) const { return layers_[i]; }

    std::vector<uint8_t> serialize() const;
    static LearnedIndex deserialize(std::span<const uint8_t> bytes, uint64_t page_count);

    // Models that fit one 4 KiB page; a layer at or under this is the top.
    static constexpr size_t kModelsPerPage = 4096 / 48;

private:
    std::vector<std::vector<LinearModel>> layers_;  // [0] = bottom (pages)
    uint64_t page_count_ = 0;
};

}  // namespace colstore
