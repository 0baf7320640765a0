#include "colstore/learned_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace colstore {

namespace {

// Big-endian 256-bit subtraction b - a (requires a <= b).
std::array<uint8_t, 32> sub256(const Address& b, const Address& a) {
    std::array<uint8_t, 32> out;
    int borrow = 0;
    for (int i = 31; i >= 0; --i) {
        int d = int(b[i]) - int(a[i]) - borrow;
        borrow = d < 0;
        out[i] = uint8_t(d + (borrow ? 256 : 0));
    }
    return out;
}

// Deterministic double conversion of a 256-bit big-endian integer. Both
// training and prediction use this same rounding, so the error bound holds
// in the rounded coordinate space.
double to_double(const std::array<uint8_t, 32>& v) {
    double x = 0.0;
    for (uint8_t b : v) x = x * 256.0 + double(b);
    return x;
}

double rel_x(const Address& addr, const Address& first) { return to_double(sub256(addr, first)); }

// round-half-up with clamping to [0, hi]
uint64_t round_clamp(double v, uint64_t hi) {
    if (!(v > 0.0)) return 0;
    double r = std::floor(v + 0.5);
    if (r >= double(hi)) return hi;
    return uint64_t(r);
}

// Greedy shrinking-cone segmentation over (key_i, i) with the line pinned
// to each segment's first point and a half-width of 0.5, so every key
// between two trained points also predicts within one slot.
std::vector<LinearModel> segment(const std::vector<Address>& keys) {
    constexpr double kDelta = 0.5;
    std::vector<LinearModel> models;
    size_t start = 0;
    while (start < keys.size()) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        size_t end = start + 1;
        while (end < keys.size()) {
            double x = rel_x(keys[end], keys[start]);
            double dy = double(end - start);
            if (x <= 0.0) break;  // indistinguishable key at double precision
            double nlo = std::max(lo, (dy - kDelta) / x);
            double nhi = std::min(hi, (dy + kDelta) / x);
            if (nlo > nhi) break;
            lo = nlo;
            hi = nhi;
            ++end;
        }
        LinearModel m;
        m.first_key = keys[start];
        m.intercept = double(start);
        if (end == start + 1)
            m.slope = 0.0;
        else if (std::isinf(lo))
            m.slope = hi;
        else if (std::isinf(hi))
            m.slope = lo;
        else
            m.slope = lo + (hi - lo) / 2.0;
        models.push_back(m);
        start = end;
    }
    return models;
}

}  // namespace

LearnedIndex LearnedIndex::train(const std::vector<Address>& page_first_keys) {
    if (page_first_keys.empty()) throw EmptyInput("train: no pages");
    for (size_t i = 1; i < page_first_keys.size(); ++i)
        if (!(page_first_keys[i - 1] < page_first_keys[i]))
            throw UnsortedInput("train: keys must be strictly increasing");
    LearnedIndex idx;
    idx.page_count_ = page_first_keys.size();
    idx.layers_.push_back(segment(page_first_keys));
    while (idx.layers_.back().size() > kModelsPerPage) {
        std::vector<Address> firsts;
        firsts.reserve(idx.layers_.back().size());
        for (const auto& m : idx.layers_.back()) firsts.push_back(m.first_key);
        idx.layers_.push_back(segment(firsts));
    }
    return idx;
}

uint64_t LearnedIndex::predict(const Address& addr) const {
    // Top layer: binary search for the covering model (it fits one page).
    const auto& top = layers_.back();
    size_t j;
    {
        size_t lo = 0, hi = top.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (!(addr < top[mid].first_key))
                lo = mid + 1;
            else
                hi = mid;
        }
        j = lo == 0 ? 0 : lo - 1;  // last model with first_key <= addr
    }
    // Descend: each layer's model predicts a position in the layer below
    // within +-1; resolve exactly with the first_keys in that window.
    for (size_t k = layers_.size(); k-- > 0;) {
        const auto& layer = layers_[k];
        const LinearModel& m = layer[j];
        uint64_t below_count = k == 0 ? page_count_ : uint64_t(layers_[k - 1].size());
        // Clamp to the model's own output range: trailing keys inside its
        // span past the last trained point would otherwise overshoot.
        uint64_t y_lo = uint64_t(m.intercept);
        uint64_t y_hi = j + 1 < layer.size() ? uint64_t(layer[j + 1].intercept) - 1 : below_count - 1;
        double v = m.slope * rel_x(addr < m.first_key ? m.first_key : addr, m.first_key) +
                   m.intercept;
        uint64_t p = std::min(std::max(round_clamp(v, below_count - 1), y_lo), y_hi);
        if (k == 0) return p;
        // Pick the covering model among positions p-1, p, p+1.
        const auto& below = layers_[k - 1];
        size_t cand = size_t(p);
        size_t lo = cand == 0 ? 0 : cand - 1;
        size_t hi = std::min(cand + 1, below.size() - 1);
        j = lo;
        for (size_t i = lo; i <= hi; ++i)
            if (!(addr < below[i].first_key)) j = i;
    }
    return 0;  // unreachable
}

std::vector<uint8_t> LearnedIndex::serialize() const {
    std::vector<uint8_t> out;
    put_u32_be(out, uint32_t(layers_.size()));
    for (const auto& layer : layers_) {
        put_u32_be(out, uint32_t(layer.size()));
        for (const auto& m : layer) {
            put_bytes(out, m.first_key);
            put_u64_be(out, std::bit_cast<uint64_t>(m.slope));
            put_u64_be(out, std::bit_cast<uint64_t>(m.intercept));
        }
    }
    return out;
}

LearnedIndex LearnedIndex::deserialize(std::span<const uint8_t> bytes, uint64_t page_count) {
    ByteReader r(bytes);
    LearnedIndex idx;
    idx.page_count_ = page_count;
    uint32_t layer_count = r.u32();
    if (layer_count == 0) throw MalformedBytes("learned index: no layers");
    for (uint32_t k = 0; k < layer_count; ++k) {
        uint32_t count = r.u32();
        if (count == 0) throw MalformedBytes("learned index: empty layer");
        std::vector<LinearModel> layer(count);
        for (auto& m : layer) {
            m.first_key = r.bytes<32>();
            m.slope = std::bit_cast<double>(r.u64());
            m.intercept = std::bit_cast<double>(r.u64());
        }
        idx.layers_.push_back(std::move(layer));
    }
    if (!r.done()) throw MalformedBytes("learned index: trailing bytes");
    if (idx.layers_.back().size() > kModelsPerPage)
        throw MalformedBytes("learned index: top layer too large");
    return idx;
}

}  // namespace colstore
