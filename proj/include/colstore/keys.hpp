#pragma once

#include <array>
#include <compare>
#include <cstdint>

#include "colstore/bytes.hpp"

namespace colstore {

// Ordering key for all state writes: big-endian lexicographic on
// (addr, blk). blk = 2^64-1 is reserved as the latest-version sentinel.
struct CompoundKey {
    Address addr{};
    uint64_t blk = 0;

    static constexpr uint64_t kMaxBlk = ~uint64_t(0);

    auto operator<=>(const CompoundKey&) const = default;

    std::array<uint8_t, 40> encode() const {
        std::array<uint8_t, 40> out;
        std::memcpy(out.data(), addr.data(), 32);
        store_u64_be(out.data() + 32, blk);
        return out;
    }
};

inline Address address_from_u64(uint64_t v) {
    Address a{};
    store_u64_be(a.data() + 24, v);
    return a;
}

inline Value32 value_from_u64(uint64_t v) {
    Value32 a{};
    store_u64_be(a.data() + 24, v);
    return a;
}

}  // namespace colstore
