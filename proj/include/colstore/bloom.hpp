#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "colstore/bytes.hpp"
#include "colstore/errors.hpp"

namespace colstore {

// Per-run membership filter over state addresses: 10 bits per key, 7 probe
// positions derived by double hashing from the address's SHA-256.
class BloomFilter {
public:
    BloomFilter() = default;
    explicit BloomFilter(const std::vector<Address>& keys);

    bool may_contain(const Address& addr) const;

    std::vector<uint8_t> serialize() const;
    static BloomFilter deserialize(std::span<const uint8_t> bytes);

    uint64_t bit_count() const { return bit_count_; }

private:
    uint64_t bit_count_ = 0;
    uint32_t hash_count_ = 7;
    std::vector<uint8_t> bits_;
};

}  // namespace colstore
