#include "colstore/bloom.hpp"

#include "colstore/hash.hpp"

namespace colstore {

namespace {

std::pair<uint64_t, uint64_t> probe_seeds(const Address& addr) {
    Hash32 h = sha256(addr);
    return {load_u64_be(h.data()), load_u64_be(h.data() + 8)};
}

}  // namespace

BloomFilter::BloomFilter(const std::vector<Address>& keys) {
    bit_count_ = keys.empty() ? 8 : uint64_t(keys.size()) * 10;
    bit_count_ = (bit_count_ + 7) / 8 * 8;
    bits_.assign(bit_count_ / 8, 0);
    for (const auto& a : keys) {
        auto [h1, h2] = probe_seeds(a);
        for (uint32_t i = 0; i < hash_count_; ++i) {
            uint64_t bit = (h1 + uint64_t(i) * h2) % bit_count_;
            bits_[bit / 8] |= uint8_t(1u << (bit % 8));
        }
    }
}

bool BloomFilter::may_contain(const Address& addr) const {
    if (bit_count_ == 0) return false;
    auto [h1, h2] = probe_seeds(addr);
    for (uint32_t i = 0; i < hash_count_; ++i) {
        uint64_t bit = (h1 + uint64_t(i) * h2) % bit_count_;
        if (!(bits_[bit / 8] & (1u << (bit % 8)))) return false;
    }
    return true;
}

std::vector<uint8_t> BloomFilter::serialize() const {
    std::vector<uint8_t> out;
    put_u64_be(out, bit_count_);
    put_u32_be(out, hash_count_);
    put_bytes(out, bits_);
    return out;
}

BloomFilter BloomFilter::deserialize(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    BloomFilter b;
    b.bit_count_ = r.u64();
    b.hash_count_ = r.u32();
    if (b.bit_count_ % 8 != 0 || b.hash_count_ == 0)
        throw MalformedBytes("bloom: bad header");
    b.bits_ = r.raw(size_t(b.bit_count_ / 8));
    if (!r.done()) throw MalformedBytes("bloom: trailing bytes");
    return b;
}

}  // namespace colstore
