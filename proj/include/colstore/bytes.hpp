#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "colstore/errors.hpp"

namespace colstore {

using Hash32 = std::array<uint8_t, 32>;
using Address = std::array<uint8_t, 32>;
using Value32 = std::array<uint8_t, 32>;

inline void put_u16_be(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

inline void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(uint8_t(v >> (8 * i)));
}

inline void put_u64_be(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(uint8_t(v >> (8 * i)));
}

inline void put_bytes(std::vector<uint8_t>& out, std::span<const uint8_t> b) {
    out.insert(out.end(), b.begin(), b.end());
}

inline void store_u64_be(uint8_t* p, uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = uint8_t(v >> (8 * (7 - i)));
}

inline uint64_t load_u64_be(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
}

// Sequential big-endian reader with bounds checking.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        auto p = take(2);
        return uint16_t(p[0]) << 8 | p[1];
    }
    uint32_t u32() {
        auto p = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | p[i];
        return v;
    }
    uint64_t u64() {
        auto p = take(8);
        return load_u64_be(p.data());
    }
    template <size_t N>
    std::array<uint8_t, N> bytes() {
        auto p = take(N);
        std::array<uint8_t, N> a;
        std::memcpy(a.data(), p.data(), N);
        return a;
    }
    std::vector<uint8_t> raw(size_t n) {
        auto p = take(n);
        return std::vector<uint8_t>(p.begin(), p.end());
    }
    size_t remaining() const { return data_.size() - pos_; }
    size_t pos() const { return pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    std::span<const uint8_t> take(size_t n) {
        if (pos_ + n > data_.size()) throw MalformedBytes("truncated input");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

inline std::string to_hex(std::span<const uint8_t> b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (uint8_t c : b) {
        s.push_back(digits[c >> 4]);
        s.push_back(digits[c & 0xf]);
    }
    return s;
}

inline std::vector<uint8_t> from_hex(const std::string& s) {
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("bad hex digit");
    };
    if (s.size() % 2) throw std::invalid_argument("odd hex length");
    std::vector<uint8_t> out(s.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = uint8_t(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
    return out;
}

}  // namespace colstore
