#pragma once

#include <span>
#include <vector>

#include "colstore/bytes.hpp"

namespace colstore {

/// SHA-256 of a byte span.
Hash32 sha256(std::span<const uint8_t> data);

/// Incremental SHA-256 over concatenated parts.
class Sha256Stream {
public:
    Sha256Stream();
    ~Sha256Stream();
    Sha256Stream(const Sha256Stream&) = delete;
    Sha256Stream& operator=(const Sha256Stream&) = delete;

    void update(std::span<const uint8_t> data);
    Hash32 finish();

private:
    void* ctx_;
};

/// H(empty string); root of an empty tree.
const Hash32& empty_hash();

}  // namespace colstore
