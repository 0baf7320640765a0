#include "colstore/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace colstore {

Hash32 sha256(std::span<const uint8_t> data) {
    Hash32 out;
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) ||
        len != out.size())
        throw std::runtime_error("sha256 failed");
    return out;
}

Sha256Stream::Sha256Stream() {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || !EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 init failed");
    ctx_ = ctx;
}

Sha256Stream::~Sha256Stream() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256Stream::update(std::span<const uint8_t> data) {
    if (!EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size()))
        throw std::runtime_error("sha256 update failed");
}

Hash32 Sha256Stream::finish() {
    Hash32 out;
    unsigned int len = 0;
    if (!EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len) || len != out.size())
        throw std::runtime_error("sha256 final failed");
    return out;
}

const Hash32& empty_hash() {
    static const Hash32 h = sha256({});
    return h;
}

}  // namespace colstore
