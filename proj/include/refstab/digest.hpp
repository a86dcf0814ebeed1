#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace refstab {

/// 256-bit digest value. Every digest in the toolkit is SHA-256; the ledger
/// header names the algorithm so third-party verifiers can re-derive chains.
using Digest256 = std::array<unsigned char, 32>;

inline void ensure_crypto_init() {
    static const int rc = sodium_init();
    if (rc < 0) {
        throw std::runtime_error("libsodium initialization failed");
    }
}

inline Digest256 sha256(std::span<const unsigned char> bytes) {
    ensure_crypto_init();
    Digest256 out{};
    crypto_hash_sha256(out.data(), bytes.data(), bytes.size());
    return out;
}

inline Digest256 sha256(std::string_view text) {
    return sha256(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

/// Digest over the concatenation a || b, used for hash-chain links.
inline Digest256 sha256_pair(const Digest256& a, const Digest256& b) {
    std::array<unsigned char, 64> buf{};
    std::copy(a.begin(), a.end(), buf.begin());
    std::copy(b.begin(), b.end(), buf.begin() + 32);
    return sha256(std::span<const unsigned char>(buf.data(), buf.size()));
}

constexpr Digest256 zero_digest() {
    return Digest256{};
}

inline std::string to_hex(const Digest256& d) {
    static constexpr char alphabet[] = "0123456789abcdef";
    std::string out(64, '0');
    for (std::size_t i = 0; i < d.size(); ++i) {
        out[2 * i] = alphabet[d[i] >> 4];
        out[2 * i + 1] = alphabet[d[i] & 0x0f];
    }
    return out;
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline bool is_hex_digest(std::string_view s) {
    if (s.size() != 64) return false;
    for (char c : s) {
        if (hex_nibble(c) < 0) return false;
    }
    return true;
}

inline Digest256 digest_from_hex(std::string_view s) {
    if (!is_hex_digest(s)) {
        throw std::invalid_argument("expected 64 hex characters, got '" + std::string(s) + "'");
    }
    Digest256 out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<unsigned char>(hex_nibble(s[2 * i]) << 4 | hex_nibble(s[2 * i + 1]));
    }
    return out;
}

}  // namespace refstab
