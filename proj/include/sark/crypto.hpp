// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <array>
#include <compare>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <openssl/evp.h>
#include <sodium.h>

#include "sark/bytes.hpp"

namespace sark {

struct CryptoError : std::runtime_error {
    explicit CryptoError(const std::string& what) : std::runtime_error(what) {}
};

// 32-byte SHA-256 output. Equality is byte equality.
struct Digest {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
    Bytes to_bytes() const { return Bytes(bytes.begin(), bytes.end()); }
    std::string hex() const { return to_hex(view()); }

    static Digest from_bytes(ByteView b) {
        if (b.size() != 32) throw CodecError("digest must be 32 bytes");
        Digest d;
        std::memcpy(d.bytes.data(), b.data(), 32);
        return d;
    }
    static Digest from_hex(std::string_view s) { return from_bytes(sark::from_hex(s)); }
};

inline Digest sha256(ByteView data) {
    Digest out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.bytes.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32)
        throw CryptoError("SHA-256 failed");
    return out;
}

inline Digest sha256(const Bytes& data) { return sha256(ByteView(data)); }

// Context tags prepended to every signed payload before hashing, so a
// signature made in one protocol role can never be replayed in another.
enum class DomainTag : uint8_t {
    update_vector = 0x01,
    porter_root = 0x02,
    ledger_root = 0x03,
};

inline Digest signing_digest(DomainTag tag, ByteView payload) {
    Bytes buf;
    buf.reserve(payload.size() + 1);
    buf.push_back(static_cast<uint8_t>(tag));
    buf.insert(buf.end(), payload.begin(), payload.end());
    return sha256(buf);
}

inline Digest signing_digest(DomainTag tag, const Bytes& payload) {
    return signing_digest(tag, ByteView(payload));
}

using Signature = Bytes;

namespace detail {
inline void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw CryptoError("libsodium init failed");
    });
}
}  // namespace detail

inline constexpr size_t kSeedSize = 32;
inline constexpr size_t kPublicKeySize = crypto_sign_PUBLICKEYBYTES;   // 32
inline constexpr size_t kSecretKeySize = crypto_sign_SECRETKEYBYTES;   // 64
inline constexpr size_t kSignatureSize = crypto_sign_BYTES;            // 64

// Ed25519 one-time keys: deterministic from a 32-byte seed, public key
// recoverable from the secret key.
struct KeyPair {
    Bytes public_key;
    Bytes secret_key;
};

inline KeyPair keygen(ByteView seed) {
    detail::ensure_sodium();
    if (seed.size() != kSeedSize) throw CryptoError("seed must be 32 bytes");
    KeyPair kp;
    kp.public_key.resize(kPublicKeySize);
    kp.secret_key.resize(kSecretKeySize);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

inline KeyPair keygen(const Bytes& seed) { return keygen(ByteView(seed)); }

inline Bytes public_from_secret(ByteView secret) {
    detail::ensure_sodium();
    if (secret.size() != kSecretKeySize) throw CryptoError("malformed secret key");
    Bytes pk(kPublicKeySize);
    crypto_sign_ed25519_sk_to_pk(pk.data(), secret.data());
    return pk;
}

inline Signature sign(ByteView secret, const Digest& digest) {
    detail::ensure_sodium();
    if (secret.size() != kSecretKeySize) throw CryptoError("malformed secret key");
    Signature sig(kSignatureSize);
    unsigned long long siglen = 0;
    crypto_sign_detached(sig.data(), &siglen, digest.bytes.data(), digest.bytes.size(), secret.data());
    sig.resize(siglen);
    return sig;
}

// Malformed inputs verify false, never throw.
inline bool verify(ByteView public_key, const Digest& digest, ByteView sig) {
    detail::ensure_sodium();
    if (public_key.size() != kPublicKeySize || sig.size() != kSignatureSize) return false;
    return crypto_sign_verify_detached(sig.data(), digest.bytes.data(), digest.bytes.size(),
                                       public_key.data()) == 0;
}

inline bool verify(const Bytes& public_key, const Digest& digest, const Signature& sig) {
    return verify(ByteView(public_key), digest, ByteView(sig));
}

}  // namespace sark
