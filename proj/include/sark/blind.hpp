// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <memory>
#include <random>

#include <openssl/bn.h>

#include "sark/crypto.hpp"

// Chaum-style RSA blind signatures over a full-domain hash, used only for
// asset minting. The issuer signs a blinded value and learns neither the
// message digest nor the final signature.
namespace sark::blind {

namespace detail {

struct BnDeleter {
    void operator()(BIGNUM* p) const { BN_free(p); }
};
struct CtxDeleter {
    void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
using Bn = std::unique_ptr<BIGNUM, BnDeleter>;
using Ctx = std::unique_ptr<BN_CTX, CtxDeleter>;

inline Bn make_bn() {
    Bn b(BN_new());
    if (!b) throw CryptoError("BN_new failed");
    return b;
}

inline Bn bn_from_bytes(ByteView b) {
    Bn out(BN_bin2bn(b.data(), static_cast<int>(b.size()), nullptr));
    if (!out) throw CryptoError("BN_bin2bn failed");
    return out;
}

inline Bytes bn_to_bytes(const BIGNUM* b, size_t width) {
    Bytes out(width);
    if (BN_bn2binpad(b, out.data(), static_cast<int>(width)) < 0)
        throw CryptoError("BN_bn2binpad failed");
    return out;
}

inline Ctx make_ctx() {
    Ctx c(BN_CTX_new());
    if (!c) throw CryptoError("BN_CTX_new failed");
    return c;
}

}  // namespace detail

inline constexpr unsigned kModulusBits = 2048;
inline constexpr size_t kModulusBytes = kModulusBits / 8;
inline constexpr uint64_t kPublicExponent = 65537;

struct IssuerPublicKey {
    Bytes n;  // big-endian modulus, kModulusBytes wide
    Bytes e;

    bool operator==(const IssuerPublicKey&) const = default;

    Bytes encode() const {
        ByteWriter w;
        w.field(n);
        w.field(e);
        return w.take();
    }
    static IssuerPublicKey decode(ByteView raw) {
        ByteReader r(raw);
        IssuerPublicKey pk;
        pk.n = r.field();
        pk.e = r.field();
        r.expect_done();
        return pk;
    }
};

struct IssuerKeyPair {
    IssuerPublicKey pub;
    Bytes d;  // private exponent, big-endian

    Bytes encode() const {
        ByteWriter w;
        w.field(pub.n);
        w.field(pub.e);
        w.field(d);
        return w.take();
    }
    static IssuerKeyPair decode(ByteView raw) {
        ByteReader r(raw);
        IssuerKeyPair kp;
        kp.pub.n = r.field();
        kp.pub.e = r.field();
        kp.d = r.field();
        r.expect_done();
        return kp;
    }
};

struct BlindingContext {
    Bytes blinded_message;    // what the issuer sees
    Bytes unblinding_factor;  // r, kept secret by the requester
};

// MGF1-SHA256 full-domain hash: expands the 32-byte digest to one byte less
// than the modulus so the integer is always below n.
inline Bytes full_domain_hash(const Digest& digest, size_t out_len) {
    Bytes out;
    out.reserve(out_len);
    uint32_t counter = 0;
    while (out.size() < out_len) {
        Bytes block = digest.to_bytes();
        put_u32_be(block, counter++);
        Digest h = sha256(block);
        size_t take = std::min<size_t>(32, out_len - out.size());
        out.insert(out.end(), h.bytes.begin(), h.bytes.begin() + take);
    }
    return out;
}

namespace detail {

// Deterministic prime search: candidates come from the caller's RNG, an
// incremental +2 walk from each candidate until BN_check_prime accepts, with
// gcd(e, p-1) == 1 required for RSA key validity.
inline Bn gen_prime(std::mt19937_64& rng, int bits, const BIGNUM* e, BN_CTX* ctx) {
    const size_t nbytes = static_cast<size_t>(bits) / 8;
    Bytes cand(nbytes);
    for (;;) {
        for (auto& b : cand) b = static_cast<uint8_t>(rng());
        cand[0] |= 0xc0;              // top two bits: product reaches full width
        cand[nbytes - 1] |= 0x01;     // odd
        Bn p = bn_from_bytes(cand);
        for (int step = 0; step < 4096; ++step) {
            int is_prime = BN_check_prime(p.get(), ctx, nullptr);
            if (is_prime < 0) throw CryptoError("BN_check_prime failed");
            if (is_prime == 1) {
                Bn pm1 = make_bn();
                Bn g = make_bn();
                if (!BN_copy(pm1.get(), p.get()) || !BN_sub_word(pm1.get(), 1) ||
                    !BN_gcd(g.get(), pm1.get(), e, ctx))
                    throw CryptoError("gcd failed");
                if (BN_is_one(g.get())) return p;
            }
            if (!BN_add_word(p.get(), 2)) throw CryptoError("BN_add_word failed");
        }
    }
}

}  // namespace detail

// Deterministic 2048-bit RSA keypair from a 32-byte seed. Used so test
// fixtures and simulator traces are reproducible; operational deployments
// would seed from real entropy.
inline IssuerKeyPair issuer_keygen(ByteView seed) {
    if (seed.size() != kSeedSize) throw CryptoError("seed must be 32 bytes");
    Digest folded = sha256(seed);
    uint64_t s = 0;
    for (size_t i = 0; i < 8; ++i) s = (s << 8) | folded.bytes[i];
    std::mt19937_64 rng(s);

    auto ctx = detail::make_ctx();
    detail::Bn e = detail::make_bn();
    if (!BN_set_word(e.get(), kPublicExponent)) throw CryptoError("BN_set_word failed");

    detail::Bn p = detail::gen_prime(rng, kModulusBits / 2, e.get(), ctx.get());
    detail::Bn q = detail::gen_prime(rng, kModulusBits / 2, e.get(), ctx.get());
    while (BN_cmp(p.get(), q.get()) == 0)
        q = detail::gen_prime(rng, kModulusBits / 2, e.get(), ctx.get());

    detail::Bn n = detail::make_bn();
    if (!BN_mul(n.get(), p.get(), q.get(), ctx.get())) throw CryptoError("BN_mul failed");

    // d = e^-1 mod lcm(p-1, q-1)
    detail::Bn pm1 = detail::make_bn(), qm1 = detail::make_bn();
    if (!BN_copy(pm1.get(), p.get()) || !BN_sub_word(pm1.get(), 1) ||
        !BN_copy(qm1.get(), q.get()) || !BN_sub_word(qm1.get(), 1))
        throw CryptoError("BN arithmetic failed");
    detail::Bn g = detail::make_bn(), lcm = detail::make_bn(), tmp = detail::make_bn();
    if (!BN_gcd(g.get(), pm1.get(), qm1.get(), ctx.get()) ||
        !BN_mul(tmp.get(), pm1.get(), qm1.get(), ctx.get()) ||
        !BN_div(lcm.get(), nullptr, tmp.get(), g.get(), ctx.get()))
        throw CryptoError("lcm failed");
    detail::Bn d(BN_mod_inverse(nullptr, e.get(), lcm.get(), ctx.get()));
    if (!d) throw CryptoError("no modular inverse for e");

    IssuerKeyPair kp;
    kp.pub.n = detail::bn_to_bytes(n.get(), kModulusBytes);
    kp.pub.e = detail::bn_to_bytes(e.get(), 4);
    kp.d = detail::bn_to_bytes(d.get(), kModulusBytes);
    return kp;
}

inline BlindingContext blind_message(const IssuerPublicKey& pub, const Digest& message_digest) {
    auto ctx = detail::make_ctx();
    auto n = detail::bn_from_bytes(pub.n);
    auto e = detail::bn_from_bytes(pub.e);
    auto m = detail::bn_from_bytes(full_domain_hash(message_digest, kModulusBytes - 1));

    detail::Bn r = detail::make_bn(), g = detail::make_bn();
    do {
        if (!BN_rand_range(r.get(), n.get())) throw CryptoError("BN_rand_range failed");
        if (!BN_gcd(g.get(), r.get(), n.get(), ctx.get())) throw CryptoError("BN_gcd failed");
    } while (BN_is_zero(r.get()) || BN_is_one(r.get()) || !BN_is_one(g.get()));

    // blinded = m * r^e mod n
    detail::Bn re = detail::make_bn(), blinded = detail::make_bn();
    if (!BN_mod_exp(re.get(), r.get(), e.get(), n.get(), ctx.get()) ||
        !BN_mod_mul(blinded.get(), m.get(), re.get(), n.get(), ctx.get()))
        throw CryptoError("blinding failed");

    BlindingContext out;
    out.blinded_message = detail::bn_to_bytes(blinded.get(), kModulusBytes);
    out.unblinding_factor = detail::bn_to_bytes(r.get(), kModulusBytes);
    return out;
}

// Issuer side: operates only on the blinded value.
inline Bytes blind_sign(const IssuerKeyPair& issuer, ByteView blinded_message) {
    if (blinded_message.size() != kModulusBytes) throw CryptoError("malformed blinded message");
    auto ctx = detail::make_ctx();
    auto n = detail::bn_from_bytes(issuer.pub.n);
    auto d = detail::bn_from_bytes(issuer.d);
    auto b = detail::bn_from_bytes(blinded_message);
    if (BN_is_zero(b.get()) || BN_cmp(b.get(), n.get()) >= 0)
        throw CryptoError("malformed blinded message");
    detail::Bn sig = detail::make_bn();
    if (!BN_mod_exp(sig.get(), b.get(), d.get(), n.get(), ctx.get()))
        throw CryptoError("blind signing failed");
    return detail::bn_to_bytes(sig.get(), kModulusBytes);
}

inline Signature unblind(const IssuerPublicKey& pub, const BlindingContext& bctx, ByteView blinded_sig) {
    if (blinded_sig.size() != kModulusBytes) throw CryptoError("malformed blinded signature");
    auto ctx = detail::make_ctx();
    auto n = detail::bn_from_bytes(pub.n);
    auto r = detail::bn_from_bytes(bctx.unblinding_factor);
    auto s = detail::bn_from_bytes(blinded_sig);
    detail::Bn rinv(BN_mod_inverse(nullptr, r.get(), n.get(), ctx.get()));
    if (!rinv) throw CryptoError("unblinding factor not invertible");
    detail::Bn sig = detail::make_bn();
    if (!BN_mod_mul(sig.get(), s.get(), rinv.get(), n.get(), ctx.get()))
        throw CryptoError("unblinding failed");
    return detail::bn_to_bytes(sig.get(), kModulusBytes);
}

inline bool verify(const IssuerPublicKey& pub, const Digest& message_digest, ByteView sig) {
    if (sig.size() != kModulusBytes || pub.n.size() != kModulusBytes) return false;
    try {
        auto ctx = detail::make_ctx();
        auto n = detail::bn_from_bytes(pub.n);
        auto e = detail::bn_from_bytes(pub.e);
        auto s = detail::bn_from_bytes(sig);
        if (BN_cmp(s.get(), n.get()) >= 0) return false;
        detail::Bn m = detail::make_bn();
        if (!BN_mod_exp(m.get(), s.get(), e.get(), n.get(), ctx.get())) return false;
        auto expected = detail::bn_from_bytes(full_domain_hash(message_digest, kModulusBytes - 1));
        return BN_cmp(m.get(), expected.get()) == 0;
    } catch (const CryptoError&) {
        return false;
    }
}

struct BlindSignTranscript {
    Bytes blinded_message;
    Bytes blinded_signature;
};

// In-process issuer for desk-scale minting. Records its view of every
// session so unlinkability can be checked at the transcript level.
class LocalIssuer {
  public:
    explicit LocalIssuer(IssuerKeyPair kp) : kp_(std::move(kp)) {}

    const IssuerPublicKey& public_key() const { return kp_.pub; }

    Bytes sign_blinded(ByteView blinded_message) {
        Bytes sig = blind_sign(kp_, blinded_message);
        transcript_.push_back({Bytes(blinded_message.begin(), blinded_message.end()), sig});
        return sig;
    }

    const std::vector<BlindSignTranscript>& transcript() const { return transcript_; }

  private:
    IssuerKeyPair kp_;
    std::vector<BlindSignTranscript> transcript_;
};

}  // namespace sark::blind
