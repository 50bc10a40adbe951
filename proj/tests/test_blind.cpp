// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "sark/blind.hpp"
#include "test_support.hpp"

using namespace sark;

namespace {
bool contains_subsequence(const Bytes& haystack, const Bytes& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}
}  // namespace

TEST_CASE("issuer keygen is deterministic per seed", "[blind]") {
    Bytes seed(kSeedSize, 0x42);
    auto again = blind::issuer_keygen(seed);
    CHECK(again.pub.n == test::test_issuer().pub.n);
    CHECK(again.d == test::test_issuer().d);

    Bytes other_seed(kSeedSize, 0x43);
    CHECK(blind::issuer_keygen(other_seed).pub.n != again.pub.n);
}

TEST_CASE("blind/sign/unblind round trip verifies", "[blind]") {
    const auto& issuer = test::test_issuer();
    Digest msg = sha256(to_bytes("asset genesis"));
    auto ctx = blind::blind_message(issuer.pub, msg);
    Bytes bsig = blind::blind_sign(issuer, ctx.blinded_message);
    Signature sig = blind::unblind(issuer.pub, ctx, bsig);

    CHECK(blind::verify(issuer.pub, msg, sig));
    CHECK_FALSE(blind::verify(issuer.pub, sha256(to_bytes("other")), sig));

    Bytes mutated = sig;
    mutated[10] ^= 0x01;
    CHECK_FALSE(blind::verify(issuer.pub, msg, mutated));
}

TEST_CASE("same message blinds to distinct values", "[blind]") {
    const auto& issuer = test::test_issuer();
    Digest msg = sha256(to_bytes("repeat"));
    std::set<Bytes> blinded;
    for (int i = 0; i < 100; ++i) CHECK(blinded.insert(blind::blind_message(issuer.pub, msg).blinded_message).second);
}

TEST_CASE("unblinding with a swapped factor fails verification", "[blind]") {
    const auto& issuer = test::test_issuer();
    Digest msg = sha256(to_bytes("swap"));
    auto ctx1 = blind::blind_message(issuer.pub, msg);
    auto ctx2 = blind::blind_message(issuer.pub, msg);
    Bytes bsig = blind::blind_sign(issuer, ctx1.blinded_message);
    Signature wrong = blind::unblind(issuer.pub, ctx2, bsig);
    CHECK_FALSE(blind::verify(issuer.pub, msg, wrong));
}

TEST_CASE("issuer transcript is disjoint from digest and final signature", "[blind]") {
    blind::LocalIssuer issuer(test::test_issuer());
    std::mt19937_64 rng(31);
    for (int i = 0; i < 100; ++i) {
        Digest msg = sha256(test::rand_bytes(rng, 48));
        auto ctx = blind::blind_message(issuer.public_key(), msg);
        Bytes bsig = issuer.sign_blinded(ctx.blinded_message);
        Signature sig = blind::unblind(issuer.public_key(), ctx, bsig);
        REQUIRE(blind::verify(issuer.public_key(), msg, sig));

        const auto& t = issuer.transcript().back();
        CHECK_FALSE(contains_subsequence(t.blinded_message, sig));
        CHECK_FALSE(contains_subsequence(t.blinded_signature, sig));
        CHECK_FALSE(contains_subsequence(t.blinded_message, msg.to_bytes()));
        CHECK_FALSE(contains_subsequence(t.blinded_signature, msg.to_bytes()));
        CHECK(t.blinded_message != sig);
        CHECK(t.blinded_signature != sig);
    }
}

TEST_CASE("malformed blinded messages are rejected", "[blind]") {
    const auto& issuer = test::test_issuer();
    CHECK_THROWS_AS(blind::blind_sign(issuer, Bytes(10, 1)), CryptoError);
    Bytes zero(blind::kModulusBytes, 0);
    CHECK_THROWS_AS(blind::blind_sign(issuer, zero), CryptoError);
    Bytes huge = issuer.pub.n;  // == modulus, out of range
    CHECK_THROWS_AS(blind::blind_sign(issuer, huge), CryptoError);
}
