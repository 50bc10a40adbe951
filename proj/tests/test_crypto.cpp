// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "sark/bytes.hpp"
#include "sark/crypto.hpp"
#include "test_support.hpp"

using namespace sark;

TEST_CASE("sha256 matches published test vectors", "[crypto]") {
    // FIPS 180-2 vectors
    CHECK(sha256(Bytes{}).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256(to_bytes("abc")).hex() ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256(to_bytes("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")).hex() ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha256 is deterministic and prefix-sensitive", "[crypto]") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        Bytes x = test::rand_bytes(rng, 32);
        CHECK(sha256(x) == sha256(x));
        Bytes extended = x;
        extended.push_back(0x00);
        CHECK(sha256(x) != sha256(extended));
    }
}

TEST_CASE("no hash collisions over a random corpus", "[crypto]") {
    std::mt19937_64 rng(11);
    std::set<Digest> seen;
    std::set<Bytes> inputs;
    size_t n = 0;
    for (int i = 0; i < 100000; ++i) {
        Bytes x = test::rand_bytes(rng, 1 + (rng() % 48));
        if (!inputs.insert(x).second) continue;
        ++n;
        CHECK(seen.insert(sha256(x)).second);
    }
    CHECK(seen.size() == n);
}

TEST_CASE("keygen is deterministic per seed, distinct across seeds", "[crypto]") {
    std::mt19937_64 rng(13);
    Bytes seed = test::rand_seed(rng);
    CHECK(keygen(seed).public_key == keygen(seed).public_key);

    std::set<Bytes> pubs;
    for (int i = 0; i < 1000; ++i) {
        Bytes s = test::rand_seed(rng);
        CHECK(pubs.insert(keygen(s).public_key).second);
    }
}

TEST_CASE("sign/verify round trip, wrong key and bit flips fail", "[crypto]") {
    std::mt19937_64 rng(17);
    auto kp = keygen(test::rand_seed(rng));
    auto other = keygen(test::rand_seed(rng));
    Digest d = sha256(to_bytes("payload"));
    Signature sig = sign(kp.secret_key, d);

    CHECK(verify(kp.public_key, d, sig));
    CHECK(public_from_secret(kp.secret_key) == kp.public_key);
    CHECK_FALSE(verify(other.public_key, d, sig));

    for (int i = 0; i < 100; ++i) {
        Signature mutated = sig;
        size_t bit = rng() % (mutated.size() * 8);
        mutated[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        CHECK_FALSE(verify(kp.public_key, d, mutated));
    }

    // malformed inputs are false, not exceptions
    CHECK_FALSE(verify(Bytes{1, 2, 3}, d, sig));
    CHECK_FALSE(verify(kp.public_key, d, Bytes{1, 2, 3}));
}

TEST_CASE("random keypairs never cross-verify", "[crypto]") {
    std::mt19937_64 rng(19);
    Digest d = sha256(to_bytes("cross"));
    for (int i = 0; i < 200; ++i) {
        auto a = keygen(test::rand_seed(rng));
        auto b = keygen(test::rand_seed(rng));
        CHECK_FALSE(verify(b.public_key, d, sign(a.secret_key, d)));
    }
}

TEST_CASE("domain tags separate signing contexts", "[crypto]") {
    Bytes payload = to_bytes("same payload");
    Digest a = signing_digest(DomainTag::update_vector, payload);
    Digest b = signing_digest(DomainTag::porter_root, payload);
    Digest c = signing_digest(DomainTag::ledger_root, payload);
    CHECK(a != b);
    CHECK(b != c);
    CHECK(a != c);

    std::mt19937_64 rng(23);
    auto kp = keygen(test::rand_seed(rng));
    Signature sig = sign(kp.secret_key, a);
    CHECK(verify(kp.public_key, a, sig));
    CHECK_FALSE(verify(kp.public_key, b, sig));
}
