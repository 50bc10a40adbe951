// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#include <catch2/catch_amalgamated.hpp>

#include <deque>

#include "asset_harness.hpp"
#include "sark/asset.hpp"

using namespace sark;

namespace {

struct Flow {
    std::mt19937_64 rng{101};
    blind::LocalIssuer issuer{test::test_issuer()};
    test::HarnessLedger ledger;
    test::HarnessPorter porter_a{"PA", rng};
    test::HarnessPorter porter_b{"PB", rng};
    std::deque<KeyPair> owners;

    Flow() {
        ledger.register_porter("PA", porter_a.kp.public_key);
        ledger.register_porter("PB", porter_b.kp.public_key);
    }

    KeyPair& new_owner() {
        owners.push_back(keygen(test::rand_seed(rng)));
        return owners.back();
    }

    test::HarnessPorter& porter(const std::string& id) { return id == "PA" ? porter_a : porter_b; }

    Asset minted(const std::string& first_porter) {
        KeyPair& k1 = new_owner();
        auto vec = make_genesis_vector(to_bytes("genesis"), AnchorRef{"L1", first_porter, 0},
                                       k1.public_key);
        return mint(vec, issuer);
    }

    // One settled transfer: the current owner (owners[j-1] for transfer j)
    // hands control to a fresh key, the venue porter registers and anchors.
    Asset transfer(const Asset& asset, const std::string& next_porter, const std::string& note) {
        const AnchorRef designation = asset.head().vector.anchor;
        test::HarnessPorter& venue = porter(designation.porter_id);
        KeyPair& current = owners.back();
        KeyPair& next = new_owner();
        AnchorRef next_anchor{"L1", next_porter, porter(next_porter).next_version()};
        Update u = make_transfer(asset, current.secret_key, next.public_key, to_bytes(note),
                                 next_anchor);
        PopEntry entry = test::settle_transfer(venue, ledger, u, current.public_key,
                                               designation.root_index);
        return append_update(asset, u, entry);
    }
};

}  // namespace

TEST_CASE("genesis vector encoding round trips and is hash-sensitive", "[asset]") {
    std::mt19937_64 rng(1);
    auto kp = keygen(test::rand_seed(rng));
    auto v = make_genesis_vector({}, AnchorRef{"L1", "PA", 3}, kp.public_key);
    CHECK(UpdateVector::decode(v.encode()) == v);

    auto v2 = make_genesis_vector({}, AnchorRef{"L1", "PA", 4}, kp.public_key);
    CHECK(v.signed_digest() != v2.signed_digest());

    CHECK_THROWS_AS(make_genesis_vector(Bytes(kMaxMessageSize + 1, 0), AnchorRef{"L1", "PA", 0},
                                        kp.public_key),
                    AssetError);
    CHECK_THROWS_AS(make_genesis_vector({}, AnchorRef{"", "PA", 0}, kp.public_key), AssetError);
}

TEST_CASE("fresh mint verifies with an empty POP", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    CHECK(a.pop.entries.empty());
    CHECK(a.transfer_count() == 0);
    auto report = verify_asset(a, f.ledger, f.issuer.public_key());
    CHECK(report.genesis_ok);
    CHECK(report.valid());
}

TEST_CASE("tampered genesis message fails verification", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    a.updates[0].vector.message = to_bytes("tampered");
    CHECK_FALSE(verify_asset(a, f.ledger, f.issuer.public_key()).genesis_ok);
}

TEST_CASE("three transfers across two porters verify end to end", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    a = f.transfer(a, "PB", "to bob");
    a = f.transfer(a, "PB", "to carol");
    a = f.transfer(a, "PA", "to dave");

    auto report = verify_asset(a, f.ledger, f.issuer.public_key());
    REQUIRE(report.checks.size() == 3);
    for (const auto& c : report.checks) {
        INFO("update " << c.index << ": " << c.note);
        CHECK(c.signature_ok);
        CHECK(c.inclusion_ok);
        CHECK(c.gap_ok);
        CHECK(c.anchored);
        CHECK(c.anchor_ok);
    }
    CHECK(report.valid());

    // ownership chain property: each update verifies under its predecessor's
    // designated key
    for (size_t j = 1; j < a.updates.size(); ++j)
        CHECK(verify(a.updates[j - 1].vector.next_owner_key, a.updates[j].vector.signed_digest(),
                     a.updates[j].signature));
}

TEST_CASE("asset encoding is append-only", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    Bytes prev = a.encode_chain();
    a = f.transfer(a, "PA", "hop1");
    Bytes cur = a.encode_chain();
    REQUIRE(prev.size() < cur.size());
    CHECK(std::equal(prev.begin(), prev.end(), cur.begin()));
    Bytes expected_tail = a.head().encode();
    CHECK(Bytes(cur.begin() + static_cast<long>(prev.size()), cur.end()) == expected_tail);
}

TEST_CASE("transfer with a non-owner secret is refused", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    auto stranger = keygen(test::rand_seed(f.rng));
    auto next = keygen(test::rand_seed(f.rng));
    CHECK_THROWS_WITH(make_transfer(a, stranger.secret_key, next.public_key, {},
                                    AnchorRef{"L1", "PA", 0}),
                      "not current owner");
}

TEST_CASE("self-transfer to a fresh key is valid", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    a = f.transfer(a, "PA", "note to self");
    CHECK(verify_asset(a, f.ledger, f.issuer.public_key()).valid());
}

TEST_CASE("update signed with a stale key is rejected", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    a = f.transfer(a, "PA", "hop1");

    // owners[0] designated owners[1]; a stale-key transfer reuses owners[0]
    KeyPair& stale = f.owners[0];
    auto next = keygen(test::rand_seed(f.rng));
    UpdateVector v{to_bytes("stale"), AnchorRef{"L1", "PA", 0}, next.public_key};
    Update forged{v, sign(stale.secret_key, v.signed_digest())};
    CHECK_THROWS_AS(append_update(a, forged, a.pop.entries.back()), AssetError);

    Asset tampered = a;
    tampered.updates.push_back(forged);
    tampered.pop.entries.push_back(a.pop.entries.back());
    CHECK_FALSE(verify_asset(tampered, f.ledger, f.issuer.public_key()).valid());
}

TEST_CASE("append of the same update twice is rejected", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    const AnchorRef designation = a.head().vector.anchor;
    KeyPair& current = f.owners.back();
    KeyPair& next = f.new_owner();
    Update u = make_transfer(a, current.secret_key, next.public_key, {}, AnchorRef{"L1", "PA", 1});
    PopEntry entry =
        test::settle_transfer(f.porter_a, f.ledger, u, current.public_key, designation.root_index);
    Asset a1 = append_update(a, u, entry);
    CHECK_THROWS_AS(append_update(a1, u, entry), AssetError);
}

TEST_CASE("append rejects a proof for a different key", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    KeyPair& current = f.owners.back();
    KeyPair& next = f.new_owner();
    Update u = make_transfer(a, current.secret_key, next.public_key, {}, AnchorRef{"L1", "PA", 1});

    // porter registers a different key, proof comes back for that key
    auto other = keygen(test::rand_seed(f.rng));
    PopEntry entry = test::settle_transfer(f.porter_a, f.ledger, u, other.public_key, 0);
    CHECK_THROWS_AS(append_update(a, u, entry), AssetError);
}

TEST_CASE("gap coverage failures are reported", "[asset]") {
    Flow f;
    // idle windows before the transfer so the gap is non-empty
    f.porter_a.seal_window();
    f.porter_a.seal_window();
    Asset a = f.minted("PA");
    a = f.transfer(a, "PA", "hop");
    REQUIRE(a.pop.entries[0].exclusions.size() == 2);
    REQUIRE(verify_asset(a, f.ledger, f.issuer.public_key()).valid());

    SECTION("dropping one exclusion breaks coverage") {
        a.pop.entries[0].exclusions.pop_back();
        auto report = verify_asset(a, f.ledger, f.issuer.public_key());
        CHECK_FALSE(report.checks[0].gap_ok);
        CHECK_FALSE(report.valid());
    }
    SECTION("an exclusion retargeted at the wrong window breaks coverage") {
        a.pop.entries[0].exclusions[1] = a.pop.entries[0].exclusions[0];
        auto report = verify_asset(a, f.ledger, f.issuer.public_key());
        CHECK_FALSE(report.checks[0].gap_ok);
        CHECK(report.checks[0].note.find("exclusion gap broken") != std::string::npos);
        CHECK_FALSE(report.valid());
    }
}

TEST_CASE("forged anchor roots are rejected", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    a = f.transfer(a, "PA", "hop");
    REQUIRE(verify_asset(a, f.ledger, f.issuer.public_key()).valid());

    auto& anchor = *a.pop.entries[0].anchor;
    SECTION("record chain tampered") {
        anchor.records[0].trie_root.bytes[0] ^= 0x01;
        auto report = verify_asset(a, f.ledger, f.issuer.public_key());
        CHECK_FALSE(report.checks[0].anchor_ok);
    }
    SECTION("anchor height retargeted") {
        anchor.height += 1;
        auto report = verify_asset(a, f.ledger, f.issuer.public_key());
        CHECK_FALSE(report.checks[0].anchor_ok);
    }
}

TEST_CASE("unreachable ledger yields an unanchored partial verdict", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    a = f.transfer(a, "PA", "hop");
    f.ledger.set_reachable(false);
    auto report = verify_asset(a, f.ledger, f.issuer.public_key());
    CHECK(report.unanchored);
    CHECK_FALSE(report.valid());
    CHECK(report.checks[0].signature_ok);   // local checks still run
    CHECK(report.checks[0].inclusion_ok);
}

TEST_CASE("asset file encoding round trips, truncation is an error", "[asset]") {
    Flow f;
    Asset a = f.minted("PA");
    a = f.transfer(a, "PB", "hop1");
    a = f.transfer(a, "PA", "hop2");

    Bytes file = a.encode_file();
    Asset decoded = Asset::decode_file(file);
    CHECK(decoded.updates == a.updates);
    CHECK(decoded.pop.entries.size() == a.pop.entries.size());
    CHECK(decoded.encode_file() == file);
    CHECK(decoded.fingerprint() == a.fingerprint());

    Bytes truncated(file.begin(), file.end() - 7);
    CHECK_THROWS_AS(Asset::decode_file(truncated), CodecError);
    Bytes garbage = file;
    garbage[0] = 'X';
    CHECK_THROWS_AS(Asset::decode_file(garbage), CodecError);
}

TEST_CASE("pop soundness against a window-replay oracle", "[asset][oracle]") {
    Flow f;
    std::mt19937_64& rng = f.rng;

    // replay log: everything ever submitted to porter A, per window
    std::vector<std::map<TrieKey, Bytes>> log;
    Asset a = f.minted("PA");
    for (int hop = 0; hop < 3; ++hop) {
        // background traffic in the same windows
        std::map<TrieKey, Bytes> window;
        for (int i = 0; i < 5; ++i) {
            auto k = test::rand_key(rng);
            auto v = test::rand_bytes(rng, 32);
            f.porter_a.pending[k] = v;
            window[k] = v;
        }
        const AnchorRef designation = a.head().vector.anchor;
        KeyPair& current = f.owners.back();
        KeyPair& next = f.new_owner();
        Update u = make_transfer(a, current.secret_key, next.public_key, {},
                                 AnchorRef{"L1", "PA", f.porter_a.next_version()});
        window[TrieKey::for_public_key(current.public_key)] = u.vector.signed_digest().to_bytes();
        PopEntry entry = test::settle_transfer(f.porter_a, f.ledger, u, current.public_key,
                                               designation.root_index);
        log.push_back(window);
        a = append_update(a, u, entry);
    }
    REQUIRE(verify_asset(a, f.ledger, f.issuer.public_key()).valid());

    // every accepted inclusion/exclusion agrees with the replayed windows
    for (const auto& entry : a.pop.entries) {
        const auto& window = log.at(entry.inclusion.root.version);
        CHECK(window.count(entry.inclusion.key) == 1);
        CHECK(sha256(window.at(entry.inclusion.key)) == entry.inclusion.value_digest);
        for (const auto& e : entry.exclusions) CHECK(log.at(e.root.version).count(e.key) == 0);
    }
}
