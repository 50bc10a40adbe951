// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "sark/anchor.hpp"
#include "sark/blind.hpp"

namespace sark {

struct AssetError : std::runtime_error {
    explicit AssetError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr size_t kMaxMessageSize = 64 * 1024;

// Designation carried inside an update vector: where the *next* update of
// this asset must be registered (porter), against which of that porter's
// sealed roots the next owner's key starts its exclusion window (root_index),
// and which ledger anchors that porter.
struct AnchorRef {
    std::string ledger_id;
    std::string porter_id;
    uint64_t root_index = 0;

    bool operator==(const AnchorRef&) const = default;
};

// The update vector F: an opaque message, the anchor reference, and the
// one-time public key that controls the following update.
struct UpdateVector {
    Bytes message;
    AnchorRef anchor;
    Bytes next_owner_key;

    bool operator==(const UpdateVector&) const = default;

    // Canonical form, field order (message, ledger_id, porter_id, root_index,
    // next_owner_key). hash(encode()) under the update-vector domain tag is
    // what the owner signs.
    Bytes encode() const {
        ByteWriter w;
        w.field(message);
        w.field_str(anchor.ledger_id);
        w.field_str(anchor.porter_id);
        w.field_u64(anchor.root_index);
        w.field(next_owner_key);
        return w.take();
    }

    static UpdateVector decode(ByteReader& r) {
        UpdateVector v;
        v.message = r.field();
        v.anchor.ledger_id = r.field_str();
        v.anchor.porter_id = r.field_str();
        v.anchor.root_index = r.field_u64();
        v.next_owner_key = r.field();
        return v;
    }
    static UpdateVector decode(ByteView raw) {
        ByteReader r(raw);
        UpdateVector v = decode(r);
        r.expect_done();
        return v;
    }

    Digest signed_digest() const { return signing_digest(DomainTag::update_vector, encode()); }
};

struct Update {
    UpdateVector vector;
    Signature signature;

    bool operator==(const Update&) const = default;

    Bytes encode() const {
        Bytes out = vector.encode();
        ByteWriter w;
        w.field(signature);
        Bytes sig = w.take();
        out.insert(out.end(), sig.begin(), sig.end());
        return out;
    }

    static Update decode(ByteReader& r) {
        Update u;
        u.vector = UpdateVector::decode(r);
        u.signature = r.field();
        return u;
    }
};

// One POP entry per registered update: the inclusion proof for the window the
// update sealed into, exclusion proofs for every sealed window between the
// designation point and that window, and the ledger anchor tying it all down.
struct PopEntry {
    InclusionProof inclusion;
    std::vector<ExclusionProof> exclusions;
    std::optional<AnchorProof> anchor;

    Bytes encode() const {
        ByteWriter w;
        w.field(proofwire::encode(inclusion));
        w.raw_u16(static_cast<uint16_t>(exclusions.size()));
        for (const auto& e : exclusions) w.field(proofwire::encode(e));
        w.raw_u8(anchor ? 1 : 0);
        if (anchor) w.field(anchor->encode());
        return w.take();
    }

    static PopEntry decode(ByteReader& r) {
        PopEntry e;
        e.inclusion = proofwire::decode_inclusion(r.field());
        uint16_t n = r.raw_u16();
        e.exclusions.reserve(n);
        for (uint16_t i = 0; i < n; ++i) e.exclusions.push_back(proofwire::decode_exclusion(r.field()));
        uint8_t has_anchor = r.raw_u8();
        if (has_anchor > 1) throw CodecError("non-canonical anchor flag");
        if (has_anchor) e.anchor = AnchorProof::decode(r.field());
        return e;
    }
};

struct ProofOfProvenance {
    std::vector<PopEntry> entries;
};

// A USO asset is its own history: the genesis update signed by the issuer,
// every transfer update, and the proof of provenance. The byte encoding of
// the chain is append-only by construction.
struct Asset {
    std::vector<Update> updates;  // [0] is genesis
    ProofOfProvenance pop;

    const Update& genesis() const { return updates.front(); }
    const Update& head() const { return updates.back(); }
    size_t transfer_count() const { return updates.size() - 1; }

    // Current owner control: the key that must sign the next update.
    const Bytes& current_owner_key() const { return head().vector.next_owner_key; }

    Bytes encode_chain() const {
        Bytes out;
        for (const auto& u : updates) {
            Bytes e = u.encode();
            out.insert(out.end(), e.begin(), e.end());
        }
        return out;
    }

    static constexpr char kMagic[4] = {'U', 'S', 'O', '1'};

    Bytes encode_file() const {
        ByteWriter w;
        w.raw(ByteView(reinterpret_cast<const uint8_t*>(kMagic), 4));
        w.raw_u32(static_cast<uint32_t>(updates.size()));
        w.raw(encode_chain());
        w.raw_u32(static_cast<uint32_t>(pop.entries.size()));
        for (const auto& e : pop.entries) w.field(e.encode());
        return w.take();
    }

    static Asset decode_file(ByteView raw) {
        ByteReader r(raw);
        Bytes magic = r.raw(4);
        if (to_string(magic) != "USO1") throw CodecError("not a USO asset file");
        uint32_t nupdates = r.raw_u32();
        if (nupdates == 0) throw CodecError("asset has no genesis update");
        Asset a;
        a.updates.reserve(nupdates);
        for (uint32_t i = 0; i < nupdates; ++i) a.updates.push_back(Update::decode(r));
        uint32_t nentries = r.raw_u32();
        a.pop.entries.reserve(nentries);
        for (uint32_t i = 0; i < nentries; ++i) {
            Bytes raw_entry = r.field();
            ByteReader er(raw_entry);
            a.pop.entries.push_back(PopEntry::decode(er));
            er.expect_done();
        }
        r.expect_done();
        return a;
    }

    std::string fingerprint() const { return sha256(encode_file()).hex(); }
};

inline UpdateVector make_genesis_vector(Bytes message, AnchorRef anchor, Bytes first_owner_key) {
    if (message.size() > kMaxMessageSize) throw AssetError("message exceeds 64 KiB");
    if (anchor.ledger_id.empty() || anchor.porter_id.empty()) throw AssetError("anchor ids must be non-empty");
    if (first_owner_key.size() != kPublicKeySize) throw AssetError("malformed owner key");
    return UpdateVector{std::move(message), std::move(anchor), std::move(first_owner_key)};
}

// Blind-signing mint: the issuer sees only the blinded digest, the asset
// carries the unblinded signature that verifies under the issuer key.
inline Asset mint(const UpdateVector& vector, blind::LocalIssuer& issuer) {
    Digest d = vector.signed_digest();
    auto ctx = blind::blind_message(issuer.public_key(), d);
    Bytes blinded_sig = issuer.sign_blinded(ctx.blinded_message);
    Signature sig = blind::unblind(issuer.public_key(), ctx, blinded_sig);
    if (!blind::verify(issuer.public_key(), d, sig)) throw AssetError("mint failed: issuer signature invalid");
    Asset a;
    a.updates.push_back(Update{vector, std::move(sig)});
    return a;
}

// Builds the transfer update U_j. The designated new owner key comes from the
// recipient; the anchor names the venue and baseline for the *next* update.
// Nothing is appended here: control transfers now, possession after the
// porter acknowledges (the receipt is appended via append_update).
inline Update make_transfer(const Asset& asset, ByteView current_secret, Bytes new_owner_key,
                            Bytes message, AnchorRef anchor) {
    if (message.size() > kMaxMessageSize) throw AssetError("message exceeds 64 KiB");
    if (anchor.ledger_id.empty() || anchor.porter_id.empty()) throw AssetError("anchor ids must be non-empty");
    if (new_owner_key.size() != kPublicKeySize) throw AssetError("malformed owner key");
    Bytes expected = asset.current_owner_key();
    if (current_secret.size() != kSecretKeySize || public_from_secret(current_secret) != expected)
        throw AssetError("not current owner");
    UpdateVector v{std::move(message), std::move(anchor), std::move(new_owner_key)};
    Signature sig = sign(current_secret, v.signed_digest());
    return Update{std::move(v), std::move(sig)};
}

// Appends one acknowledged update and its POP entry; the prior chain bytes
// are untouched. Rejects anything that does not verify against the head.
inline Asset append_update(const Asset& asset, const Update& update, const PopEntry& pop_entry) {
    const Bytes& owner_key = asset.current_owner_key();
    Digest d = update.vector.signed_digest();
    if (!verify(owner_key, d, update.signature)) throw AssetError("update does not verify against chain head");
    if (pop_entry.inclusion.key != TrieKey::for_public_key(owner_key))
        throw AssetError("inclusion proof is for a different key");
    if (pop_entry.inclusion.value_digest != sha256(d.to_bytes()))
        throw AssetError("inclusion proof commits a different update");
    if (!verify_inclusion(pop_entry.inclusion)) throw AssetError("inclusion proof does not verify");
    for (const auto& e : pop_entry.exclusions)
        if (!verify_exclusion(e) || e.key != pop_entry.inclusion.key)
            throw AssetError("exclusion proof does not verify");
    Asset out = asset;
    out.updates.push_back(update);
    out.pop.entries.push_back(pop_entry);
    return out;
}

struct UpdateCheck {
    size_t index = 0;  // update sequence number, 1-based (0 is genesis)
    bool signature_ok = false;
    bool inclusion_ok = false;
    bool gap_ok = false;
    bool anchored = false;   // anchor proof present and checkable
    bool anchor_ok = false;
    std::string note;
};

struct VerificationReport {
    bool structure_ok = false;   // counts and encodings are coherent
    bool genesis_ok = false;     // issuer signature over F_0
    bool unanchored = false;     // ledger was unreachable for some anchor
    std::vector<UpdateCheck> checks;

    bool valid() const {
        if (!structure_ok || !genesis_ok) return false;
        for (const auto& c : checks)
            if (!(c.signature_ok && c.inclusion_ok && c.gap_ok && c.anchored && c.anchor_ok)) return false;
        return true;
    }
};

// Full-chain verification: ownership signatures, per-update inclusion against
// the designated porter's root, exclusion gap coverage from the designation
// baseline, and ledger anchoring of every root via the record chain.
inline VerificationReport verify_asset(const Asset& asset, const LedgerView& view,
                                       const blind::IssuerPublicKey& issuer_key) {
    VerificationReport report;
    if (asset.updates.empty()) return report;
    report.structure_ok = asset.pop.entries.size() == asset.transfer_count();
    report.genesis_ok =
        blind::verify(issuer_key, asset.genesis().vector.signed_digest(), asset.genesis().signature);

    for (size_t j = 1; j < asset.updates.size(); ++j) {
        UpdateCheck check;
        check.index = j;
        const Update& update = asset.updates[j];
        const UpdateVector& designation = asset.updates[j - 1].vector;
        const Bytes& owner_key = designation.next_owner_key;
        const TrieKey trie_key = TrieKey::for_public_key(owner_key);
        const Digest d = update.vector.signed_digest();

        check.signature_ok = verify(owner_key, d, update.signature);
        if (designation.anchor.ledger_id != view.ledger_id())
            check.note = "designated ledger '" + designation.anchor.ledger_id + "' is not this view";

        if (j - 1 >= asset.pop.entries.size()) {
            check.note = "missing POP entry";
            report.checks.push_back(check);
            continue;
        }
        const PopEntry& entry = asset.pop.entries[j - 1];
        const uint64_t baseline = designation.anchor.root_index;
        const uint64_t sealed_at = entry.inclusion.root.version;

        check.inclusion_ok = entry.inclusion.key == trie_key &&
                             entry.inclusion.value_digest == sha256(d.to_bytes()) &&
                             sealed_at >= baseline && verify_inclusion(entry.inclusion);

        // exclusions must cover [baseline, sealed_at) exactly, in order
        check.gap_ok = entry.exclusions.size() == sealed_at - baseline;
        if (check.gap_ok) {
            for (size_t m = 0; m < entry.exclusions.size(); ++m) {
                const ExclusionProof& e = entry.exclusions[m];
                if (e.key != trie_key || e.root.version != baseline + m || !verify_exclusion(e)) {
                    check.gap_ok = false;
                    check.note = "exclusion gap broken at root " + std::to_string(baseline + m);
                    break;
                }
            }
        } else {
            check.note = "exclusion proofs do not cover [" + std::to_string(baseline) + ", " +
                         std::to_string(sealed_at) + ")";
        }

        if (entry.anchor) {
            if (!view.available()) {
                report.unanchored = true;
                check.note = "ledger unreachable";
            } else {
                auto porter_pk = view.porter_key(designation.anchor.porter_id);
                if (!porter_pk) {
                    check.note = "unknown porter '" + designation.anchor.porter_id + "'";
                } else {
                    check.anchored = true;
                    AnchorCheck ac = check_anchor(*entry.anchor, *porter_pk, view);
                    if (!ac.ok) {
                        check.note = ac.error;
                    } else {
                        // every proof root in this entry must be the
                        // ledger-authenticated root for its version
                        bool roots_ok = true;
                        auto expect = [&](uint64_t version, const Digest& digest) {
                            auto it = ac.authenticated_roots.find(version);
                            if (it == ac.authenticated_roots.end() || it->second != digest) {
                                roots_ok = false;
                                check.note = "root at version " + std::to_string(version) +
                                             " is not ledger-anchored";
                            }
                        };
                        expect(sealed_at, entry.inclusion.root.digest);
                        for (const auto& e : entry.exclusions) expect(e.root.version, e.root.digest);
                        check.anchor_ok = roots_ok;
                    }
                }
            }
        } else {
            check.note = check.note.empty() ? "no anchor proof" : check.note;
        }
        report.checks.push_back(check);
    }
    return report;
}

}  // namespace sark
