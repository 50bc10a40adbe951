// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <map>

#include "sark/trie.hpp"

namespace sark {

// What a porter anchors in the ledger for sealed window v is not the bare
// trie root but a chained record: each record commits to its predecessor's
// commitment, so one anchored record authenticates every earlier sealed root
// by walking the chain. Receipts for windows between ledger periods stay
// verifiable, and exclusion-proof roots inherit ledger authentication.
struct RootRecord {
    uint64_t version = 0;
    Digest trie_root;
    Digest prev_commitment;  // zero digest before version 0

    bool operator==(const RootRecord&) const = default;

    static constexpr uint8_t kCommitmentTag = 0x30;

    Bytes encode() const {
        Bytes out;
        out.reserve(72);
        put_u64_be(out, version);
        out.insert(out.end(), trie_root.bytes.begin(), trie_root.bytes.end());
        out.insert(out.end(), prev_commitment.bytes.begin(), prev_commitment.bytes.end());
        return out;
    }

    static RootRecord decode(ByteView raw) {
        if (raw.size() != 72) throw CodecError("root record must be 72 bytes");
        ByteReader r(raw);
        RootRecord rec;
        rec.version = r.raw_u64();
        rec.trie_root = Digest::from_bytes(r.raw(32));
        rec.prev_commitment = Digest::from_bytes(r.raw(32));
        return rec;
    }

    Digest commitment() const {
        Bytes pre;
        pre.push_back(kCommitmentTag);
        Bytes enc = encode();
        pre.insert(pre.end(), enc.begin(), enc.end());
        return sha256(pre);
    }
};

// Ledger inclusion proof for a porter's anchored record plus the record chain
// from the anchored version down to the oldest version the holder needs.
struct AnchorProof {
    uint64_t height = 0;          // ledger block height t of R_{L,t}
    InclusionProof ledger_proof;  // key hash(k_P) -> record bytes, under R_{L,t}
    std::vector<RootRecord> records;  // contiguous, descending from the anchored version

    Bytes encode() const {
        ByteWriter w;
        w.raw_u64(height);
        w.field(proofwire::encode(ledger_proof));
        w.raw_u16(static_cast<uint16_t>(records.size()));
        for (const auto& rec : records) w.raw(rec.encode());
        return w.take();
    }

    static AnchorProof decode(ByteView raw) {
        ByteReader r(raw);
        AnchorProof a;
        a.height = r.raw_u64();
        a.ledger_proof = proofwire::decode_inclusion(r.field());
        uint16_t n = r.raw_u16();
        a.records.reserve(n);
        for (uint16_t i = 0; i < n; ++i) a.records.push_back(RootRecord::decode(r.raw(72)));
        r.expect_done();
        return a;
    }
};

// Read interface to the verifier's knowledge of the system: committed ledger
// roots plus the permissioned porter roster (id -> signing key).
class LedgerView {
  public:
    virtual ~LedgerView() = default;
    virtual bool available() const { return true; }
    virtual std::string ledger_id() const = 0;
    virtual std::optional<Digest> root_at(uint64_t height) const = 0;
    virtual std::optional<Bytes> porter_key(const std::string& porter_id) const = 0;
};

struct AnchorCheck {
    bool ok = false;
    std::string error;
    std::map<uint64_t, Digest> authenticated_roots;  // version -> trie root, from the record chain
};

// Validates an anchor proof against a ledger root and unrolls the record
// chain into ledger-authenticated porter roots.
inline AnchorCheck check_anchor(const AnchorProof& anchor, ByteView porter_pubkey,
                                const LedgerView& view) {
    AnchorCheck out;
    auto ledger_root = view.root_at(anchor.height);
    if (!ledger_root) {
        out.error = "ledger root at height " + std::to_string(anchor.height) + " unknown";
        return out;
    }
    if (anchor.ledger_proof.root.digest != *ledger_root ||
        anchor.ledger_proof.root.version != anchor.height) {
        out.error = "anchor proof targets a different ledger root";
        return out;
    }
    if (anchor.ledger_proof.key != TrieKey::for_public_key(porter_pubkey)) {
        out.error = "anchor proof is not for this porter key";
        return out;
    }
    if (anchor.records.empty()) {
        out.error = "anchor proof carries no root records";
        return out;
    }
    if (!verify_inclusion(anchor.ledger_proof)) {
        out.error = "ledger inclusion proof failed";
        return out;
    }
    if (sha256(anchor.records.front().encode()) != anchor.ledger_proof.value_digest) {
        out.error = "anchored record does not match the ledger leaf";
        return out;
    }
    for (size_t i = 0; i + 1 < anchor.records.size(); ++i) {
        const RootRecord& newer = anchor.records[i];
        const RootRecord& older = anchor.records[i + 1];
        if (newer.version != older.version + 1 || newer.prev_commitment != older.commitment()) {
            out.error = "root record chain broken at version " + std::to_string(newer.version);
            return out;
        }
    }
    for (const auto& rec : anchor.records) out.authenticated_roots[rec.version] = rec.trie_root;
    out.ok = true;
    return out;
}

}  // namespace sark
