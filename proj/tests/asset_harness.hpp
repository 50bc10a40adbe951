// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "sark/asset.hpp"
#include "sark/store.hpp"
#include "test_support.hpp"

// Hand-driven porter and ledger stand-ins for asset-level tests: windows and
// periods advance only when the test says so, with no timers or messaging.
namespace sark::test {

struct HarnessPorter {
    std::string id;
    KeyPair kp;
    MemoryBackend be;
    AuthenticatedStore store;
    std::map<TrieKey, Bytes> pending;
    std::vector<RootRecord> records;

    HarnessPorter(std::string porter_id, std::mt19937_64& rng, StructureKind kind = StructureKind::jmt)
        : id(std::move(porter_id)), kp(keygen(rand_seed(rng))), store(kind, be) {}

    uint64_t next_version() const { return records.size(); }
    uint64_t latest_sealed() const { return records.empty() ? 0 : records.size() - 1; }

    void submit(const Bytes& owner_key, const Digest& update_digest) {
        TrieKey key = TrieKey::for_public_key(owner_key);
        if (pending.count(key)) throw StoreError("duplicate submission");
        pending[key] = update_digest.to_bytes();
    }

    RootRecord seal_window() {
        uint64_t version = next_version();
        auto w = store.open_window(version);
        for (const auto& [k, v] : pending) w.insert(k, v);
        TrieRoot root = w.seal();
        pending.clear();
        RootRecord rec{version, root.digest,
                       records.empty() ? Digest{} : records.back().commitment()};
        records.push_back(rec);
        return rec;
    }

    // records from `from_version` down to `to_version`, newest first
    std::vector<RootRecord> record_chain(uint64_t from_version, uint64_t to_version) const {
        std::vector<RootRecord> out;
        for (uint64_t v = from_version + 1; v-- > to_version;) out.push_back(records[v]);
        return out;
    }
};

class HarnessLedger : public LedgerView {
  public:
    HarnessLedger() : store_(StructureKind::jmt, be_) {}

    void register_porter(const std::string& id, Bytes pubkey) { porters_[id] = std::move(pubkey); }

    // Commits one period over the given (pubkey, latest record) pairs.
    uint64_t commit_period(const std::vector<std::pair<Bytes, RootRecord>>& entries) {
        uint64_t t = height_++;
        auto w = store_.open_window(t);
        for (const auto& [pk, rec] : entries) w.insert(TrieKey::for_public_key(pk), rec.encode());
        roots_[t] = w.seal().digest;
        return t;
    }

    AnchorProof anchor_for(uint64_t height, const Bytes& porter_pubkey,
                           std::vector<RootRecord> chain) const {
        AnchorProof a;
        a.height = height;
        a.ledger_proof = store_.prove_inclusion(height, TrieKey::for_public_key(porter_pubkey));
        a.records = std::move(chain);
        return a;
    }

    void set_reachable(bool reachable) { reachable_ = reachable; }

    bool available() const override { return reachable_; }
    std::string ledger_id() const override { return "L1"; }
    std::optional<Digest> root_at(uint64_t height) const override {
        auto it = roots_.find(height);
        if (it == roots_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<Bytes> porter_key(const std::string& porter_id) const override {
        auto it = porters_.find(porter_id);
        if (it == porters_.end()) return std::nullopt;
        return it->second;
    }

  private:
    MemoryBackend be_;
    AuthenticatedStore store_;
    uint64_t height_ = 0;
    std::map<uint64_t, Digest> roots_;
    std::map<std::string, Bytes> porters_;
    bool reachable_ = true;
};

// Registers one transfer with its venue porter, seals, anchors, and returns
// the complete POP entry the way a cooperative porter would.
inline PopEntry settle_transfer(HarnessPorter& porter, HarnessLedger& ledger, const Update& update,
                                const Bytes& owner_key, uint64_t baseline) {
    porter.submit(owner_key, update.vector.signed_digest());
    RootRecord rec = porter.seal_window();
    uint64_t t = ledger.commit_period({{porter.kp.public_key, rec}});

    TrieKey key = TrieKey::for_public_key(owner_key);
    PopEntry entry;
    entry.inclusion = porter.store.prove_inclusion(rec.version, key);
    for (uint64_t m = baseline; m < rec.version; ++m)
        entry.exclusions.push_back(porter.store.prove_exclusion(m, key));
    entry.anchor = ledger.anchor_for(t, porter.kp.public_key,
                                     porter.record_chain(rec.version, std::min(baseline, rec.version)));
    return entry;
}

}  // namespace sark::test
