// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <set>

#include "sark/asset.hpp"
#include "sark/runtime.hpp"
#include "sark/store.hpp"

namespace sark {

// Client submission of one update: the one-time key being spent, its
// signature over the new vector, the vector itself, and the designating
// anchor from the asset's previous update (which porter must register this
// and from which of its roots the key's exclusion window starts).
struct Submission {
    Bytes owner_key;
    Signature signature;
    UpdateVector vector;
    AnchorRef designation;

    TrieKey trie_key() const { return TrieKey::for_public_key(owner_key); }

    Json to_json() const {
        return Json{{"type", "submit"},
                    {"owner_key", to_hex(owner_key)},
                    {"sig", to_hex(signature)},
                    {"vector", to_hex(vector.encode())},
                    {"designation",
                     Json{{"ledger", designation.ledger_id},
                          {"porter", designation.porter_id},
                          {"root_index", designation.root_index}}}};
    }
    static Submission from_json(const Json& j) {
        Submission s;
        s.owner_key = json_hex(j, "owner_key");
        s.signature = json_hex(j, "sig");
        s.vector = UpdateVector::decode(json_hex(j, "vector"));
        const Json& d = j.at("designation");
        s.designation = AnchorRef{d.at("ledger").get<std::string>(), d.at("porter").get<std::string>(),
                                  d.at("root_index").get<uint64_t>()};
        return s;
    }
};

struct PorterReceipt {
    InclusionProof inclusion;
    std::vector<ExclusionProof> exclusions;
    std::optional<AnchorProof> anchor;

    PopEntry to_pop_entry() const { return PopEntry{inclusion, exclusions, anchor}; }

    Json to_json() const {
        Json j{{"inclusion", to_hex(proofwire::encode(inclusion))}, {"exclusions", Json::array()}};
        for (const auto& e : exclusions) j["exclusions"].push_back(to_hex(proofwire::encode(e)));
        if (anchor) j["anchor"] = to_hex(anchor->encode());
        return j;
    }
    static PorterReceipt from_json(const Json& j) {
        PorterReceipt r;
        r.inclusion = proofwire::decode_inclusion(json_hex(j, "inclusion"));
        for (const auto& e : j.at("exclusions"))
            r.exclusions.push_back(proofwire::decode_exclusion(from_hex(e.get<std::string>())));
        if (j.contains("anchor")) r.anchor = AnchorProof::decode(json_hex(j, "anchor"));
        return r;
    }
};

struct PorterConfig {
    std::string porter_id;
    KeyPair keypair;                 // k_P
    TimeMs window_ms = 1000;         // accumulation interval
    StructureKind kind = StructureKind::jmt;
    std::string validator_id;        // paired sloop node
    TimeMs resubmit_ms = 2000;       // root resubmission backoff
};

struct SubmitResult {
    bool ok = false;
    std::string reason;
    uint64_t window_version = 0;     // where the submission will seal
    int64_t latest_sealed = -1;
    int64_t ledger_height = -1;
};

struct ClaimResult {
    enum class Status { ok, pending, pending_anchor, unknown_key };
    Status status = Status::unknown_key;
    PorterReceipt receipt;
    int64_t latest_sealed = -1;
    int64_t ledger_height = -1;
};

// The relay. Verifies submissions, accumulates them into the current
// window's trie, seals on a timer, submits each sealed root record to its
// validator, and serves receipts and absence queries. One serialized event
// loop; all durable state lives in the backend and survives crashes.
//
// Backend namespaces: "t/" trie store, 'c' root records, 's' spent keys,
// 'F' full submissions, 'a' anchor proofs.
class Porter : public Actor {
  public:
    Porter(PorterConfig config, KvBackend& backend, TimeMs now)
        : config_(std::move(config)),
          backend_(backend),
          trie_backend_(backend, to_bytes("t/")),
          store_(config_.kind, trie_backend_) {
        // recover durable history
        backend_.iterate_prefix(Bytes{'c'}, [&](const Bytes&, const Bytes& v) {
            records_.push_back(RootRecord::decode(v));
            return true;
        });
        backend_.iterate_prefix(Bytes{'a'}, [&](const Bytes& k, const Bytes&) {
            ByteReader r(ByteView(k).subspan(1));
            anchored_versions_.insert(r.raw_u64());
            return true;
        });
        auto latest = store_.latest_version();
        uint64_t next = latest ? *latest + 1 : 0;
        if (records_.size() != next) throw StoreError("porter records out of sync with trie store");
        window_.emplace(store_.open_window(next));
        window_start_ = now;
        window_deadline_ = now + config_.window_ms;
        if (!records_.empty() && !latest_unanchored_covered()) resubmit_deadline_ = now;
    }

    const std::string& id() const override { return config_.porter_id; }
    const PorterConfig& config() const { return config_; }
    const AuthenticatedStore& store() const { return store_; }
    uint64_t current_window_version() const { return window_->version(); }
    int64_t latest_sealed() const { return records_.empty() ? -1 : static_cast<int64_t>(records_.size()) - 1; }
    int64_t ledger_height() const { return ledger_height_; }
    const std::vector<RootRecord>& records() const { return records_; }

    // ---- protocol operations (also callable directly in tests) ----

    SubmitResult submit(const Submission& s, TimeMs now) {
        (void)now;
        SubmitResult res;
        res.latest_sealed = latest_sealed();
        res.ledger_height = ledger_height_;
        if (s.designation.porter_id != config_.porter_id) {
            res.reason = "not assigned porter";
            return res;
        }
        if (s.owner_key.size() != kPublicKeySize ||
            !verify(s.owner_key, s.vector.signed_digest(), s.signature)) {
            res.reason = "invalid signature";
            return res;
        }
        TrieKey key = s.trie_key();
        if (window_->contains(key) || backend_.get(spent_key(key))) {
            res.reason = "key already spent";
            return res;
        }
        if (s.designation.root_index > window_->version()) {
            res.reason = "anchor ahead of porter";
            return res;
        }
        window_->insert(key, s.vector.signed_digest().to_bytes());
        pending_[key] = s;
        res.ok = true;
        res.window_version = window_->version();
        return res;
    }

    // Seals the current window (even when empty), opens the next one, and
    // hands back the sealed root. The record goes out to the validator.
    TrieRoot close_window(TimeMs now, Outbox& out) {
        if (now < window_start_ + config_.window_ms) throw StoreError("window close before deadline");
        TrieRoot root = window_->seal();
        RootRecord rec{root.version, root.digest,
                       records_.empty() ? Digest{} : records_.back().commitment()};
        records_.push_back(rec);
        Bytes ckey{'c'};
        put_u64_be(ckey, rec.version);
        backend_.put(ckey, rec.encode());
        for (const auto& [key, sub] : pending_) {
            Bytes skey = spent_key(key);
            ByteWriter w;
            w.raw_u64(rec.version);
            w.field_u64(sub.designation.root_index);
            backend_.put(skey, w.take());
            Bytes fkey{'F'};
            fkey.insert(fkey.end(), key.bytes.begin(), key.bytes.end());
            backend_.put(fkey, sub.vector.encode());
        }
        backend_.sync();
        pending_.clear();
        window_.emplace(store_.open_window(rec.version + 1));
        window_start_ = now;
        window_deadline_ = now + config_.window_ms;
        send_root_entry(rec, out);
        resubmit_deadline_ = now + config_.resubmit_ms;
        return root;
    }

    ClaimResult claim_receipt(const Bytes& owner_key, std::optional<uint64_t> since) const {
        ClaimResult res;
        res.latest_sealed = latest_sealed();
        res.ledger_height = ledger_height_;
        TrieKey key = TrieKey::for_public_key(owner_key);
        auto spent = backend_.get(spent_key(key));
        if (!spent) {
            res.status = window_->contains(key) ? ClaimResult::Status::pending
                                                : ClaimResult::Status::unknown_key;
            return res;
        }
        ByteReader r(*spent);
        uint64_t sealed_at = r.raw_u64();
        uint64_t baseline = since.value_or(r.field_u64());
        baseline = std::min(baseline, sealed_at);

        // smallest anchored version covering the sealing window
        std::optional<uint64_t> anchored;
        for (auto it = anchored_versions_.lower_bound(sealed_at); it != anchored_versions_.end(); ++it) {
            anchored = *it;
            break;
        }
        if (!anchored) {
            res.status = ClaimResult::Status::pending_anchor;
            return res;
        }
        res.receipt.inclusion = store_.prove_inclusion(sealed_at, key);
        for (uint64_t m = baseline; m < sealed_at; ++m)
            res.receipt.exclusions.push_back(store_.prove_exclusion(m, key));
        Bytes akey{'a'};
        put_u64_be(akey, *anchored);
        AnchorProof anchor = AnchorProof::decode(*backend_.get(akey));
        anchor.records.clear();
        for (uint64_t v = *anchored + 1; v-- > baseline;) anchor.records.push_back(records_[v]);
        res.receipt.anchor = std::move(anchor);
        res.status = ClaimResult::Status::ok;
        return res;
    }

    // One exclusion proof per sealed window in [from, to); error if the key
    // was sealed anywhere in the range.
    std::vector<ExclusionProof> prove_absence(const Bytes& owner_key, uint64_t from, uint64_t to) const {
        if (from > to) throw StoreError("absence range is reversed");
        if (to > records_.size()) throw StoreError("absence range beyond sealed history");
        TrieKey key = TrieKey::for_public_key(owner_key);
        std::vector<ExclusionProof> out;
        for (uint64_t v = from; v < to; ++v) {
            if (store_.contains(v, key))
                throw StoreError("key present in window " + std::to_string(v));
            out.push_back(store_.prove_exclusion(v, key));
        }
        return out;
    }

    // ---- actor surface ----

    void on_start(TimeMs now, Outbox& out) override {
        (void)now;
        // resubmit any roots that never got anchored before a restart
        if (!records_.empty() && !latest_unanchored_covered()) send_root_entry(records_.back(), out);
    }

    void on_message(const std::string& from, const Bytes& payload, TimeMs now, Outbox& out) override {
        auto parsed = parse_message(payload);
        if (!parsed) return;
        const Json& j = *parsed;
        const std::string type = j.at("type").get<std::string>();
        try {
            if (type == "submit") {
                SubmitResult r = submit(Submission::from_json(j), now);
                Json ack{{"type", "submit_ack"}, {"ok", r.ok},          {"window", r.window_version},
                         {"latest_sealed", r.latest_sealed},            {"ledger_height", r.ledger_height}};
                if (!r.ok) ack["reason"] = r.reason;
                out.send(from, ack);
            } else if (type == "claim") {
                std::optional<uint64_t> since;
                if (j.contains("since")) since = j.at("since").get<uint64_t>();
                ClaimResult r = claim_receipt(json_hex(j, "owner_key"), since);
                Json ack{{"type", "claim_ack"},
                         {"ok", r.status == ClaimResult::Status::ok},
                         {"latest_sealed", r.latest_sealed},
                         {"ledger_height", r.ledger_height}};
                switch (r.status) {
                    case ClaimResult::Status::ok:
                        ack["receipt"] = r.receipt.to_json();
                        break;
                    case ClaimResult::Status::pending:
                        ack["reason"] = "pending";
                        break;
                    case ClaimResult::Status::pending_anchor:
                        ack["reason"] = "pending_anchor";
                        break;
                    case ClaimResult::Status::unknown_key:
                        ack["reason"] = "unknown key";
                        break;
                }
                out.send(from, ack);
            } else if (type == "absence") {
                Json ack{{"type", "absence_ack"}};
                try {
                    auto proofs = prove_absence(json_hex(j, "owner_key"), j.at("from").get<uint64_t>(),
                                                j.at("to").get<uint64_t>());
                    ack["ok"] = true;
                    ack["proofs"] = Json::array();
                    for (const auto& p : proofs) ack["proofs"].push_back(to_hex(proofwire::encode(p)));
                } catch (const StoreError& e) {
                    ack["ok"] = false;
                    ack["reason"] = e.what();
                }
                out.send(from, ack);
            } else if (type == "anchor_proof") {
                handle_anchor_proof(j);
            }
        } catch (const std::exception& e) {
            out.send(from, Json{{"type", "error"}, {"ok", false}, {"reason", e.what()}});
        }
    }

    void on_timer(TimeMs now, Outbox& out) override {
        if (now >= window_deadline_) close_window(now, out);
        if (resubmit_deadline_ && now >= *resubmit_deadline_) {
            if (!records_.empty() && !latest_unanchored_covered()) {
                send_root_entry(records_.back(), out);
                resubmit_deadline_ = now + config_.resubmit_ms;
            } else {
                resubmit_deadline_.reset();
            }
        }
    }

    std::optional<TimeMs> next_deadline() const override {
        TimeMs d = window_deadline_;
        if (resubmit_deadline_) d = std::min(d, *resubmit_deadline_);
        return d;
    }

  private:
    bool latest_unanchored_covered() const {
        // the record chain makes any anchor at version >= v cover v
        if (records_.empty()) return true;
        auto it = anchored_versions_.lower_bound(records_.size() - 1);
        return it != anchored_versions_.end();
    }

    void send_root_entry(const RootRecord& rec, Outbox& out) {
        Signature sig =
            sign(config_.keypair.secret_key, signing_digest(DomainTag::porter_root, rec.encode()));
        out.send(config_.validator_id, Json{{"type", "root_entry"},
                                            {"from", config_.porter_id},
                                            {"porter", config_.porter_id},
                                            {"key", to_hex(config_.keypair.public_key)},
                                            {"record", to_hex(rec.encode())},
                                            {"sig", to_hex(sig)},
                                            {"relay", false}});
    }

    void handle_anchor_proof(const Json& j) {
        RootRecord rec = RootRecord::decode(json_hex(j, "record"));
        if (rec.version >= records_.size() || !(records_[rec.version] == rec)) return;
        AnchorProof anchor;
        anchor.height = j.at("height").get<uint64_t>();
        anchor.ledger_proof = proofwire::decode_inclusion(json_hex(j, "proof"));
        anchor.records = {rec};
        Bytes akey{'a'};
        put_u64_be(akey, rec.version);
        backend_.put(akey, anchor.encode());
        backend_.sync();
        anchored_versions_.insert(rec.version);
        ledger_height_ = std::max(ledger_height_, static_cast<int64_t>(anchor.height));
    }

    Bytes spent_key(const TrieKey& key) const {
        Bytes k{'s'};
        k.insert(k.end(), key.bytes.begin(), key.bytes.end());
        return k;
    }

    PorterConfig config_;
    KvBackend& backend_;
    PrefixedBackend trie_backend_;
    AuthenticatedStore store_;
    std::optional<AuthenticatedStore::Window> window_;
    std::map<TrieKey, Submission> pending_;
    std::vector<RootRecord> records_;
    std::set<uint64_t> anchored_versions_;
    TimeMs window_start_ = 0;
    TimeMs window_deadline_ = 0;
    std::optional<TimeMs> resubmit_deadline_;
    int64_t ledger_height_ = -1;
};

}  // namespace sark
