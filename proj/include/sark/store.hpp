// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "sark/jmt.hpp"
#include "sark/mpt.hpp"

namespace sark {

inline constexpr size_t kMaxTrieValueSize = 128 * 1024;

// Versioned, window-scoped authenticated store. Every window is an
// independent trie; sealing persists its nodes content-addressed so proofs
// for any historical version are reconstructed straight from the backend,
// with no replay of intermediate updates.
//
// Backend layout (within this store's namespace):
//   'n' + digest          -> node preimage
//   'r' + be64(version)   -> kind byte + root digest
//   'L'                   -> be64 latest sealed version
//   'v' + be64 + key      -> value bytes (jmt keeps values out-of-tree)
class AuthenticatedStore {
  public:
    AuthenticatedStore(StructureKind kind, KvBackend& backend) : kind_(kind), backend_(backend) {}

    StructureKind kind() const { return kind_; }

    class Window {
      public:
        Window(AuthenticatedStore& store, uint64_t version) : store_(&store), version_(version) {}
        Window(Window&&) = default;
        Window& operator=(Window&&) = default;
        Window(const Window&) = delete;
        Window& operator=(const Window&) = delete;

        uint64_t version() const { return version_; }
        size_t size() const { return entries_.size(); }
        bool contains(const TrieKey& key) const { return entries_.count(key) != 0; }

        void insert(const TrieKey& key, const Bytes& value) {
            if (sealed_) throw StoreError("window already sealed");
            if (value.size() > kMaxTrieValueSize) throw StoreError("value too large");
            if (entries_.count(key)) throw StoreError("duplicate trie key");
            if (store_->kind_ == StructureKind::jmt) {
                // value_hash now, value bytes to the backend's value region:
                // a jmt write touches both the tree and the value store.
                Digest vh = sha256(value);
                jmt::insert(jmt_root_, 0, key, vh);
                store_->backend_.put(store_->value_key(version_, key), value);
            } else {
                mpt::insert_key(mpt_root_, key, value);
            }
            entries_.emplace(key, value.size());
        }

        TrieRoot seal() {
            if (sealed_) throw StoreError("window already sealed");
            sealed_ = true;
            auto persist = [&](const Digest& d, const Bytes& pre) {
                store_->backend_.put(store_->node_key(d), pre);
            };
            Digest root = empty_window_root();
            if (store_->kind_ == StructureKind::jmt) {
                if (jmt_root_) root = jmt::seal(jmt_root_.get(), persist);
            } else {
                if (mpt_root_) root = mpt::seal(mpt_root_.get(), persist);
            }
            TrieRoot out{root, version_, store_->kind_};
            Bytes rec;
            rec.push_back(static_cast<uint8_t>(store_->kind_));
            rec.insert(rec.end(), root.bytes.begin(), root.bytes.end());
            store_->backend_.put(store_->root_key(version_), rec);
            store_->backend_.put(store_->latest_key(), u64_be(version_));
            store_->backend_.sync();
            return out;
        }

      private:
        AuthenticatedStore* store_;
        uint64_t version_;
        bool sealed_ = false;
        std::map<TrieKey, size_t> entries_;
        std::unique_ptr<jmt::Node> jmt_root_;
        mpt::NodePtr mpt_root_;
    };

    // Windows are strictly sequential: version must be 0 for a fresh store or
    // latest + 1 afterwards.
    Window open_window(uint64_t version) {
        auto latest = latest_version();
        uint64_t expected = latest ? *latest + 1 : 0;
        if (version != expected)
            throw StoreError("window version " + std::to_string(version) + " out of sequence, expected " +
                             std::to_string(expected));
        return Window(*this, version);
    }

    std::optional<uint64_t> latest_version() const {
        auto raw = backend_.get(latest_key());
        if (!raw) return std::nullopt;
        ByteReader r(*raw);
        return r.raw_u64();
    }

    std::optional<TrieRoot> root_at(uint64_t version) const {
        auto raw = backend_.get(root_key(version));
        if (!raw || raw->size() != 33) return std::nullopt;
        TrieRoot root;
        root.kind = static_cast<StructureKind>((*raw)[0]);
        root.digest = Digest::from_bytes(ByteView(*raw).subspan(1));
        root.version = version;
        return root;
    }

    InclusionProof prove_inclusion(uint64_t version, const TrieKey& key) const {
        TrieRoot root = require_root(version);
        InclusionProof proof;
        proof.kind = kind_;
        proof.key = key;
        proof.root = root;
        if (kind_ == StructureKind::jmt) {
            auto walk = jmt::walk(root.digest, key, loader());
            if (!walk.found) throw StoreError("key absent: no inclusion proof");
            proof.value_digest = walk.value_hash;
            proof.steps = std::move(walk.steps);
        } else {
            auto walk = mpt::walk(root.digest, key, loader());
            if (!walk.found) throw StoreError("key absent: no inclusion proof");
            proof.value_digest = sha256(walk.value);
            proof.nodes = std::move(walk.nodes);
        }
        return proof;
    }

    ExclusionProof prove_exclusion(uint64_t version, const TrieKey& key) const {
        TrieRoot root = require_root(version);
        ExclusionProof proof;
        proof.kind = kind_;
        proof.key = key;
        proof.root = root;
        if (kind_ == StructureKind::jmt) {
            auto walk = jmt::walk(root.digest, key, loader());
            if (walk.found) throw StoreError("key present: no exclusion proof");
            proof.steps = std::move(walk.steps);
            proof.divergent_leaf = walk.divergent_leaf;
        } else {
            auto walk = mpt::walk(root.digest, key, loader());
            if (walk.found) throw StoreError("key present: no exclusion proof");
            proof.nodes = std::move(walk.nodes);
        }
        return proof;
    }

    bool contains(uint64_t version, const TrieKey& key) const {
        TrieRoot root = require_root(version);
        if (kind_ == StructureKind::jmt) return jmt::walk(root.digest, key, loader()).found;
        return mpt::walk(root.digest, key, loader()).found;
    }

    // jmt value region; mpt values live in the leaf nodes.
    std::optional<Bytes> value_at(uint64_t version, const TrieKey& key) const {
        if (kind_ == StructureKind::jmt) return backend_.get(value_key(version, key));
        TrieRoot root = require_root(version);
        auto walk = mpt::walk(root.digest, key, loader());
        if (!walk.found) return std::nullopt;
        return walk.value;
    }

  private:
    friend class Window;

    TrieRoot require_root(uint64_t version) const {
        auto root = root_at(version);
        if (!root) throw StoreError("unknown trie version " + std::to_string(version));
        return *root;
    }

    std::function<Bytes(const Digest&)> loader() const {
        return [this](const Digest& d) {
            auto raw = backend_.get(node_key(d));
            return raw ? *raw : Bytes{};
        };
    }

    Bytes node_key(const Digest& d) const {
        Bytes k{'n'};
        k.insert(k.end(), d.bytes.begin(), d.bytes.end());
        return k;
    }
    Bytes root_key(uint64_t version) const {
        Bytes k{'r'};
        put_u64_be(k, version);
        return k;
    }
    Bytes latest_key() const { return Bytes{'L'}; }
    Bytes value_key(uint64_t version, const TrieKey& key) const {
        Bytes k{'v'};
        put_u64_be(k, version);
        k.insert(k.end(), key.bytes.begin(), key.bytes.end());
        return k;
    }

    StructureKind kind_;
    KvBackend& backend_;
};

}  // namespace sark
