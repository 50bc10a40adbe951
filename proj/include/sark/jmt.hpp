// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <memory>

#include "sark/kv.hpp"
#include "sark/trie.hpp"

// Jellyfish-style sparse Merkle tree: 16-ary over 64 key nibbles, leaves
// hold (key, value_hash) with the value itself stored out-of-tree, internal
// nodes hash all sixteen child slots with a placeholder for absent children.
// A leaf sits at the depth where its key prefix becomes unique.
namespace sark::jmt {

struct Node {
    bool is_leaf = false;
    TrieKey key;         // leaf
    Digest value_hash;   // leaf
    std::array<std::unique_ptr<Node>, 16> children;  // internal

    static std::unique_ptr<Node> leaf(const TrieKey& k, const Digest& vh) {
        auto n = std::make_unique<Node>();
        n->is_leaf = true;
        n->key = k;
        n->value_hash = vh;
        return n;
    }
    static std::unique_ptr<Node> internal() { return std::make_unique<Node>(); }
};

inline void insert(std::unique_ptr<Node>& slot, size_t depth, const TrieKey& key, const Digest& vh) {
    if (!slot) {
        slot = Node::leaf(key, vh);
        return;
    }
    if (!slot->is_leaf) {
        insert(slot->children[key.nibble(depth)], depth + 1, key, vh);
        return;
    }
    if (slot->key == key) throw StoreError("duplicate trie key");
    // Split: push the existing leaf down until the two keys diverge.
    std::unique_ptr<Node> old = std::move(slot);
    slot = Node::internal();
    Node* cur = slot.get();
    size_t d = depth;
    while (old->key.nibble(d) == key.nibble(d)) {
        auto& child = cur->children[key.nibble(d)];
        child = Node::internal();
        cur = child.get();
        ++d;
    }
    cur->children[old->key.nibble(d)] = std::move(old);
    cur->children[key.nibble(d)] = Node::leaf(key, vh);
}

// Hashes the tree bottom-up and persists every node preimage content-addressed.
inline Digest seal(const Node* node, const std::function<void(const Digest&, const Bytes&)>& persist) {
    if (node->is_leaf) {
        Bytes pre;
        pre.reserve(65);
        pre.push_back(node_tag::jmt_leaf);
        pre.insert(pre.end(), node->key.bytes.begin(), node->key.bytes.end());
        pre.insert(pre.end(), node->value_hash.bytes.begin(), node->value_hash.bytes.end());
        Digest d = sha256(pre);
        persist(d, pre);
        return d;
    }
    std::array<Digest, 16> children;
    children.fill(placeholder_digest());
    for (size_t i = 0; i < 16; ++i)
        if (node->children[i]) children[i] = seal(node->children[i].get(), persist);
    Bytes pre;
    pre.reserve(1 + 16 * 32);
    pre.push_back(node_tag::jmt_internal);
    for (const auto& c : children) pre.insert(pre.end(), c.bytes.begin(), c.bytes.end());
    Digest d = sha256(pre);
    persist(d, pre);
    return d;
}

namespace detail {

struct DecodedInternal {
    std::array<Digest, 16> children;
    uint16_t bitmap = 0;
};

inline DecodedInternal decode_internal(ByteView pre) {
    if (pre.size() != 1 + 16 * 32 || pre[0] != node_tag::jmt_internal)
        throw StoreError("corrupt jmt internal node");
    DecodedInternal out;
    for (unsigned i = 0; i < 16; ++i) {
        out.children[i] = Digest::from_bytes(pre.subspan(1 + i * 32, 32));
        if (out.children[i] != placeholder_digest()) out.bitmap |= static_cast<uint16_t>(1u << i);
    }
    return out;
}

struct DecodedLeaf {
    TrieKey key;
    Digest value_hash;
};

inline DecodedLeaf decode_leaf(ByteView pre) {
    if (pre.size() != 65 || pre[0] != node_tag::jmt_leaf) throw StoreError("corrupt jmt leaf node");
    return {TrieKey::from_bytes(pre.subspan(1, 32)), Digest::from_bytes(pre.subspan(33, 32))};
}

inline JmtStep make_step(const DecodedInternal& n, unsigned own) {
    JmtStep s;
    s.bitmap = n.bitmap;
    for (unsigned i = 0; i < 16; ++i)
        if (i != own && ((n.bitmap >> i) & 1)) s.siblings.push_back(n.children[i]);
    return s;
}

}  // namespace detail

struct WalkResult {
    bool found = false;
    std::vector<JmtStep> steps;
    std::optional<JmtDivergentLeaf> divergent_leaf;  // set when the path ends on another key's leaf
    Digest value_hash;                                // set when found
};

// Descends from a sealed root by the key's nibbles, collecting proof steps.
inline WalkResult walk(const Digest& root, const TrieKey& key,
                       const std::function<Bytes(const Digest&)>& load) {
    WalkResult out;
    if (root == empty_window_root()) return out;
    Digest cur = root;
    for (size_t depth = 0;; ++depth) {
        Bytes pre = load(cur);
        if (pre.empty()) throw StoreError("missing jmt node");
        if (pre[0] == node_tag::jmt_leaf) {
            auto leaf = detail::decode_leaf(pre);
            if (leaf.key == key) {
                out.found = true;
                out.value_hash = leaf.value_hash;
            } else {
                out.divergent_leaf = JmtDivergentLeaf{leaf.key, leaf.value_hash};
            }
            return out;
        }
        auto node = detail::decode_internal(pre);
        unsigned own = key.nibble(depth);
        out.steps.push_back(detail::make_step(node, own));
        if (node.children[own] == placeholder_digest()) return out;  // empty slot: absent
        cur = node.children[own];
        if (depth + 1 > kKeyNibbles) throw StoreError("jmt deeper than key length");
    }
}

}  // namespace sark::jmt
