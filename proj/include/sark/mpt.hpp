// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <memory>

#include "sark/kv.hpp"
#include "sark/trie.hpp"

// Merkle-Patricia-style trie: hex-nibble path compression with branch,
// extension and leaf nodes, values stored inside the leaf nodes. Since all
// keys are 64 nibbles long, branches never carry values.
namespace sark::mpt {

struct Node;
using NodePtr = std::unique_ptr<Node>;

enum class Kind : uint8_t { branch, extension, leaf };

struct Node {
    Kind kind = Kind::leaf;
    std::vector<uint8_t> path;                    // extension / leaf remainder
    Bytes value;                                  // leaf
    std::array<NodePtr, 16> children;             // branch
    NodePtr child;                                // extension

    static NodePtr make_leaf(std::vector<uint8_t> p, Bytes v) {
        auto n = std::make_unique<Node>();
        n->kind = Kind::leaf;
        n->path = std::move(p);
        n->value = std::move(v);
        return n;
    }
    static NodePtr make_branch() {
        auto n = std::make_unique<Node>();
        n->kind = Kind::branch;
        return n;
    }
    static NodePtr make_extension(std::vector<uint8_t> p, NodePtr c) {
        auto n = std::make_unique<Node>();
        n->kind = Kind::extension;
        n->path = std::move(p);
        n->child = std::move(c);
        return n;
    }
};

namespace detail {

inline std::vector<uint8_t> key_nibbles(const TrieKey& key, size_t from) {
    std::vector<uint8_t> out;
    out.reserve(kKeyNibbles - from);
    for (size_t i = from; i < kKeyNibbles; ++i) out.push_back(key.nibble(i));
    return out;
}

inline size_t common_prefix(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
    size_t n = std::min(a.size(), b.size());
    size_t i = 0;
    while (i < n && a[i] == b[i]) ++i;
    return i;
}

inline std::vector<uint8_t> slice(const std::vector<uint8_t>& v, size_t from) {
    return std::vector<uint8_t>(v.begin() + static_cast<long>(from), v.end());
}

inline std::vector<uint8_t> slice(const std::vector<uint8_t>& v, size_t from, size_t count) {
    return std::vector<uint8_t>(v.begin() + static_cast<long>(from),
                                v.begin() + static_cast<long>(from + count));
}

// Wraps a node in an extension when the prefix is non-empty.
inline NodePtr extend(std::vector<uint8_t> prefix, NodePtr inner) {
    if (prefix.empty()) return inner;
    return Node::make_extension(std::move(prefix), std::move(inner));
}

}  // namespace detail

inline void insert(NodePtr& slot, const std::vector<uint8_t>& rest, const Bytes& value) {
    if (!slot) {
        slot = Node::make_leaf(rest, value);
        return;
    }
    Node& n = *slot;
    switch (n.kind) {
        case Kind::leaf: {
            size_t common = detail::common_prefix(n.path, rest);
            if (common == n.path.size() && common == rest.size())
                throw StoreError("duplicate trie key");
            auto branch = Node::make_branch();
            Node* b = branch.get();
            // equal-length keys diverge strictly before either path ends
            uint8_t old_slot = n.path[common];
            uint8_t new_slot = rest[common];
            b->children[old_slot] = Node::make_leaf(detail::slice(n.path, common + 1), std::move(n.value));
            b->children[new_slot] = Node::make_leaf(detail::slice(rest, common + 1), value);
            slot = detail::extend(detail::slice(rest, 0, common), std::move(branch));
            return;
        }
        case Kind::extension: {
            size_t common = detail::common_prefix(n.path, rest);
            if (common == n.path.size()) {
                insert(n.child, detail::slice(rest, common), value);
                return;
            }
            auto branch = Node::make_branch();
            Node* b = branch.get();
            uint8_t old_slot = n.path[common];
            uint8_t new_slot = rest[common];
            b->children[old_slot] = detail::extend(detail::slice(n.path, common + 1), std::move(n.child));
            b->children[new_slot] = Node::make_leaf(detail::slice(rest, common + 1), value);
            slot = detail::extend(detail::slice(rest, 0, common), std::move(branch));
            return;
        }
        case Kind::branch: {
            insert(n.children[rest[0]], detail::slice(rest, 1), value);
            return;
        }
    }
}

inline void insert_key(NodePtr& root, const TrieKey& key, const Bytes& value) {
    insert(root, detail::key_nibbles(key, 0), value);
}

inline Bytes encode_node_header(Kind k, const std::vector<uint8_t>& path) {
    Bytes pre;
    pre.push_back(k == Kind::leaf ? node_tag::mpt_leaf : node_tag::mpt_extension);
    pre.push_back(static_cast<uint8_t>(path.size()));
    Bytes packed = pack_nibbles(path);
    pre.insert(pre.end(), packed.begin(), packed.end());
    return pre;
}

inline Digest seal(const Node* node, const std::function<void(const Digest&, const Bytes&)>& persist) {
    Bytes pre;
    switch (node->kind) {
        case Kind::leaf: {
            pre = encode_node_header(Kind::leaf, node->path);
            put_u32_be(pre, static_cast<uint32_t>(node->value.size()));
            pre.insert(pre.end(), node->value.begin(), node->value.end());
            break;
        }
        case Kind::extension: {
            Digest child = seal(node->child.get(), persist);
            pre = encode_node_header(Kind::extension, node->path);
            pre.insert(pre.end(), child.bytes.begin(), child.bytes.end());
            break;
        }
        case Kind::branch: {
            uint16_t bitmap = 0;
            std::array<Digest, 16> digests;
            for (unsigned i = 0; i < 16; ++i) {
                if (node->children[i]) {
                    digests[i] = seal(node->children[i].get(), persist);
                    bitmap |= static_cast<uint16_t>(1u << i);
                }
            }
            pre.push_back(node_tag::mpt_branch);
            pre.push_back(static_cast<uint8_t>(bitmap >> 8));
            pre.push_back(static_cast<uint8_t>(bitmap & 0xff));
            for (unsigned i = 0; i < 16; ++i)
                if ((bitmap >> i) & 1) pre.insert(pre.end(), digests[i].bytes.begin(), digests[i].bytes.end());
            break;
        }
    }
    Digest d = sha256(pre);
    persist(d, pre);
    return d;
}

struct WalkResult {
    bool found = false;
    std::vector<Bytes> nodes;  // preimages root-down, ending at the terminal node
    Bytes value;               // set when found
};

// Collects the node chain along the key's path; the chain itself is the proof.
inline WalkResult walk(const Digest& root, const TrieKey& key,
                       const std::function<Bytes(const Digest&)>& load) {
    WalkResult out;
    if (root == empty_window_root()) return out;
    Digest cur = root;
    size_t pos = 0;
    for (;;) {
        Bytes pre = load(cur);
        if (pre.empty()) throw StoreError("missing mpt node");
        out.nodes.push_back(pre);
        ByteReader r(ByteView(pre).subspan(1));
        switch (pre[0]) {
            case node_tag::mpt_branch: {
                uint16_t bitmap = r.raw_u16();
                unsigned slot = key.nibble(pos);
                if (!((bitmap >> slot) & 1)) return out;  // absent
                unsigned before = 0;
                for (unsigned i = 0; i < slot; ++i)
                    if ((bitmap >> i) & 1) ++before;
                cur = Digest::from_bytes(ByteView(pre).subspan(3 + before * 32, 32));
                pos += 1;
                break;
            }
            case node_tag::mpt_extension: {
                uint8_t plen = r.raw_u8();
                Bytes packed = r.raw((plen + 1) / 2);
                auto path = unpack_nibbles(packed, plen);
                for (size_t i = 0; i < path.size(); ++i)
                    if (pos + i >= kKeyNibbles || key.nibble(pos + i) != path[i]) return out;  // diverges
                cur = Digest::from_bytes(r.raw(32));
                pos += path.size();
                break;
            }
            case node_tag::mpt_leaf: {
                uint8_t plen = r.raw_u8();
                Bytes packed = r.raw((plen + 1) / 2);
                uint32_t vlen = r.raw_u32();
                Bytes value = r.raw(vlen);
                auto path = unpack_nibbles(packed, plen);
                bool match = (pos + path.size() == kKeyNibbles);
                if (match)
                    for (size_t i = 0; i < path.size(); ++i)
                        if (key.nibble(pos + i) != path[i]) {
                            match = false;
                            break;
                        }
                out.found = match;
                if (match) out.value = std::move(value);
                return out;
            }
            default:
                throw StoreError("corrupt mpt node");
        }
    }
}

}  // namespace sark::mpt
