// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <bit>
#include <optional>

#include "sark/crypto.hpp"

namespace sark {

// 32-byte trie key (hash of a one-time public key), addressed as 64 nibbles,
// most significant first.
struct TrieKey {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const TrieKey&) const = default;

    ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
    Bytes to_bytes() const { return Bytes(bytes.begin(), bytes.end()); }
    std::string hex() const { return to_hex(view()); }

    uint8_t nibble(size_t i) const {
        uint8_t b = bytes[i / 2];
        return (i % 2 == 0) ? (b >> 4) : (b & 0x0f);
    }

    static TrieKey from_bytes(ByteView b) {
        if (b.size() != 32) throw CodecError("trie key must be 32 bytes");
        TrieKey k;
        std::memcpy(k.bytes.data(), b.data(), 32);
        return k;
    }
    static TrieKey from_digest(const Digest& d) { return from_bytes(d.view()); }
    static TrieKey for_public_key(ByteView pk) { return from_digest(sha256(pk)); }
};

inline constexpr size_t kKeyNibbles = 64;

enum class StructureKind : uint8_t { jmt = 0x01, mpt = 0x02 };

inline const char* kind_name(StructureKind k) { return k == StructureKind::jmt ? "jmt" : "mpt"; }

struct TrieRoot {
    Digest digest;
    uint64_t version = 0;
    StructureKind kind = StructureKind::jmt;

    bool operator==(const TrieRoot&) const = default;
};

// Digest standing in for an absent child slot.
inline const Digest& placeholder_digest() {
    static const Digest d{};  // all zero
    return d;
}

// Root of a window that sealed with no entries.
inline const Digest& empty_window_root() {
    static const Digest d = sha256(to_bytes("sark:empty-window:v1"));
    return d;
}

namespace node_tag {
inline constexpr uint8_t jmt_internal = 0x10;
inline constexpr uint8_t jmt_leaf = 0x11;
inline constexpr uint8_t mpt_branch = 0x20;
inline constexpr uint8_t mpt_extension = 0x21;
inline constexpr uint8_t mpt_leaf = 0x22;
}  // namespace node_tag

inline Digest hash_jmt_leaf(const TrieKey& key, const Digest& value_hash) {
    Bytes pre;
    pre.reserve(1 + 32 + 32);
    pre.push_back(node_tag::jmt_leaf);
    pre.insert(pre.end(), key.bytes.begin(), key.bytes.end());
    pre.insert(pre.end(), value_hash.bytes.begin(), value_hash.bytes.end());
    return sha256(pre);
}

inline Digest hash_jmt_internal(const std::array<Digest, 16>& children) {
    Bytes pre;
    pre.reserve(1 + 16 * 32);
    pre.push_back(node_tag::jmt_internal);
    for (const auto& c : children) pre.insert(pre.end(), c.bytes.begin(), c.bytes.end());
    return sha256(pre);
}

// Nibble-path helpers shared by the MPT node codec.
inline Bytes pack_nibbles(const std::vector<uint8_t>& nibbles) {
    Bytes out((nibbles.size() + 1) / 2, 0);
    for (size_t i = 0; i < nibbles.size(); ++i) {
        if (i % 2 == 0)
            out[i / 2] |= static_cast<uint8_t>(nibbles[i] << 4);
        else
            out[i / 2] |= nibbles[i];
    }
    return out;
}

inline std::vector<uint8_t> unpack_nibbles(ByteView packed, size_t count) {
    std::vector<uint8_t> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        uint8_t b = packed[i / 2];
        out.push_back((i % 2 == 0) ? (b >> 4) : (b & 0x0f));
    }
    return out;
}

// One level of a JMT proof path, root-down. The child index at each level is
// derived from the key, so only the sibling digests travel. Bit i of the
// bitmap marks child slot i occupied in the committed tree.
struct JmtStep {
    uint16_t bitmap = 0;
    std::vector<Digest> siblings;  // occupied slots excluding the key's own, index order
};

struct JmtDivergentLeaf {
    TrieKey key;
    Digest value_hash;
};

struct InclusionProof {
    StructureKind kind = StructureKind::jmt;
    TrieKey key;
    Digest value_digest;  // sha256 of the committed value bytes
    TrieRoot root;
    std::vector<JmtStep> steps;  // jmt
    std::vector<Bytes> nodes;    // mpt: node preimages, root first
};

struct ExclusionProof {
    StructureKind kind = StructureKind::jmt;
    TrieKey key;
    TrieRoot root;
    std::vector<JmtStep> steps;
    std::optional<JmtDivergentLeaf> divergent_leaf;
    std::vector<Bytes> nodes;
};

namespace detail {

// Folds a JMT path bottom-up from `current` at depth steps.size() back to the
// root. `occupied` says whether the key's slot in the deepest step holds
// `current` (inclusion / divergent leaf) or is empty (exclusion).
inline std::optional<Digest> fold_jmt_path(const TrieKey& key, const std::vector<JmtStep>& steps,
                                           Digest current, bool occupied) {
    if (steps.size() > kKeyNibbles) return std::nullopt;
    for (size_t level = steps.size(); level-- > 0;) {
        const JmtStep& step = steps[level];
        const unsigned own = key.nibble(level);
        const bool own_bit = (step.bitmap >> own) & 1;
        if (level == steps.size() - 1) {
            if (own_bit != occupied) return std::nullopt;
        } else {
            // interior levels on the path always hold the child we came from
            if (!own_bit) return std::nullopt;
        }
        std::array<Digest, 16> children;
        children.fill(placeholder_digest());
        size_t sib = 0;
        for (unsigned i = 0; i < 16; ++i) {
            if (i == own) {
                bool leaf_level = (level == steps.size() - 1);
                children[i] = (leaf_level && !occupied) ? placeholder_digest() : current;
                continue;
            }
            if ((step.bitmap >> i) & 1) {
                if (sib >= step.siblings.size()) return std::nullopt;
                children[i] = step.siblings[sib++];
            }
        }
        if (sib != step.siblings.size()) return std::nullopt;
        current = hash_jmt_internal(children);
    }
    return current;
}

struct MptWalk {
    bool ok = false;        // proof hashes consistently against the root
    bool found = false;     // key present with a value
    Bytes value;
};

// Walks MPT node preimages from the root, checking each child link hash and
// consuming key nibbles. Absence is shown by an empty branch slot, a
// diverging extension, or a mismatched leaf at the end of the chain.
inline MptWalk walk_mpt(const TrieKey& key, const Digest& root, const std::vector<Bytes>& nodes) {
    MptWalk w;
    if (nodes.empty()) return w;
    if (sha256(nodes[0]) != root) return w;
    size_t pos = 0;  // nibble cursor into key
    for (size_t i = 0; i < nodes.size(); ++i) {
        const Bytes& raw = nodes[i];
        if (raw.empty()) return w;
        const bool last = (i + 1 == nodes.size());
        try {
            ByteReader r(ByteView(raw).subspan(1));
            switch (raw[0]) {
                case node_tag::mpt_branch: {
                    uint16_t bitmap = r.raw_u16();
                    std::array<Digest, 16> children;
                    children.fill(placeholder_digest());
                    for (unsigned b = 0; b < 16; ++b)
                        if ((bitmap >> b) & 1) children[b] = Digest::from_bytes(r.raw(32));
                    r.expect_done();
                    if (pos >= kKeyNibbles) return w;
                    unsigned slot = key.nibble(pos);
                    if (!((bitmap >> slot) & 1)) {
                        // empty slot: valid absence terminal
                        if (!last) return w;
                        w.ok = true;
                        return w;
                    }
                    if (last) return w;  // dangling link
                    if (sha256(nodes[i + 1]) != children[slot]) return w;
                    pos += 1;
                    break;
                }
                case node_tag::mpt_extension: {
                    uint8_t plen = r.raw_u8();
                    if (plen == 0) return w;
                    Bytes packed = r.raw((plen + 1) / 2);
                    Digest child = Digest::from_bytes(r.raw(32));
                    r.expect_done();
                    auto path = unpack_nibbles(packed, plen);
                    bool diverges = false;
                    for (size_t k = 0; k < path.size(); ++k) {
                        if (pos + k >= kKeyNibbles || key.nibble(pos + k) != path[k]) {
                            diverges = true;
                            break;
                        }
                    }
                    if (diverges) {
                        if (!last) return w;
                        w.ok = true;
                        return w;
                    }
                    if (last) return w;
                    if (sha256(nodes[i + 1]) != child) return w;
                    pos += path.size();
                    break;
                }
                case node_tag::mpt_leaf: {
                    uint8_t plen = r.raw_u8();
                    Bytes packed = r.raw((plen + 1) / 2);
                    uint32_t vlen = r.raw_u32();
                    Bytes value = r.raw(vlen);
                    r.expect_done();
                    if (!last) return w;
                    auto path = unpack_nibbles(packed, plen);
                    bool match = (pos + path.size() == kKeyNibbles);
                    if (match)
                        for (size_t k = 0; k < path.size(); ++k)
                            if (key.nibble(pos + k) != path[k]) {
                                match = false;
                                break;
                            }
                    w.ok = true;
                    w.found = match;
                    if (match) w.value = std::move(value);
                    return w;
                }
                default:
                    return w;
            }
        } catch (const CodecError&) {
            return w;
        }
    }
    return w;  // chain ended on a non-terminal node
}

}  // namespace detail

// Stateless proof checks: true iff the proof recomputes the root digest.
// Malformed proofs are false, never an exception.
inline bool verify_inclusion(const InclusionProof& p) {
    try {
        if (p.kind != p.root.kind) return false;
        if (p.kind == StructureKind::jmt) {
            if (!p.nodes.empty()) return false;
            Digest leaf = hash_jmt_leaf(p.key, p.value_digest);
            auto computed = detail::fold_jmt_path(p.key, p.steps, leaf, true);
            return computed && *computed == p.root.digest;
        }
        if (!p.steps.empty()) return false;
        auto walk = detail::walk_mpt(p.key, p.root.digest, p.nodes);
        return walk.ok && walk.found && sha256(walk.value) == p.value_digest;
    } catch (const std::exception&) {
        return false;
    }
}

inline bool verify_exclusion(const ExclusionProof& p) {
    try {
        if (p.kind != p.root.kind) return false;
        if (p.kind == StructureKind::jmt) {
            if (!p.nodes.empty()) return false;
            if (p.steps.empty() && !p.divergent_leaf) return p.root.digest == empty_window_root();
            if (p.divergent_leaf) {
                const auto& leaf = *p.divergent_leaf;
                if (leaf.key == p.key) return false;
                // the surrogate leaf must sit on the key's own path
                for (size_t i = 0; i < p.steps.size(); ++i)
                    if (leaf.key.nibble(i) != p.key.nibble(i)) return false;
                Digest start = hash_jmt_leaf(leaf.key, leaf.value_hash);
                auto computed = detail::fold_jmt_path(p.key, p.steps, start, true);
                return computed && *computed == p.root.digest;
            }
            auto computed = detail::fold_jmt_path(p.key, p.steps, placeholder_digest(), false);
            return computed && *computed == p.root.digest;
        }
        if (!p.steps.empty() || p.divergent_leaf) return false;
        if (p.nodes.empty()) return p.root.digest == empty_window_root();
        auto walk = detail::walk_mpt(p.key, p.root.digest, p.nodes);
        return walk.ok && !walk.found;
    } catch (const std::exception&) {
        return false;
    }
}

// Wire form: 1-byte structure kind, 1-byte proof kind, then length-prefixed
// fields. Rendered as lowercase hex wherever protocols carry proofs.
namespace proofwire {

inline constexpr uint8_t kInclusion = 0x01;
inline constexpr uint8_t kExclusion = 0x02;

namespace detail {

inline void put_steps(ByteWriter& w, const std::vector<JmtStep>& steps) {
    w.raw_u16(static_cast<uint16_t>(steps.size()));
    for (const auto& s : steps) {
        w.raw_u16(s.bitmap);
        w.raw_u16(static_cast<uint16_t>(s.siblings.size()));
        for (const auto& d : s.siblings) w.raw(d.view());
    }
}

inline std::vector<JmtStep> get_steps(ByteReader& r) {
    uint16_t n = r.raw_u16();
    std::vector<JmtStep> steps(n);
    for (auto& s : steps) {
        s.bitmap = r.raw_u16();
        uint16_t count = r.raw_u16();
        s.siblings.reserve(count);
        for (uint16_t i = 0; i < count; ++i) s.siblings.push_back(Digest::from_bytes(r.raw(32)));
    }
    return steps;
}

inline void put_nodes(ByteWriter& w, const std::vector<Bytes>& nodes) {
    w.raw_u16(static_cast<uint16_t>(nodes.size()));
    for (const auto& n : nodes) w.field(n);
}

inline std::vector<Bytes> get_nodes(ByteReader& r) {
    uint16_t n = r.raw_u16();
    std::vector<Bytes> nodes;
    nodes.reserve(n);
    for (uint16_t i = 0; i < n; ++i) nodes.push_back(r.field());
    return nodes;
}

}  // namespace detail

inline Bytes encode(const InclusionProof& p) {
    ByteWriter w;
    w.raw_u8(static_cast<uint8_t>(p.kind));
    w.raw_u8(kInclusion);
    w.raw(p.key.view());
    w.raw(p.value_digest.view());
    w.raw(p.root.digest.view());
    w.raw_u64(p.root.version);
    if (p.kind == StructureKind::jmt)
        detail::put_steps(w, p.steps);
    else
        detail::put_nodes(w, p.nodes);
    return w.take();
}

inline Bytes encode(const ExclusionProof& p) {
    ByteWriter w;
    w.raw_u8(static_cast<uint8_t>(p.kind));
    w.raw_u8(kExclusion);
    w.raw(p.key.view());
    w.raw(p.root.digest.view());
    w.raw_u64(p.root.version);
    if (p.kind == StructureKind::jmt) {
        w.raw_u8(p.divergent_leaf ? 1 : 0);
        if (p.divergent_leaf) {
            w.raw(p.divergent_leaf->key.view());
            w.raw(p.divergent_leaf->value_hash.view());
        }
        detail::put_steps(w, p.steps);
    } else {
        detail::put_nodes(w, p.nodes);
    }
    return w.take();
}

inline InclusionProof decode_inclusion(ByteView raw) {
    ByteReader r(raw);
    InclusionProof p;
    uint8_t kind = r.raw_u8();
    if (kind != 0x01 && kind != 0x02) throw CodecError("bad structure kind");
    if (r.raw_u8() != kInclusion) throw CodecError("not an inclusion proof");
    p.kind = static_cast<StructureKind>(kind);
    p.key = TrieKey::from_bytes(r.raw(32));
    p.value_digest = Digest::from_bytes(r.raw(32));
    p.root.kind = p.kind;
    p.root.digest = Digest::from_bytes(r.raw(32));
    p.root.version = r.raw_u64();
    if (p.kind == StructureKind::jmt)
        p.steps = detail::get_steps(r);
    else
        p.nodes = detail::get_nodes(r);
    r.expect_done();
    return p;
}

inline ExclusionProof decode_exclusion(ByteView raw) {
    ByteReader r(raw);
    ExclusionProof p;
    uint8_t kind = r.raw_u8();
    if (kind != 0x01 && kind != 0x02) throw CodecError("bad structure kind");
    if (r.raw_u8() != kExclusion) throw CodecError("not an exclusion proof");
    p.kind = static_cast<StructureKind>(kind);
    p.key = TrieKey::from_bytes(r.raw(32));
    p.root.kind = p.kind;
    p.root.digest = Digest::from_bytes(r.raw(32));
    p.root.version = r.raw_u64();
    if (p.kind == StructureKind::jmt) {
        uint8_t has_leaf = r.raw_u8();
        if (has_leaf > 1) throw CodecError("non-canonical leaf flag");
        if (has_leaf) {
            JmtDivergentLeaf leaf;
            leaf.key = TrieKey::from_bytes(r.raw(32));
            leaf.value_hash = Digest::from_bytes(r.raw(32));
            p.divergent_leaf = leaf;
        }
        p.steps = detail::get_steps(r);
    } else {
        p.nodes = detail::get_nodes(r);
    }
    r.expect_done();
    return p;
}

}  // namespace proofwire

}  // namespace sark
