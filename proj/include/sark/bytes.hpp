// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sark {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

struct CodecError : std::runtime_error {
    explicit CodecError(const std::string& what) : std::runtime_error(what) {}
};

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
    return std::string(b.begin(), b.end());
}

inline std::string to_hex(ByteView b) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (uint8_t c : b) {
        out.push_back(kDigits[c >> 4]);
        out.push_back(kDigits[c & 0x0f]);
    }
    return out;
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline Bytes from_hex(std::string_view s) {
    if (s.size() % 2 != 0) throw CodecError("hex string has odd length");
    Bytes out;
    out.reserve(s.size() / 2);
    for (size_t i = 0; i < s.size(); i += 2) {
        int hi = hex_nibble(s[i]);
        int lo = hex_nibble(s[i + 1]);
        if (hi < 0 || lo < 0) throw CodecError("invalid hex digit");
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
}

inline void put_u32_be(Bytes& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void put_u64_be(Bytes& out, uint64_t v) {
    put_u32_be(out, static_cast<uint32_t>(v >> 32));
    put_u32_be(out, static_cast<uint32_t>(v));
}

inline Bytes u64_be(uint64_t v) {
    Bytes out;
    out.reserve(8);
    put_u64_be(out, v);
    return out;
}

// Canonical field encoding: every field is prefixed by a 4-byte big-endian
// length, fixed-width integers are encoded big-endian inside their field.
// The encoding is injective as long as writers agree on field order.
class ByteWriter {
  public:
    void field(ByteView b) {
        if (b.size() > 0xffffffffull) throw CodecError("field too large");
        put_u32_be(buf_, static_cast<uint32_t>(b.size()));
        buf_.insert(buf_.end(), b.begin(), b.end());
    }
    void field(const Bytes& b) { field(ByteView(b)); }
    void field_str(std::string_view s) { field(ByteView(reinterpret_cast<const uint8_t*>(s.data()), s.size())); }
    void field_u64(uint64_t v) { field(u64_be(v)); }
    void raw(ByteView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void raw_u8(uint8_t v) { buf_.push_back(v); }
    void raw_u16(uint16_t v) {
        buf_.push_back(static_cast<uint8_t>(v >> 8));
        buf_.push_back(static_cast<uint8_t>(v));
    }
    void raw_u32(uint32_t v) { put_u32_be(buf_, v); }
    void raw_u64(uint64_t v) { put_u64_be(buf_, v); }

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }

  private:
    Bytes buf_;
};

class ByteReader {
  public:
    explicit ByteReader(ByteView b) : data_(b) {}

    Bytes field() {
        uint32_t n = raw_u32();
        return raw(n);
    }
    std::string field_str() {
        Bytes b = field();
        return std::string(b.begin(), b.end());
    }
    uint64_t field_u64() {
        Bytes b = field();
        if (b.size() != 8) throw CodecError("expected 8-byte integer field");
        uint64_t v = 0;
        for (uint8_t c : b) v = (v << 8) | c;
        return v;
    }
    uint8_t raw_u8() {
        need(1);
        return data_[pos_++];
    }
    uint16_t raw_u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    uint32_t raw_u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }
    uint64_t raw_u64() {
        uint64_t hi = raw_u32();
        return (hi << 32) | raw_u32();
    }
    Bytes raw(size_t n) {
        need(n);
        Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }
    bool done() const { return pos_ == data_.size(); }
    size_t remaining() const { return data_.size() - pos_; }
    void expect_done() const {
        if (!done()) throw CodecError("trailing bytes after decode");
    }

  private:
    void need(size_t n) const {
        if (pos_ + n > data_.size()) throw CodecError("truncated input");
    }

    ByteView data_;
    size_t pos_ = 0;
};

}  // namespace sark
