// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>

#include "sark/bytes.hpp"

namespace sark {

struct StoreError : std::runtime_error {
    explicit StoreError(const std::string& what) : std::runtime_error(what) {}
};

// Byte key-value backend. Iteration order is key order so every consumer is
// deterministic regardless of backend choice.
class KvBackend {
  public:
    virtual ~KvBackend() = default;
    virtual std::optional<Bytes> get(const Bytes& key) const = 0;
    virtual void put(const Bytes& key, const Bytes& value) = 0;
    virtual void del(const Bytes& key) = 0;
    virtual void iterate_prefix(const Bytes& prefix,
                                const std::function<bool(const Bytes&, const Bytes&)>& fn) const = 0;
    virtual void sync() {}
};

class MemoryBackend : public KvBackend {
  public:
    std::optional<Bytes> get(const Bytes& key) const override {
        auto it = map_.find(key);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }
    void put(const Bytes& key, const Bytes& value) override { map_[key] = value; }
    void del(const Bytes& key) override { map_.erase(key); }
    void iterate_prefix(const Bytes& prefix,
                        const std::function<bool(const Bytes&, const Bytes&)>& fn) const override {
        for (auto it = map_.lower_bound(prefix); it != map_.end(); ++it) {
            const Bytes& k = it->first;
            if (k.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), k.begin())) break;
            if (!fn(k, it->second)) break;
        }
    }

  private:
    std::map<Bytes, Bytes> map_;
};

// Append-only record log with an in-memory index rebuilt on open. Records:
// op byte (1 put, 2 del), u32 key length, u32 value length, key, value.
class FileBackend : public KvBackend {
  public:
    explicit FileBackend(const std::filesystem::path& path) : path_(path) {
        if (std::filesystem::exists(path_)) replay();
        file_ = std::fopen(path_.string().c_str(), "ab");
        if (!file_) throw StoreError("cannot open backend log: " + path_.string());
    }
    ~FileBackend() override {
        if (file_) std::fclose(file_);
    }
    FileBackend(const FileBackend&) = delete;
    FileBackend& operator=(const FileBackend&) = delete;

    std::optional<Bytes> get(const Bytes& key) const override {
        auto it = map_.find(key);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }
    void put(const Bytes& key, const Bytes& value) override {
        append(1, key, value);
        map_[key] = value;
    }
    void del(const Bytes& key) override {
        append(2, key, {});
        map_.erase(key);
    }
    void iterate_prefix(const Bytes& prefix,
                        const std::function<bool(const Bytes&, const Bytes&)>& fn) const override {
        for (auto it = map_.lower_bound(prefix); it != map_.end(); ++it) {
            const Bytes& k = it->first;
            if (k.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), k.begin())) break;
            if (!fn(k, it->second)) break;
        }
    }
    void sync() override {
        if (file_) std::fflush(file_);
    }

  private:
    void append(uint8_t op, const Bytes& key, const Bytes& value) {
        Bytes rec;
        rec.reserve(9 + key.size() + value.size());
        rec.push_back(op);
        put_u32_be(rec, static_cast<uint32_t>(key.size()));
        put_u32_be(rec, static_cast<uint32_t>(value.size()));
        rec.insert(rec.end(), key.begin(), key.end());
        rec.insert(rec.end(), value.begin(), value.end());
        if (std::fwrite(rec.data(), 1, rec.size(), file_) != rec.size())
            throw StoreError("backend log write failed");
    }

    void replay() {
        std::FILE* f = std::fopen(path_.string().c_str(), "rb");
        if (!f) return;
        for (;;) {
            uint8_t hdr[9];
            if (std::fread(hdr, 1, 9, f) != 9) break;  // torn tail records are dropped
            uint32_t klen = (hdr[1] << 24) | (hdr[2] << 16) | (hdr[3] << 8) | hdr[4];
            uint32_t vlen = (hdr[5] << 24) | (hdr[6] << 16) | (hdr[7] << 8) | hdr[8];
            Bytes key(klen), value(vlen);
            if (std::fread(key.data(), 1, klen, f) != klen) break;
            if (std::fread(value.data(), 1, vlen, f) != vlen) break;
            if (hdr[0] == 1)
                map_[key] = value;
            else
                map_.erase(key);
        }
        std::fclose(f);
    }

    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
    std::map<Bytes, Bytes> map_;
};

// Namespacing adapter so several stores can share one physical backend.
class PrefixedBackend : public KvBackend {
  public:
    PrefixedBackend(KvBackend& inner, Bytes prefix) : inner_(inner), prefix_(std::move(prefix)) {}

    std::optional<Bytes> get(const Bytes& key) const override { return inner_.get(wrap(key)); }
    void put(const Bytes& key, const Bytes& value) override { inner_.put(wrap(key), value); }
    void del(const Bytes& key) override { inner_.del(wrap(key)); }
    void iterate_prefix(const Bytes& prefix,
                        const std::function<bool(const Bytes&, const Bytes&)>& fn) const override {
        inner_.iterate_prefix(wrap(prefix), [&](const Bytes& k, const Bytes& v) {
            return fn(Bytes(k.begin() + static_cast<long>(prefix_.size()), k.end()), v);
        });
    }
    void sync() override { inner_.sync(); }

  private:
    Bytes wrap(const Bytes& key) const {
        Bytes k = prefix_;
        k.insert(k.end(), key.begin(), key.end());
        return k;
    }

    KvBackend& inner_;
    Bytes prefix_;
};

}  // namespace sark
