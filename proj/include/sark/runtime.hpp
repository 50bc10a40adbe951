// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <nlohmann/json.hpp>

#include "sark/bytes.hpp"

namespace sark {

using Json = nlohmann::json;
using TimeMs = int64_t;

struct Envelope {
    std::string to;
    Bytes payload;  // one encoded JSON message
};

class Outbox {
  public:
    void send(const std::string& to, const Json& msg) {
        std::string s = msg.dump();
        out_.push_back({to, Bytes(s.begin(), s.end())});
    }
    std::vector<Envelope> take() { return std::move(out_); }
    bool empty() const { return out_.empty(); }

  private:
    std::vector<Envelope> out_;
};

// Deterministic event-driven state machine. The same actors run under the
// simulator's virtual clock and the socket transport's wall clock; all i/o
// happens through the outbox.
class Actor {
  public:
    virtual ~Actor() = default;
    virtual const std::string& id() const = 0;
    virtual void on_start(TimeMs now, Outbox& out) { (void)now, (void)out; }
    virtual void on_message(const std::string& from, const Bytes& payload, TimeMs now, Outbox& out) = 0;
    virtual void on_timer(TimeMs now, Outbox& out) { (void)now, (void)out; }
    virtual std::optional<TimeMs> next_deadline() const { return std::nullopt; }
};

inline std::optional<Json> parse_message(const Bytes& payload) {
    Json j = Json::parse(payload.begin(), payload.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("type")) return std::nullopt;
    return j;
}

inline Bytes json_hex(const Json& j, const char* field) { return from_hex(j.at(field).get<std::string>()); }

}  // namespace sark
