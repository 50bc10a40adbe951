// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <deque>
#include <queue>

#include "sark/porter.hpp"
#include "sark/sloop.hpp"

namespace sark::sim {

// One fault-schedule action. Either fires at an absolute virtual time or
// `delay_ms` after the `occurrence`-th hook event named by `on`
// ("proposal_broadcast" | "block_applied" | "leader_elected"). The target is
// a node id or a role ("leader" / "follower") resolved when the action fires.
struct FaultAction {
    std::optional<TimeMs> at;
    std::string on;
    int occurrence = 1;
    TimeMs delay_ms = 0;
    std::string target;
    std::string action;  // crash | recover | partition | heal
    std::vector<std::vector<std::string>> groups;  // partition groups

    Json to_json() const {
        Json j{{"action", action}, {"target", target}};
        if (at) j["at"] = *at;
        if (!on.empty()) {
            j["on"] = on;
            j["occurrence"] = occurrence;
            j["delay_ms"] = delay_ms;
        }
        if (!groups.empty()) j["groups"] = groups;
        return j;
    }
    static FaultAction from_json(const Json& j) {
        FaultAction f;
        if (j.contains("at")) f.at = j.at("at").get<TimeMs>();
        f.on = j.value("on", "");
        f.occurrence = j.value("occurrence", 1);
        f.delay_ms = j.value("delay_ms", static_cast<TimeMs>(0));
        f.target = j.value("target", "");
        f.action = j.at("action").get<std::string>();
        if (j.contains("groups")) f.groups = j.at("groups").get<std::vector<std::vector<std::string>>>();
        return f;
    }
};

struct ClientScript {
    std::string id;
    int transfers = 0;
    std::vector<std::string> next_venues;  // porter designated after each transfer
    TimeMs start_ms = 100;
    TimeMs poll_ms = 50;
};

struct SimConfig {
    std::string scenario = "custom";
    uint64_t seed = 1;
    TimeMs duration_ms = 20000;
    TimeMs delay_min_ms = 1;
    TimeMs delay_max_ms = 10;

    std::vector<std::string> sloop_nodes = {"n1", "n2", "n3"};
    std::vector<std::pair<std::string, std::string>> porters = {{"PA", "n1"}, {"PB", "n2"}};
    std::vector<ClientScript> clients;
    std::vector<FaultAction> faults;
    bool equivocator = false;
    TimeMs equivocate_at_ms = 1500;

    TimeMs heartbeat_ms = 100;   // T_h
    TimeMs block_ms = 2000;      // T_b
    TimeMs commit_ms = 500;      // T_c
    TimeMs election_min_ms = 300;
    TimeMs election_max_ms = 600;
    TimeMs porter_window_ms = 2000;
    StructureKind porter_kind = StructureKind::jmt;

    Json to_json() const {
        Json j{{"scenario", scenario},
               {"seed", seed},
               {"duration_ms", duration_ms},
               {"delay_min_ms", delay_min_ms},
               {"delay_max_ms", delay_max_ms},
               {"sloop_nodes", sloop_nodes},
               {"heartbeat_ms", heartbeat_ms},
               {"block_ms", block_ms},
               {"commit_ms", commit_ms},
               {"election_min_ms", election_min_ms},
               {"election_max_ms", election_max_ms},
               {"porter_window_ms", porter_window_ms},
               {"porter_kind", kind_name(porter_kind)},
               {"equivocator", equivocator},
               {"equivocate_at_ms", equivocate_at_ms}};
        j["porters"] = Json::array();
        for (const auto& [p, n] : porters) j["porters"].push_back(Json{{"id", p}, {"node", n}});
        j["clients"] = Json::array();
        for (const auto& c : clients)
            j["clients"].push_back(Json{{"id", c.id},
                                        {"transfers", c.transfers},
                                        {"next_venues", c.next_venues},
                                        {"start_ms", c.start_ms},
                                        {"poll_ms", c.poll_ms}});
        j["faults"] = Json::array();
        for (const auto& f : faults) j["faults"].push_back(f.to_json());
        return j;
    }

    static SimConfig from_json(const Json& j) {
        SimConfig c;
        c.scenario = j.value("scenario", "custom");
        c.seed = j.value("seed", 1ull);
        c.duration_ms = j.value("duration_ms", static_cast<TimeMs>(20000));
        c.delay_min_ms = j.value("delay_min_ms", static_cast<TimeMs>(1));
        c.delay_max_ms = j.value("delay_max_ms", static_cast<TimeMs>(10));
        if (j.contains("sloop_nodes")) c.sloop_nodes = j.at("sloop_nodes").get<std::vector<std::string>>();
        if (j.contains("porters")) {
            c.porters.clear();
            for (const auto& p : j.at("porters"))
                c.porters.emplace_back(p.at("id").get<std::string>(), p.at("node").get<std::string>());
        }
        if (j.contains("clients")) {
            for (const auto& cj : j.at("clients")) {
                ClientScript s;
                s.id = cj.at("id").get<std::string>();
                s.transfers = cj.value("transfers", 0);
                if (cj.contains("next_venues"))
                    s.next_venues = cj.at("next_venues").get<std::vector<std::string>>();
                s.start_ms = cj.value("start_ms", static_cast<TimeMs>(100));
                s.poll_ms = cj.value("poll_ms", static_cast<TimeMs>(50));
                c.clients.push_back(s);
            }
        }
        if (j.contains("faults"))
            for (const auto& fj : j.at("faults")) c.faults.push_back(FaultAction::from_json(fj));
        c.equivocator = j.value("equivocator", false);
        c.equivocate_at_ms = j.value("equivocate_at_ms", static_cast<TimeMs>(1500));
        c.heartbeat_ms = j.value("heartbeat_ms", static_cast<TimeMs>(100));
        c.block_ms = j.value("block_ms", static_cast<TimeMs>(2000));
        c.commit_ms = j.value("commit_ms", static_cast<TimeMs>(500));
        c.election_min_ms = j.value("election_min_ms", static_cast<TimeMs>(300));
        c.election_max_ms = j.value("election_max_ms", static_cast<TimeMs>(600));
        c.porter_window_ms = j.value("porter_window_ms", static_cast<TimeMs>(2000));
        c.porter_kind = j.value("porter_kind", std::string("jmt")) == "mpt" ? StructureKind::mpt
                                                                            : StructureKind::jmt;
        return c;
    }
};

// Deterministic issuer shared by simulated clients; traces must be a pure
// function of the config, so the key derives from a fixed seed.
inline blind::LocalIssuer& sim_issuer() {
    static blind::LocalIssuer issuer(blind::issuer_keygen(Bytes(kSeedSize, 0x5a)));
    return issuer;
}

// Scripted wallet: mints one asset, then chains transfers through the
// configured venues, polling for receipts, retrying through crashes.
class ClientActor : public Actor {
  public:
    ClientActor(ClientScript script, std::string ledger_id, uint64_t seed)
        : script_(std::move(script)), ledger_id_(std::move(ledger_id)), rng_(seed) {
        deadline_ = script_.start_ms;
    }

    const std::string& id() const override { return script_.id; }

    enum class Step { waiting, submitting, claiming, done, failed };
    Step step() const { return step_; }
    const Asset& asset() const { return asset_.value(); }
    bool finished() const { return step_ == Step::done; }
    int transfers_completed() const { return completed_; }
    TimeMs finished_at() const { return finished_at_; }
    const std::string& failure() const { return failure_; }

    void on_message(const std::string& from, const Bytes& payload, TimeMs now, Outbox& out) override {
        (void)from;
        auto parsed = parse_message(payload);
        if (!parsed) return;
        const Json& j = *parsed;
        const std::string type = j.at("type").get<std::string>();
        if (type == "submit_ack") {
            if (step_ != Step::submitting) return;
            if (j.at("ok").get<bool>()) {
                note_latest(venue(), j);
                step_ = Step::claiming;
                send_claim(now, out);
            } else {
                const std::string reason = j.value("reason", "");
                if (reason == "key already spent") {
                    // an earlier copy of this submission landed; proceed to claim
                    step_ = Step::claiming;
                    send_claim(now, out);
                } else {
                    fail("porter rejected submission: " + reason, now);
                }
            }
        } else if (type == "claim_ack") {
            if (step_ != Step::claiming) return;
            note_latest(venue(), j);
            if (!j.at("ok").get<bool>()) {
                // a porter crash before sealing loses the pending submission;
                // re-registering the same update is safe
                if (j.value("reason", "") == "unknown key") {
                    step_ = Step::submitting;
                    send_submit(now, out);
                }
                return;  // otherwise pending; poll again on timer
            }
            PorterReceipt receipt = PorterReceipt::from_json(j.at("receipt"));
            try {
                asset_ = append_update(*asset_, pending_update_.value(), receipt.to_pop_entry());
            } catch (const std::exception& e) {
                fail(std::string("receipt rejected: ") + e.what(), now);
                return;
            }
            owners_.push_back(next_owner_.value());
            ++completed_;
            if (completed_ >= script_.transfers) {
                step_ = Step::done;
                finished_at_ = now;
                deadline_.reset();
            } else {
                begin_transfer(now, out);
            }
        }
    }

    void on_timer(TimeMs now, Outbox& out) override {
        switch (step_) {
            case Step::waiting:
                start(now, out);
                break;
            case Step::submitting:
                send_submit(now, out);  // resend until acked
                break;
            case Step::claiming:
                send_claim(now, out);
                break;
            default:
                deadline_.reset();
                break;
        }
    }

    std::optional<TimeMs> next_deadline() const override { return deadline_; }

  private:
    void start(TimeMs now, Outbox& out) {
        KeyPair first = keygen(seed_bytes());
        owners_.push_back(first);
        const std::string first_venue = script_.next_venues.empty() ? "PA" : script_.next_venues.front();
        auto vec = make_genesis_vector(to_bytes("asset of " + script_.id),
                                       AnchorRef{ledger_id_, first_venue, 0}, first.public_key);
        asset_ = mint(vec, sim_issuer());
        if (script_.transfers == 0) {
            step_ = Step::done;
            finished_at_ = now;
            deadline_.reset();
            return;
        }
        begin_transfer(now, out);
    }

    void begin_transfer(TimeMs now, Outbox& out) {
        next_owner_ = keygen(seed_bytes());
        const std::string next_venue = completed_ + 1 < static_cast<int>(script_.next_venues.size())
                                           ? script_.next_venues[completed_ + 1]
                                           : script_.next_venues.back();
        uint64_t baseline = 0;
        auto known = latest_sealed_.find(next_venue);
        if (known != latest_sealed_.end() && known->second >= 0)
            baseline = static_cast<uint64_t>(known->second);
        AnchorRef next_anchor{ledger_id_, next_venue, baseline};
        pending_update_ = make_transfer(*asset_, owners_.back().secret_key,
                                        next_owner_->public_key, to_bytes("hop"), next_anchor);
        step_ = Step::submitting;
        send_submit(now, out);
    }

    void send_submit(TimeMs now, Outbox& out) {
        Submission s;
        s.owner_key = owners_.back().public_key;
        s.signature = pending_update_->signature;
        s.vector = pending_update_->vector;
        s.designation = asset_->head().vector.anchor;
        out.send(s.designation.porter_id, s.to_json());
        deadline_ = now + script_.poll_ms * 4;
    }

    void send_claim(TimeMs now, Outbox& out) {
        const AnchorRef& designation = asset_->head().vector.anchor;
        out.send(designation.porter_id, Json{{"type", "claim"},
                                             {"owner_key", to_hex(owners_.back().public_key)},
                                             {"since", designation.root_index}});
        deadline_ = now + script_.poll_ms;
    }

    const std::string& venue() const { return asset_->head().vector.anchor.porter_id; }

    void note_latest(const std::string& porter, const Json& j) {
        if (j.contains("latest_sealed") && j.at("latest_sealed").is_number_integer())
            latest_sealed_[porter] =
                std::max(latest_sealed_[porter], j.at("latest_sealed").get<int64_t>());
    }

    void fail(const std::string& why, TimeMs now) {
        step_ = Step::failed;
        failure_ = why;
        finished_at_ = now;
        deadline_.reset();
    }

    Bytes seed_bytes() {
        Bytes s(kSeedSize);
        for (auto& b : s) b = static_cast<uint8_t>(rng_());
        return s;
    }

    ClientScript script_;
    std::string ledger_id_;
    std::mt19937_64 rng_;
    Step step_ = Step::waiting;
    std::optional<Asset> asset_;
    std::deque<KeyPair> owners_;
    std::optional<KeyPair> next_owner_;
    std::optional<Update> pending_update_;
    std::map<std::string, int64_t> latest_sealed_;
    int completed_ = 0;
    std::optional<TimeMs> deadline_;
    TimeMs finished_at_ = 0;
    std::string failure_;
};

// Registered porter that deliberately reports conflicting roots for the same
// version to different nodes. Used to validate non-equivocation detection.
class EquivocatorActor : public Actor {
  public:
    EquivocatorActor(std::string actor_id, KeyPair kp, std::vector<std::string> nodes, TimeMs at)
        : id_(std::move(actor_id)), kp_(std::move(kp)), nodes_(std::move(nodes)), at_(at) {}

    const std::string& id() const override { return id_; }
    const Bytes& public_key() const { return kp_.public_key; }

    void on_message(const std::string&, const Bytes&, TimeMs, Outbox&) override {}

    void on_timer(TimeMs now, Outbox& out) override {
        if (fired_) return;
        fired_ = true;
        for (size_t i = 0; i < nodes_.size() && i < 2; ++i) {
            RootRecord rec{0, sha256(to_bytes("conflict-" + std::to_string(i))), Digest{}};
            Signature sig = sign(kp_.secret_key, signing_digest(DomainTag::porter_root, rec.encode()));
            out.send(nodes_[i], Json{{"type", "root_entry"},
                                     {"from", id_},
                                     {"porter", id_},
                                     {"key", to_hex(kp_.public_key)},
                                     {"record", to_hex(rec.encode())},
                                     {"sig", to_hex(sig)},
                                     {"relay", false}});
        }
        (void)now;
    }

    std::optional<TimeMs> next_deadline() const override {
        if (fired_) return std::nullopt;
        return at_;
    }

  private:
    std::string id_;
    KeyPair kp_;
    std::vector<std::string> nodes_;
    TimeMs at_;
    bool fired_ = false;
};

struct FinalityRecord {
    uint64_t height = 0;
    TimeMs period_start = 0;
    TimeMs proposal_time = 0;
    TimeMs commit_time = 0;
    int failures = 0;                       // leader crashes during the attempt
    std::vector<TimeMs> election_durations;
    TimeMs finality_ms() const { return commit_time - period_start; }
    TimeMs delta_ms() const {
        TimeMs sum = 0;
        for (TimeMs d : election_durations) sum += d;
        return sum;
    }
};

struct MessageStats {
    uint64_t sent = 0;
    uint64_t delivered = 0;
    uint64_t dropped_partition = 0;
    uint64_t dropped_crash = 0;
    uint64_t pending_at_end = 0;
};

struct ClientOutcome {
    bool finished = false;
    int transfers_completed = 0;
    TimeMs finished_at = 0;
    bool verified = false;
    std::string detail;
};

struct SimResult {
    SimConfig config;
    std::vector<std::string> trace;
    MessageStats messages;
    std::vector<FinalityRecord> finality;
    std::vector<std::string> incidents;
    std::vector<std::string> errors;  // invariant violations and failures
    int elections_held = 0;
    TimeMs first_leader_at = -1;
    TimeMs end_time = 0;
    std::map<std::string, std::vector<LedgerBlock>> ledgers;          // node -> chain
    std::map<std::string, std::vector<RootRecord>> porter_records;    // porter -> sealed
    std::map<std::string, ClientOutcome> clients;
    // every entry carried by a first-attempt proposal broadcast
    std::vector<std::pair<std::string, uint64_t>> proposed_entries;   // (porter, version)
    std::map<std::string, std::map<uint64_t, Digest>> committed_roots;  // porter -> version -> root
};

// Ledger view over a finished node's chain, for post-run asset verification.
class NodeLedgerView : public LedgerView {
  public:
    NodeLedgerView(std::string ledger_id, const std::vector<LedgerBlock>& blocks,
                   std::map<std::string, Bytes> porter_keys)
        : ledger_id_(std::move(ledger_id)), blocks_(blocks), porter_keys_(std::move(porter_keys)) {}

    std::string ledger_id() const override { return ledger_id_; }
    std::optional<Digest> root_at(uint64_t height) const override {
        if (height >= blocks_.size()) return std::nullopt;
        return blocks_[height].root;
    }
    std::optional<Bytes> porter_key(const std::string& porter_id) const override {
        auto it = porter_keys_.find(porter_id);
        if (it == porter_keys_.end()) return std::nullopt;
        return it->second;
    }

  private:
    std::string ledger_id_;
    const std::vector<LedgerBlock>& blocks_;
    std::map<std::string, Bytes> porter_keys_;
};

class Simulation {
  public:
    explicit Simulation(SimConfig config) : config_(std::move(config)), rng_(config_.seed) {}

    SimResult run() {
        build();
        for (auto& [aid, actor] : actors_) {
            Outbox out;
            actor->on_start(0, out);
            dispatch(aid, out, 0);
            reschedule_timer(aid, 0);
        }
        for (size_t i = 0; i < config_.faults.size(); ++i)
            if (config_.faults[i].at) push_event(Event::fault(*config_.faults[i].at, next_seq(), i));

        while (!queue_.empty()) {
            Event ev = queue_.top();
            queue_.pop();
            if (ev.at > config_.duration_ms) break;
            now_ = ev.at;
            switch (ev.kind) {
                case Event::Kind::deliver:
                    deliver(ev);
                    break;
                case Event::Kind::timer:
                    fire_timer(ev);
                    break;
                case Event::Kind::fault:
                    apply_fault(config_.faults[ev.fault_index]);
                    break;
            }
            drain_hook_faults();
        }
        result_.end_time = now_;
        finalize();
        return std::move(result_);
    }

  private:
    struct Event {
        enum class Kind { deliver, timer, fault };
        TimeMs at = 0;
        uint64_t seq = 0;
        Kind kind = Kind::deliver;
        std::string from, to;
        Bytes payload;
        uint64_t timer_gen = 0;
        size_t fault_index = 0;

        static Event deliver_ev(TimeMs at, uint64_t seq, std::string from, std::string to, Bytes p) {
            Event e;
            e.at = at, e.seq = seq, e.kind = Kind::deliver;
            e.from = std::move(from), e.to = std::move(to), e.payload = std::move(p);
            return e;
        }
        static Event timer_ev(TimeMs at, uint64_t seq, std::string actor, uint64_t gen) {
            Event e;
            e.at = at, e.seq = seq, e.kind = Kind::timer;
            e.to = std::move(actor), e.timer_gen = gen;
            return e;
        }
        static Event fault(TimeMs at, uint64_t seq, size_t index) {
            Event e;
            e.at = at, e.seq = seq, e.kind = Kind::fault;
            e.fault_index = index;
            return e;
        }
        bool operator>(const Event& other) const {
            return at != other.at ? at > other.at : seq > other.seq;
        }
    };

    uint64_t next_seq() { return seq_++; }
    void push_event(Event e) { queue_.push(std::move(e)); }

    // ---- construction / recovery ----

    void build() {
        result_.config = config_;
        for (const auto& n : config_.sloop_nodes) {
            backends_[n] = std::make_unique<MemoryBackend>();
            node_keys_[n] = keygen(derive_seed("node:" + n)).public_key;
        }
        for (const auto& [p, n] : config_.porters) {
            backends_[p] = std::make_unique<MemoryBackend>();
            porter_keys_[p] = keygen(derive_seed("porter:" + p)).public_key;
        }
        if (config_.equivocator) porter_keys_["PE"] = keygen(derive_seed("porter:PE")).public_key;

        for (const auto& n : config_.sloop_nodes) spawn_node(n, 0);
        for (const auto& [p, n] : config_.porters) spawn_porter(p, n, 0);
        for (const auto& c : config_.clients)
            actors_[c.id] = std::make_unique<ClientActor>(c, "L1", derive_u64("client:" + c.id));
        if (config_.equivocator) {
            auto kp = keygen(derive_seed("porter:PE"));
            actors_["PE"] = std::make_unique<EquivocatorActor>("PE", kp, config_.sloop_nodes,
                                                               config_.equivocate_at_ms);
        }
    }

    Bytes derive_seed(const std::string& label) {
        Bytes b = u64_be(config_.seed);
        Bytes l = to_bytes(label);
        b.insert(b.end(), l.begin(), l.end());
        return sha256(b).to_bytes();
    }
    uint64_t derive_u64(const std::string& label) {
        Bytes s = derive_seed(label);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | s[i];
        return v;
    }

    void spawn_node(const std::string& n, TimeMs now) {
        SloopConfig sc;
        sc.node_id = n;
        for (const auto& other : config_.sloop_nodes)
            if (other != n) sc.peers.push_back(other);
        sc.node_keys = node_keys_;
        sc.porter_keys = porter_keys_;
        sc.keypair = keygen(derive_seed("node:" + n));
        for (const auto& [p, paired] : config_.porters)
            if (paired == n) sc.porter_id = p;
        sc.heartbeat_ms = config_.heartbeat_ms;
        sc.block_ms = config_.block_ms;
        sc.commit_ms = config_.commit_ms;
        sc.election_min_ms = config_.election_min_ms;
        sc.election_max_ms = config_.election_max_ms;
        sc.rng_seed = derive_u64("raft:" + n) ^ static_cast<uint64_t>(now + 1);
        auto node = std::make_unique<SloopNode>(std::move(sc), *backends_[n], now);
        wire_hooks(*node, n);
        actors_[n] = std::move(node);
    }

    void spawn_porter(const std::string& p, const std::string& node, TimeMs now) {
        PorterConfig pc;
        pc.porter_id = p;
        pc.keypair = keygen(derive_seed("porter:" + p));
        pc.window_ms = config_.porter_window_ms;
        pc.kind = config_.porter_kind;
        pc.validator_id = node;
        actors_[p] = std::make_unique<Porter>(std::move(pc), *backends_[p], now);
    }

    void wire_hooks(SloopNode& node, const std::string& n) {
        node.hooks.on_apply = [this, n](uint64_t height, const LedgerBlock& block, TimeMs now) {
            auto& first = first_apply_;
            if (!first.count(height)) {
                first[height] = now;
                hook_events_.push_back({"block_applied", now});
            }
            (void)block;
            (void)n;
        };
        node.hooks.on_incident = [this](const std::string& what) {
            result_.incidents.push_back("t=" + std::to_string(now_) + " " + what);
        };
        node.hooks.on_leader_elected = [this](uint64_t term, const std::string& leader, TimeMs now) {
            ++result_.elections_held;
            if (result_.first_leader_at < 0) result_.first_leader_at = now;
            if (election_open_) {
                elections_.push_back({election_started_at_, now});
                election_open_ = false;
            }
            trace("leader term=" + std::to_string(term) + " " + leader);
            hook_events_.push_back({"leader_elected", now});
        };
        node.hooks.on_proposal_broadcast = [this](uint64_t height, TimeMs now, bool rebroadcast) {
            if (!proposal_first_.count(height)) proposal_first_[height] = now;
            trace("proposal h=" + std::to_string(height) + (rebroadcast ? " rebroadcast" : ""));
            hook_events_.push_back({"proposal_broadcast", now});
        };
    }

    // ---- event processing ----

    bool crashed(const std::string& a) const { return crashed_.count(a) != 0; }

    bool blocked(const std::string& a, const std::string& b) const {
        if (partition_.empty()) return false;
        auto ga = partition_.find(a);
        auto gb = partition_.find(b);
        // actors not named in any group communicate with everyone
        if (ga == partition_.end() || gb == partition_.end()) return false;
        return ga->second != gb->second;
    }

    void deliver(Event& ev) {
        if (crashed(ev.to) || !actors_.count(ev.to)) {
            ++result_.messages.dropped_crash;
            return;
        }
        if (blocked(ev.from, ev.to)) {
            ++result_.messages.dropped_partition;
            return;
        }
        ++result_.messages.delivered;
        trace_payload(ev.from, ev.to, ev.payload);
        Outbox out;
        current_actor_ = ev.to;
        actors_[ev.to]->on_message(ev.from, ev.payload, now_, out);
        dispatch(ev.to, out, now_);
        reschedule_timer(ev.to, now_);
    }

    void fire_timer(Event& ev) {
        auto gen = timer_gen_.find(ev.to);
        if (gen == timer_gen_.end() || gen->second != ev.timer_gen) return;  // stale
        if (crashed(ev.to) || !actors_.count(ev.to)) return;
        Outbox out;
        current_actor_ = ev.to;
        actors_[ev.to]->on_timer(now_, out);
        dispatch(ev.to, out, now_);
        reschedule_timer(ev.to, now_);
    }

    void dispatch(const std::string& from, Outbox& out, TimeMs now) {
        for (auto& env : out.take()) {
            ++result_.messages.sent;
            // track first-attempt proposal contents for loss accounting
            if (auto j = parse_message(env.payload)) {
                if (j->at("type") == "block_proposal")
                    for (const auto& e : j->at("entries"))
                        result_.proposed_entries.emplace_back(e.at("porter").get<std::string>(),
                                                              RootRecord::decode(json_hex(e, "record")).version);
                if (j->at("type") == "request_vote" && !election_open_) {
                    election_open_ = true;
                    election_started_at_ = now;
                }
            }
            TimeMs delay = config_.delay_min_ms +
                           static_cast<TimeMs>(rng_() % static_cast<uint64_t>(
                                                   config_.delay_max_ms - config_.delay_min_ms + 1));
            push_event(Event::deliver_ev(now + delay, next_seq(), from, env.to, std::move(env.payload)));
        }
    }

    void reschedule_timer(const std::string& aid, TimeMs now) {
        if (!actors_.count(aid) || crashed(aid)) return;
        auto nd = actors_[aid]->next_deadline();
        if (!nd) return;
        TimeMs at = std::max(*nd, now);
        uint64_t gen = ++timer_gen_[aid];
        push_event(Event::timer_ev(at, next_seq(), aid, gen));
    }

    // ---- faults ----

    void apply_fault(const FaultAction& f) {
        std::string target = resolve_target(f.target);
        if (f.action == "crash" && !target.empty()) {
            if (crashed(target)) return;
            trace("crash " + target);
            crashed_.insert(target);
            actors_.erase(target);  // volatile state gone; backend survives
            ++timer_gen_[target];
        } else if (f.action == "recover" && !target.empty()) {
            if (!crashed(target)) return;
            trace("recover " + target);
            crashed_.erase(target);
            bool is_node = std::count(config_.sloop_nodes.begin(), config_.sloop_nodes.end(), target);
            if (is_node) {
                spawn_node(target, now_);
            } else {
                for (const auto& [p, n] : config_.porters)
                    if (p == target) spawn_porter(p, n, now_);
            }
            Outbox out;
            current_actor_ = target;
            actors_[target]->on_start(now_, out);
            dispatch(target, out, now_);
            reschedule_timer(target, now_);
        } else if (f.action == "partition") {
            trace("partition");
            partition_.clear();
            for (size_t g = 0; g < f.groups.size(); ++g)
                for (const auto& member : f.groups[g]) partition_[member] = g;
        } else if (f.action == "heal") {
            trace("heal");
            partition_.clear();
        }
    }

    std::string resolve_target(const std::string& target) const {
        if (target == "leader") {
            for (const auto& n : config_.sloop_nodes)
                if (!crashed(n) && is_leader(n)) return n;
            return {};
        }
        if (target == "follower") {
            for (const auto& n : config_.sloop_nodes)
                if (!crashed(n) && !is_leader(n)) return n;
            return {};
        }
        if (target == "crashed") {
            if (crashed_.empty()) return {};
            return *crashed_.begin();
        }
        return target;
    }

    bool is_leader(const std::string& n) const {
        auto it = actors_.find(n);
        if (it == actors_.end()) return false;
        auto* node = dynamic_cast<SloopNode*>(it->second.get());
        return node && node->role() == Role::leader;
    }

    struct HookEvent {
        std::string name;
        TimeMs at;
    };

    void drain_hook_faults() {
        for (const auto& he : hook_events_) {
            hook_counts_[he.name]++;
            for (size_t i = 0; i < config_.faults.size(); ++i) {
                const FaultAction& f = config_.faults[i];
                if (f.at || f.on != he.name) continue;
                if (hook_counts_[he.name] == f.occurrence && !hook_fired_.count(i)) {
                    hook_fired_.insert(i);
                    push_event(Event::fault(he.at + f.delay_ms, next_seq(), i));
                }
            }
        }
        hook_events_.clear();
    }

    // ---- metrics / teardown ----

    void trace(const std::string& line) {
        result_.trace.push_back("t=" + std::to_string(now_) + " " + line);
    }
    void trace_payload(const std::string& from, const std::string& to, const Bytes& payload) {
        Digest d = sha256(payload);
        result_.trace.push_back("t=" + std::to_string(now_) + " " + from + ">" + to + " " +
                                d.hex().substr(0, 12));
    }

    void finalize() {
        result_.messages.pending_at_end =
            result_.messages.sent - result_.messages.delivered - result_.messages.dropped_partition -
            result_.messages.dropped_crash;

        for (const auto& n : config_.sloop_nodes) {
            auto it = actors_.find(n);
            if (it == actors_.end()) {
                // crashed at end: read the chain back from durable state
                SloopConfig sc;
                sc.node_id = n;
                sc.node_keys = node_keys_;
                sc.porter_keys = porter_keys_;
                sc.keypair = keygen(derive_seed("node:" + n));
                SloopNode ghost(std::move(sc), *backends_[n], result_.end_time);
                result_.ledgers[n] = ghost.blocks();
            } else {
                auto* node = dynamic_cast<SloopNode*>(it->second.get());
                result_.ledgers[n] = node->blocks();
            }
        }
        for (const auto& [p, n] : config_.porters) {
            auto it = actors_.find(p);
            if (it != actors_.end())
                result_.porter_records[p] = dynamic_cast<Porter*>(it->second.get())->records();
        }
        for (auto& [node, blocks] : result_.ledgers)
            for (const auto& b : blocks)
                for (const auto& e : b.entries)
                    result_.committed_roots[e.porter_id][e.record.version] = e.record.trie_root;

        check_invariants();
        build_finality();
        verify_clients();
    }

    void check_invariants() {
        // agreement: equal heights hold equal blocks on every pair of nodes
        const auto& ledgers = result_.ledgers;
        for (auto a = ledgers.begin(); a != ledgers.end(); ++a) {
            for (auto b = std::next(a); b != ledgers.end(); ++b) {
                size_t common = std::min(a->second.size(), b->second.size());
                for (size_t h = 0; h < common; ++h)
                    if (a->second[h].block_hash() != b->second[h].block_hash())
                        result_.errors.push_back("divergent blocks at height " + std::to_string(h) +
                                                 " between " + a->first + " and " + b->first);
            }
        }
        // certificate validity and chain hashing per node
        size_t maj = config_.sloop_nodes.size() / 2 + 1;
        for (const auto& [n, blocks] : ledgers) {
            Digest prev{};
            for (const auto& b : blocks) {
                if (b.prev_hash != prev)
                    result_.errors.push_back(n + ": broken hash chain at height " + std::to_string(b.height));
                prev = b.block_hash();
                std::set<std::string> signers;
                for (const auto& [node_id, sig] : b.certificate) {
                    auto key = node_keys_.find(node_id);
                    if (key == node_keys_.end() || !verify(key->second, b.commit_digest(), sig)) {
                        result_.errors.push_back(n + ": invalid certificate signature at height " +
                                                 std::to_string(b.height));
                        continue;
                    }
                    signers.insert(node_id);
                }
                if (signers.size() < maj)
                    result_.errors.push_back(n + ": certificate below majority at height " +
                                             std::to_string(b.height));
                if (compute_period_root(b.entries) != b.root)
                    result_.errors.push_back(n + ": stored root does not recompute at height " +
                                             std::to_string(b.height));
            }
            // each (porter, version) commits at most once per chain
            std::set<std::pair<std::string, uint64_t>> seen;
            for (const auto& b : blocks)
                for (const auto& e : b.entries)
                    if (!seen.emplace(e.porter_id, e.record.version).second)
                        result_.errors.push_back(n + ": porter version committed twice: " + e.porter_id +
                                                 "/" + std::to_string(e.record.version));
        }
    }

    void build_finality() {
        const std::vector<LedgerBlock>* longest = nullptr;
        for (const auto& [n, blocks] : result_.ledgers)
            if (!longest || blocks.size() > longest->size()) longest = &blocks;
        if (!longest) return;
        for (uint64_t h = 0; h < longest->size(); ++h) {
            if (!first_apply_.count(h)) continue;
            FinalityRecord rec;
            rec.height = h;
            rec.commit_time = first_apply_[h];
            rec.period_start = h == 0 ? std::max<TimeMs>(result_.first_leader_at, 0)
                                      : first_apply_.count(h - 1) ? first_apply_[h - 1] : 0;
            rec.proposal_time = proposal_first_.count(h) ? proposal_first_[h] : rec.commit_time;
            for (const auto& [start, end] : elections_)
                if (start >= rec.period_start && end <= rec.commit_time && start > 0)
                    rec.election_durations.push_back(end - start);
            rec.failures = static_cast<int>(rec.election_durations.size());
            if (h == 0) rec.failures = 0, rec.election_durations.clear();
            result_.finality.push_back(rec);
        }
    }

    void verify_clients() {
        if (config_.clients.empty()) return;
        const std::vector<LedgerBlock>* chain = nullptr;
        for (const auto& [n, blocks] : result_.ledgers)
            if (!chain || blocks.size() > chain->size()) chain = &blocks;
        NodeLedgerView view("L1", *chain, porter_keys_);
        for (const auto& script : config_.clients) {
            ClientOutcome outcome;
            auto it = actors_.find(script.id);
            if (it != actors_.end()) {
                auto* client = dynamic_cast<ClientActor*>(it->second.get());
                outcome.finished = client->finished();
                outcome.transfers_completed = client->transfers_completed();
                outcome.finished_at = client->finished_at();
                if (!client->failure().empty()) outcome.detail = client->failure();
                if (outcome.finished) {
                    auto report = verify_asset(client->asset(), view, sim_issuer().public_key());
                    outcome.verified = report.valid();
                    if (!outcome.verified) outcome.detail = "asset verification failed";
                } else if (outcome.detail.empty()) {
                    outcome.detail = "incomplete at simulation end";
                }
            }
            result_.clients[script.id] = outcome;
        }
    }

    SimConfig config_;
    std::mt19937_64 rng_;
    SimResult result_;
    TimeMs now_ = 0;
    uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;

    std::map<std::string, std::unique_ptr<MemoryBackend>> backends_;
    std::map<std::string, std::unique_ptr<Actor>> actors_;
    std::map<std::string, Bytes> node_keys_;
    std::map<std::string, Bytes> porter_keys_;
    std::set<std::string> crashed_;
    std::map<std::string, size_t> partition_;
    std::map<std::string, uint64_t> timer_gen_;
    std::string current_actor_;

    std::map<uint64_t, TimeMs> first_apply_;
    std::map<uint64_t, TimeMs> proposal_first_;
    std::vector<HookEvent> hook_events_;
    std::map<std::string, int> hook_counts_;
    std::set<size_t> hook_fired_;
    std::vector<std::pair<TimeMs, TimeMs>> elections_;
    bool election_open_ = false;
    TimeMs election_started_at_ = 0;
};

inline SimResult run_sim(const SimConfig& config) { return Simulation(config).run(); }

}  // namespace sark::sim
