// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <functional>
#include <random>
#include <set>

#include "sark/anchor.hpp"
#include "sark/runtime.hpp"
#include "sark/store.hpp"

namespace sark {

// A porter's signed period entry: (porter identity, root record, signature).
struct RootEntry {
    std::string porter_id;
    Bytes porter_key;
    RootRecord record;
    Signature signature;

    bool operator==(const RootEntry&) const = default;

    bool signature_valid() const {
        return verify(porter_key, signing_digest(DomainTag::porter_root, record.encode()), signature);
    }

    Bytes encode() const {
        ByteWriter w;
        w.field_str(porter_id);
        w.field(porter_key);
        w.raw(record.encode());
        w.field(signature);
        return w.take();
    }
    static RootEntry decode(ByteReader& r) {
        RootEntry e;
        e.porter_id = r.field_str();
        e.porter_key = r.field();
        e.record = RootRecord::decode(r.raw(72));
        e.signature = r.field();
        return e;
    }

    Json to_json() const {
        return Json{{"porter", porter_id},
                    {"key", to_hex(porter_key)},
                    {"record", to_hex(record.encode())},
                    {"sig", to_hex(signature)}};
    }
    static RootEntry from_json(const Json& j) {
        RootEntry e;
        e.porter_id = j.at("porter").get<std::string>();
        e.porter_key = json_hex(j, "key");
        e.record = RootRecord::decode(json_hex(j, "record"));
        e.signature = json_hex(j, "sig");
        return e;
    }
};

// One committed ledger period: R_{L,t} over all porter entries, signed by the
// proposer and carrying a commitment certificate from a node majority. The
// block hash excludes the certificate so equal content chains identically no
// matter which majority signed.
struct LedgerBlock {
    uint64_t height = 0;
    Digest prev_hash;
    Digest root;  // R_{L,t}
    TimeMs timestamp = 0;
    std::vector<RootEntry> entries;  // sorted by porter_id
    std::string proposer;
    Signature proposer_sig;
    std::vector<std::pair<std::string, Signature>> certificate;

    static constexpr uint8_t kHashTag = 0x31;

    // What proposers and followers sign: (height, prev_hash, root).
    Digest commit_digest() const {
        Bytes b;
        put_u64_be(b, height);
        b.insert(b.end(), prev_hash.bytes.begin(), prev_hash.bytes.end());
        b.insert(b.end(), root.bytes.begin(), root.bytes.end());
        return signing_digest(DomainTag::ledger_root, b);
    }

    Digest block_hash() const {
        Bytes b{kHashTag};
        put_u64_be(b, height);
        b.insert(b.end(), prev_hash.bytes.begin(), prev_hash.bytes.end());
        b.insert(b.end(), root.bytes.begin(), root.bytes.end());
        put_u64_be(b, static_cast<uint64_t>(timestamp));
        for (const auto& e : entries) {
            Digest ed = sha256(e.encode());
            b.insert(b.end(), ed.bytes.begin(), ed.bytes.end());
        }
        return sha256(b);
    }

    Bytes encode() const {
        ByteWriter w;
        w.raw_u64(height);
        w.raw(prev_hash.view());
        w.raw(root.view());
        w.raw_u64(static_cast<uint64_t>(timestamp));
        w.raw_u16(static_cast<uint16_t>(entries.size()));
        for (const auto& e : entries) w.field(e.encode());
        w.field_str(proposer);
        w.field(proposer_sig);
        w.raw_u16(static_cast<uint16_t>(certificate.size()));
        for (const auto& [node, sig] : certificate) {
            w.field_str(node);
            w.field(sig);
        }
        return w.take();
    }

    static LedgerBlock decode(ByteView raw) {
        ByteReader r(raw);
        LedgerBlock b;
        b.height = r.raw_u64();
        b.prev_hash = Digest::from_bytes(r.raw(32));
        b.root = Digest::from_bytes(r.raw(32));
        b.timestamp = static_cast<TimeMs>(r.raw_u64());
        uint16_t n = r.raw_u16();
        for (uint16_t i = 0; i < n; ++i) {
            Bytes eb = r.field();
            ByteReader er(eb);
            b.entries.push_back(RootEntry::decode(er));
            er.expect_done();
        }
        b.proposer = r.field_str();
        b.proposer_sig = r.field();
        uint16_t c = r.raw_u16();
        for (uint16_t i = 0; i < c; ++i) {
            std::string node = r.field_str();
            b.certificate.emplace_back(node, r.field());
        }
        r.expect_done();
        return b;
    }
};

// Deterministic period trie over the entries; proofs from the durable copy
// carry version == height.
inline Digest compute_period_root(const std::vector<RootEntry>& entries) {
    MemoryBackend be;
    AuthenticatedStore store(StructureKind::jmt, be);
    auto w = store.open_window(0);
    for (const auto& e : entries) w.insert(TrieKey::for_public_key(e.porter_key), e.record.encode());
    return w.seal().digest;
}

struct SloopConfig {
    std::string node_id;
    std::vector<std::string> peers;            // other nodes
    std::map<std::string, Bytes> node_keys;    // full roster incl. self
    std::map<std::string, Bytes> porter_keys;  // trusted porter roster
    KeyPair keypair;
    std::string porter_id;  // paired porter actor ("" if none)
    TimeMs heartbeat_ms = 100;                 // T_h
    TimeMs block_ms = 2000;                    // T_b
    TimeMs commit_ms = 500;                    // T_c
    TimeMs election_min_ms = 300;
    TimeMs election_max_ms = 600;
    uint64_t rng_seed = 1;
};

enum class Role { follower, candidate, leader };
enum class NodePhase { block_creation, block_commitment };

struct LogEntry {
    uint64_t term = 0;
    bool is_block = false;  // no-op term barrier otherwise
    LedgerBlock block;

    Bytes encode() const {
        ByteWriter w;
        w.raw_u64(term);
        w.raw_u8(is_block ? 1 : 0);
        if (is_block) w.field(block.encode());
        return w.take();
    }
    static LogEntry decode(ByteView raw) {
        ByteReader r(raw);
        LogEntry e;
        e.term = r.raw_u64();
        e.is_block = r.raw_u8() != 0;
        if (e.is_block) e.block = LedgerBlock::decode(r.field());
        r.expect_done();
        return e;
    }
};

// Observability hooks; the simulator uses these for finality metrics and
// incident accounting, node runners for logging.
struct SloopHooks {
    std::function<void(uint64_t height, const LedgerBlock&, TimeMs now)> on_apply;
    std::function<void(const std::string& incident)> on_incident;
    std::function<void(uint64_t term, const std::string& leader, TimeMs now)> on_leader_elected;
    std::function<void(uint64_t height, TimeMs now, bool rebroadcast)> on_proposal_broadcast;
};

// One Sloop consensus node: Raft (elections, heartbeats, log replication)
// carrying certified ledger blocks produced by the two-stage commitment.
// Before T_b the node buffers porter entries (Block Creation); when the
// leader's block timeout fires it proposes, gathers > n/2 commitment
// signatures before T_c expires (Block Commitment), then replicates the
// certified block through the Raft log.
class SloopNode : public Actor {
  public:
    SloopNode(SloopConfig config, KvBackend& backend, TimeMs now)
        : config_(std::move(config)), backend_(backend), rng_(config_.rng_seed) {
        std::sort(config_.peers.begin(), config_.peers.end());
        load_meta();
        load_log();
        load_ledger();
        election_deadline_ = now + election_timeout();
    }

    SloopHooks hooks;

    const std::string& id() const override { return config_.node_id; }
    const SloopConfig& config() const { return config_; }
    Role role() const { return role_; }
    NodePhase phase() const { return phase_; }
    uint64_t term() const { return term_; }
    const std::string& leader_id() const { return leader_id_; }
    uint64_t ledger_height() const { return blocks_.size(); }
    const std::vector<LedgerBlock>& blocks() const { return blocks_; }

    size_t cluster_size() const { return config_.peers.size() + 1; }
    size_t majority() const { return cluster_size() / 2 + 1; }

    // ---- actor surface ----

    void on_start(TimeMs now, Outbox& out) override { (void)now, (void)out; }

    void on_message(const std::string& from, const Bytes& payload, TimeMs now, Outbox& out) override {
        auto parsed = parse_message(payload);
        if (!parsed) return;
        const Json& j = *parsed;
        const std::string type = j.at("type").get<std::string>();
        try {
            if (type == "request_vote")
                handle_request_vote(j, now, out);
            else if (type == "request_vote_reply")
                handle_vote_reply(j, now, out);
            else if (type == "append_entries" || type == "heartbeat")
                handle_append_entries(j, now, out);
            else if (type == "append_entries_reply")
                handle_append_reply(j, now, out);
            else if (type == "root_entry")
                handle_root_entry(j, now, out);
            else if (type == "block_proposal")
                handle_block_proposal(j, now, out);
            else if (type == "block_signature")
                handle_block_signature(j, now, out);
            else if (type == "block_commit")
                handle_block_commit(j, now, out);
            else if (type == "query_root")
                handle_query_root(from, j, out);
            else if (type == "query_anchor")
                handle_query_anchor(from, j, out);
        } catch (const std::exception& e) {
            incident(std::string("message handling error: ") + e.what());
        }
    }

    void on_timer(TimeMs now, Outbox& out) override {
        if (role_ == Role::leader) {
            if (now >= heartbeat_deadline_) {
                broadcast_append(now, out);
                heartbeat_deadline_ = now + config_.heartbeat_ms;
            }
            if (phase_ == NodePhase::block_commitment && tc_deadline_ && now >= *tc_deadline_) {
                // no majority within T_c: back to Block Creation, entries carry over
                incident("block commitment timed out at height " +
                         std::to_string(proposal_ ? proposal_->block.height : 0));
                phase_ = NodePhase::block_creation;
                proposal_.reset();
                tc_deadline_.reset();
                tb_deadline_ = now + config_.block_ms;
            }
            if (phase_ == NodePhase::block_creation && tb_deadline_ && now >= *tb_deadline_)
                propose_block(now, out);
        } else if (now >= election_deadline_) {
            start_election(now, out);
        }
    }

    std::optional<TimeMs> next_deadline() const override {
        std::optional<TimeMs> d;
        auto consider = [&](std::optional<TimeMs> t) {
            if (t && (!d || *t < *d)) d = t;
        };
        if (role_ == Role::leader) {
            consider(heartbeat_deadline_);
            consider(tb_deadline_);
            consider(tc_deadline_);
        } else {
            consider(election_deadline_);
        }
        return d;
    }

    // ---- read interface (used by query handlers, tests, the simulator) ----

    std::optional<LedgerBlock> block_at(uint64_t height) const {
        if (height >= blocks_.size()) return std::nullopt;
        return blocks_[height];
    }

    std::optional<Digest> ledger_root_at(uint64_t height) const {
        if (height >= blocks_.size()) return std::nullopt;
        return blocks_[height].root;
    }

    InclusionProof anchor_proof_at(uint64_t height, const Bytes& porter_key) const {
        return period_store().prove_inclusion(height, TrieKey::for_public_key(porter_key));
    }

  private:
    // ---- durable state ----

    void persist_meta() {
        ByteWriter w;
        w.raw_u64(term_);
        w.field_str(voted_for_);
        backend_.put(Bytes{'m'}, w.take());
        backend_.sync();
    }
    void load_meta() {
        auto raw = backend_.get(Bytes{'m'});
        if (!raw) return;
        ByteReader r(*raw);
        term_ = r.raw_u64();
        voted_for_ = r.field_str();
    }

    void persist_log_entry(size_t index_1based, const LogEntry& e) {
        Bytes k{'l'};
        put_u64_be(k, index_1based);
        backend_.put(k, e.encode());
        backend_.put(Bytes{'z'}, u64_be(log_.size()));
        backend_.sync();
    }
    void truncate_log_from(size_t index_1based) {
        for (size_t i = index_1based; i <= log_.size(); ++i) {
            Bytes k{'l'};
            put_u64_be(k, i);
            backend_.del(k);
        }
        log_.resize(index_1based - 1);
        backend_.put(Bytes{'z'}, u64_be(log_.size()));
        backend_.sync();
    }
    void load_log() {
        auto count = backend_.get(Bytes{'z'});
        if (!count) return;
        ByteReader cr(*count);
        uint64_t n = cr.raw_u64();
        for (uint64_t i = 1; i <= n; ++i) {
            Bytes k{'l'};
            put_u64_be(k, i);
            auto raw = backend_.get(k);
            if (!raw) break;  // torn write: drop the tail
            log_.push_back(LogEntry::decode(*raw));
        }
    }

    void load_ledger() {
        backend_.iterate_prefix(Bytes{'b'}, [&](const Bytes&, const Bytes& v) {
            blocks_.push_back(LedgerBlock::decode(v));
            return true;
        });
        for (const auto& b : blocks_)
            for (const auto& e : b.entries)
                committed_roots_[e.porter_id][e.record.version] = e.record.trie_root;
        // committed blocks are by definition replicated; recovering commit
        // index to the applied prefix is safe and avoids re-applying
        for (size_t i = 0, applied = 0; i < log_.size() && applied < blocks_.size(); ++i)
            if (log_[i].is_block && log_[i].block.height < blocks_.size()) commit_index_ = i + 1, ++applied;
        last_applied_ = commit_index_;
    }

    AuthenticatedStore period_store() const {
        return AuthenticatedStore(StructureKind::jmt, period_backend_);
    }

    // ---- raft core ----

    TimeMs election_timeout() {
        auto span = static_cast<uint64_t>(config_.election_max_ms - config_.election_min_ms + 1);
        return config_.election_min_ms + static_cast<TimeMs>(rng_() % span);
    }

    uint64_t last_log_index() const { return log_.size(); }
    uint64_t last_log_term() const { return log_.empty() ? 0 : log_.back().term; }

    void become_follower(uint64_t term, TimeMs now) {
        bool term_changed = term != term_;
        role_ = Role::follower;
        term_ = term;
        if (term_changed) voted_for_.clear();
        votes_.clear();
        phase_ = NodePhase::block_creation;
        proposal_.reset();
        tb_deadline_.reset();
        tc_deadline_.reset();
        election_deadline_ = now + election_timeout();
        if (term_changed) persist_meta();
    }

    void start_election(TimeMs now, Outbox& out) {
        role_ = Role::candidate;
        ++term_;
        voted_for_ = config_.node_id;
        votes_ = {config_.node_id};
        persist_meta();
        election_deadline_ = now + election_timeout();
        Json msg{{"type", "request_vote"},       {"term", term_},
                 {"from", config_.node_id},      {"last_log_index", last_log_index()},
                 {"last_log_term", last_log_term()}};
        for (const auto& p : config_.peers) out.send(p, msg);
        if (votes_.size() >= majority()) become_leader(now, out);  // single-node cluster
    }

    void become_leader(TimeMs now, Outbox& out) {
        role_ = Role::leader;
        leader_id_ = config_.node_id;
        next_index_.clear();
        match_index_.clear();
        for (const auto& p : config_.peers) {
            next_index_[p] = last_log_index() + 1;
            match_index_[p] = 0;
        }
        if (hooks.on_leader_elected) hooks.on_leader_elected(term_, config_.node_id, now);
        // term barrier: lets certified blocks from earlier terms commit
        LogEntry noop;
        noop.term = term_;
        log_.push_back(noop);
        persist_log_entry(log_.size(), noop);
        tb_deadline_ = last_apply_time_ ? *last_apply_time_ + config_.block_ms : now + config_.block_ms;
        // resume an interrupted commitment round: re-broadcast the proposal
        // unless the certified block already reached our log
        if (seen_proposal_ && !log_has_block_at(seen_proposal_->height)) {
            LedgerBlock b = seen_proposal_->to_block();
            b.proposer = config_.node_id;
            b.proposer_sig = sign(config_.keypair.secret_key, b.commit_digest());
            proposal_ = ProposalState{std::move(b), {}};
            phase_ = NodePhase::block_commitment;
            tb_deadline_.reset();
            tc_deadline_ = now + config_.commit_ms;
            add_own_signature(now, out);
            if (proposal_) broadcast_proposal(now, out, true);
        }
        broadcast_append(now, out);
        heartbeat_deadline_ = now + config_.heartbeat_ms;
    }

    void handle_request_vote(const Json& j, TimeMs now, Outbox& out) {
        uint64_t term = j.at("term").get<uint64_t>();
        const std::string candidate = j.at("from").get<std::string>();
        if (term > term_) become_follower(term, now);
        bool granted = false;
        if (term == term_ && role_ != Role::leader && (voted_for_.empty() || voted_for_ == candidate)) {
            uint64_t cand_idx = j.at("last_log_index").get<uint64_t>();
            uint64_t cand_term = j.at("last_log_term").get<uint64_t>();
            bool up_to_date = cand_term > last_log_term() ||
                              (cand_term == last_log_term() && cand_idx >= last_log_index());
            if (up_to_date) {
                granted = true;
                voted_for_ = candidate;
                persist_meta();
                election_deadline_ = now + election_timeout();
            }
        }
        out.send(candidate, Json{{"type", "request_vote_reply"},
                                 {"term", term_},
                                 {"from", config_.node_id},
                                 {"granted", granted}});
    }

    void handle_vote_reply(const Json& j, TimeMs now, Outbox& out) {
        uint64_t term = j.at("term").get<uint64_t>();
        if (term > term_) {
            become_follower(term, now);
            return;
        }
        if (role_ != Role::candidate || term != term_) return;
        if (j.at("granted").get<bool>()) {
            votes_.insert(j.at("from").get<std::string>());
            if (votes_.size() >= majority()) become_leader(now, out);
        }
    }

    void broadcast_append(TimeMs now, Outbox& out) {
        for (const auto& p : config_.peers) send_append(p, now, out);
    }

    void send_append(const std::string& peer, TimeMs now, Outbox& out) {
        (void)now;
        uint64_t next = next_index_[peer];
        uint64_t prev_idx = next - 1;
        uint64_t prev_term = prev_idx == 0 ? 0 : log_[prev_idx - 1].term;
        Json entries = Json::array();
        for (uint64_t i = next; i <= log_.size(); ++i) entries.push_back(to_hex(log_[i - 1].encode()));
        Json msg{{"type", entries.empty() ? "heartbeat" : "append_entries"},
                 {"term", term_},
                 {"from", config_.node_id},
                 {"prev_log_index", prev_idx},
                 {"prev_log_term", prev_term},
                 {"entries", std::move(entries)},
                 {"leader_commit", commit_index_}};
        out.send(peer, msg);
    }

    void handle_append_entries(const Json& j, TimeMs now, Outbox& out) {
        uint64_t term = j.at("term").get<uint64_t>();
        const std::string leader = j.at("from").get<std::string>();
        if (term < term_) {
            out.send(leader, Json{{"type", "append_entries_reply"},
                                  {"term", term_},
                                  {"from", config_.node_id},
                                  {"success", false},
                                  {"match_index", 0}});
            return;
        }
        if (term > term_ || role_ != Role::follower) become_follower(term, now);
        leader_id_ = leader;
        election_deadline_ = now + election_timeout();

        uint64_t prev_idx = j.at("prev_log_index").get<uint64_t>();
        uint64_t prev_term = j.at("prev_log_term").get<uint64_t>();
        bool consistent = prev_idx == 0 || (prev_idx <= log_.size() && log_[prev_idx - 1].term == prev_term);
        uint64_t match = 0;
        if (consistent) {
            uint64_t idx = prev_idx;
            for (const auto& raw : j.at("entries")) {
                ++idx;
                LogEntry e = LogEntry::decode(from_hex(raw.get<std::string>()));
                if (idx <= log_.size()) {
                    if (log_[idx - 1].term == e.term) continue;  // already have it
                    truncate_log_from(idx);
                }
                log_.push_back(e);
                persist_log_entry(idx, e);
            }
            match = prev_idx + j.at("entries").size();
            uint64_t leader_commit = j.at("leader_commit").get<uint64_t>();
            if (leader_commit > commit_index_) {
                commit_index_ = std::min<uint64_t>(leader_commit, log_.size());
                apply_committed(now, out);
            }
        }
        out.send(leader, Json{{"type", "append_entries_reply"},
                              {"term", term_},
                              {"from", config_.node_id},
                              {"success", consistent},
                              {"match_index", match}});
    }

    void handle_append_reply(const Json& j, TimeMs now, Outbox& out) {
        uint64_t term = j.at("term").get<uint64_t>();
        if (term > term_) {
            become_follower(term, now);
            return;
        }
        if (role_ != Role::leader || term != term_) return;
        const std::string peer = j.at("from").get<std::string>();
        if (j.at("success").get<bool>()) {
            uint64_t match = j.at("match_index").get<uint64_t>();
            match_index_[peer] = std::max(match_index_[peer], match);
            next_index_[peer] = match_index_[peer] + 1;
            advance_commit(now, out);
        } else {
            if (next_index_[peer] > 1) --next_index_[peer];
            send_append(peer, now, out);
        }
    }

    void advance_commit(TimeMs now, Outbox& out) {
        for (uint64_t n = log_.size(); n > commit_index_; --n) {
            if (log_[n - 1].term != term_) break;  // only count current-term entries
            size_t count = 1;  // self
            for (const auto& [peer, match] : match_index_)
                if (match >= n) ++count;
            if (count >= majority()) {
                commit_index_ = n;
                apply_committed(now, out);
                // explicit confirmation so followers apply without waiting a heartbeat
                Json msg{{"type", "block_commit"},
                         {"term", term_},
                         {"from", config_.node_id},
                         {"commit_index", commit_index_},
                         {"height", blocks_.empty() ? 0 : blocks_.size() - 1}};
                for (const auto& p : config_.peers) out.send(p, msg);
                break;
            }
        }
    }

    void handle_block_commit(const Json& j, TimeMs now, Outbox& out) {
        uint64_t term = j.at("term").get<uint64_t>();
        if (term < term_) return;
        if (term > term_) become_follower(term, now);
        if (role_ == Role::follower) election_deadline_ = now + election_timeout();
        uint64_t idx = j.at("commit_index").get<uint64_t>();
        if (idx > commit_index_) {
            commit_index_ = std::min<uint64_t>(idx, log_.size());
            apply_committed(now, out);
        }
    }

    // ---- two-stage block commitment ----

    bool log_has_block_at(uint64_t height) const {
        for (size_t i = log_.size(); i-- > 0;) {
            if (!log_[i].is_block) continue;
            if (log_[i].block.height == height) return true;
            if (log_[i].block.height < height) return false;
        }
        return false;
    }

    std::optional<LedgerBlock> last_logged_block() const {
        for (size_t i = log_.size(); i-- > 0;)
            if (log_[i].is_block) return log_[i].block;
        return std::nullopt;
    }

    bool version_in_log_or_committed(const std::string& porter_id, uint64_t version) const {
        auto it = committed_roots_.find(porter_id);
        if (it != committed_roots_.end() && !it->second.empty() && it->second.rbegin()->first >= version)
            return true;
        for (size_t i = commit_index_; i < log_.size(); ++i)
            if (log_[i].is_block)
                for (const auto& e : log_[i].block.entries)
                    if (e.porter_id == porter_id && e.record.version >= version) return true;
        return false;
    }

    void handle_root_entry(const Json& j, TimeMs now, Outbox& out) {
        (void)now;
        RootEntry entry = RootEntry::from_json(j);
        auto roster = config_.porter_keys.find(entry.porter_id);
        if (roster == config_.porter_keys.end() || roster->second != entry.porter_key) {
            incident("root entry from unknown porter '" + entry.porter_id + "'");
            return;
        }
        if (!entry.signature_valid()) {
            incident("root entry with invalid signature from '" + entry.porter_id + "'");
            return;
        }
        // non-equivocation: a conflicting root for an already-seen version is
        // flagged and dropped; the first one seen wins
        auto committed = committed_roots_.find(entry.porter_id);
        if (committed != committed_roots_.end()) {
            auto at = committed->second.find(entry.record.version);
            if (at != committed->second.end()) {
                if (at->second != entry.record.trie_root)
                    incident("equivocation by porter '" + entry.porter_id + "' at version " +
                             std::to_string(entry.record.version));
                return;  // already committed (or conflicting): nothing to buffer
            }
        }
        auto buffered = buffer_.find(entry.porter_id);
        if (buffered != buffer_.end()) {
            const RootEntry& have = buffered->second;
            if (have.record.version == entry.record.version) {
                if (!(have == entry)) {
                    incident("equivocation by porter '" + entry.porter_id + "' at version " +
                             std::to_string(entry.record.version));
                }
                return;
            }
            if (have.record.version > entry.record.version) return;  // stale
        }
        buffer_[entry.porter_id] = entry;
        // one-hop dissemination: entries straight from a porter go to peers
        if (!j.value("relay", false)) {
            Json fwd = entry.to_json();
            fwd["type"] = "root_entry";
            fwd["from"] = config_.node_id;
            fwd["relay"] = true;
            for (const auto& p : config_.peers) out.send(p, fwd);
        }
    }

    struct ProposalCore {
        uint64_t height = 0;
        Digest prev_hash;
        Digest root;
        TimeMs timestamp = 0;
        std::vector<RootEntry> entries;

        LedgerBlock to_block() const {
            LedgerBlock b;
            b.height = height;
            b.prev_hash = prev_hash;
            b.root = root;
            b.timestamp = timestamp;
            b.entries = entries;
            return b;
        }
    };

    struct ProposalState {
        LedgerBlock block;  // certificate filled as signatures arrive
        std::map<std::string, Signature> sigs;
    };

    void propose_block(TimeMs now, Outbox& out) {
        ProposalCore core;
        auto base = last_logged_block();
        core.height = base ? base->height + 1 : 0;
        core.prev_hash = base ? base->block_hash() : Digest{};
        core.timestamp = now;
        for (const auto& [porter_id, entry] : buffer_) {
            if (version_in_log_or_committed(porter_id, entry.record.version)) continue;
            core.entries.push_back(entry);
        }
        std::sort(core.entries.begin(), core.entries.end(),
                  [](const RootEntry& a, const RootEntry& b) { return a.porter_id < b.porter_id; });
        core.root = compute_period_root(core.entries);

        proposal_ = ProposalState{core.to_block(), {}};
        proposal_->block.proposer = config_.node_id;
        proposal_->block.proposer_sig =
            sign(config_.keypair.secret_key, proposal_->block.commit_digest());
        seen_proposal_ = core;
        phase_ = NodePhase::block_commitment;
        tb_deadline_.reset();
        tc_deadline_ = now + config_.commit_ms;
        add_own_signature(now, out);
        broadcast_proposal(now, out, false);
    }

    void broadcast_proposal(TimeMs now, Outbox& out, bool rebroadcast) {
        const LedgerBlock& b = proposal_->block;
        Json entries = Json::array();
        for (const auto& e : b.entries) entries.push_back(e.to_json());
        Json msg{{"type", "block_proposal"}, {"term", term_},
                 {"from", config_.node_id},  {"height", b.height},
                 {"prev_hash", b.prev_hash.hex()}, {"root", b.root.hex()},
                 {"ts", b.timestamp},        {"entries", std::move(entries)}};
        for (const auto& p : config_.peers) out.send(p, msg);
        if (hooks.on_proposal_broadcast) hooks.on_proposal_broadcast(b.height, now, rebroadcast);
    }

    void add_own_signature(TimeMs now, Outbox& out) {
        proposal_->sigs[config_.node_id] =
            sign(config_.keypair.secret_key, proposal_->block.commit_digest());
        maybe_certify(now, out);
    }

    void handle_block_proposal(const Json& j, TimeMs now, Outbox& out) {
        uint64_t term = j.at("term").get<uint64_t>();
        if (term < term_) return;
        const std::string leader = j.at("from").get<std::string>();
        if (term > term_ || (role_ != Role::follower && leader != config_.node_id))
            become_follower(term, now);
        leader_id_ = leader;
        election_deadline_ = now + election_timeout();

        ProposalCore core;
        core.height = j.at("height").get<uint64_t>();
        core.prev_hash = Digest::from_hex(j.at("prev_hash").get<std::string>());
        core.root = Digest::from_hex(j.at("root").get<std::string>());
        core.timestamp = j.at("ts").get<TimeMs>();
        for (const auto& ej : j.at("entries")) core.entries.push_back(RootEntry::from_json(ej));

        // validate against our own log tail and recompute the root
        auto base = last_logged_block();
        uint64_t expected_height = base ? base->height + 1 : 0;
        Digest expected_prev = base ? base->block_hash() : Digest{};
        if (core.height != expected_height || core.prev_hash != expected_prev) return;
        for (const auto& e : core.entries) {
            auto roster = config_.porter_keys.find(e.porter_id);
            if (roster == config_.porter_keys.end() || roster->second != e.porter_key ||
                !e.signature_valid()) {
                incident("proposal with invalid entry from '" + e.porter_id + "'");
                return;
            }
            auto committed = committed_roots_.find(e.porter_id);
            if (committed != committed_roots_.end()) {
                auto at = committed->second.find(e.record.version);
                if (at != committed->second.end() && at->second != e.record.trie_root) {
                    incident("proposal conflicts with committed root of '" + e.porter_id + "'");
                    return;
                }
            }
            // leader's pick wins a buffered conflict; note it and move on
            auto buffered = buffer_.find(e.porter_id);
            if (buffered != buffer_.end() &&
                buffered->second.record.version == e.record.version &&
                !(buffered->second == e)) {
                incident("equivocation by porter '" + e.porter_id + "' at version " +
                         std::to_string(e.record.version) + " resolved by leader");
                buffer_[e.porter_id] = e;
            }
        }
        if (compute_period_root(core.entries) != core.root) {
            incident("proposal root mismatch at height " + std::to_string(core.height));
            return;
        }
        seen_proposal_ = core;
        phase_ = NodePhase::block_commitment;
        LedgerBlock b = core.to_block();
        out.send(leader, Json{{"type", "block_signature"},
                              {"term", term_},
                              {"from", config_.node_id},
                              {"height", core.height},
                              {"root", core.root.hex()},
                              {"sig", to_hex(sign(config_.keypair.secret_key, b.commit_digest()))}});
    }

    void handle_block_signature(const Json& j, TimeMs now, Outbox& out) {
        uint64_t term = j.at("term").get<uint64_t>();
        if (term > term_) {
            become_follower(term, now);
            return;
        }
        if (role_ != Role::leader || !proposal_ || phase_ != NodePhase::block_commitment) return;
        if (j.at("height").get<uint64_t>() != proposal_->block.height ||
            Digest::from_hex(j.at("root").get<std::string>()) != proposal_->block.root)
            return;
        const std::string node = j.at("from").get<std::string>();
        auto roster = config_.node_keys.find(node);
        if (roster == config_.node_keys.end()) return;
        Signature sig = json_hex(j, "sig");
        if (!verify(roster->second, proposal_->block.commit_digest(), sig)) {
            incident("invalid commitment signature from node '" + node + "'");
            return;
        }
        proposal_->sigs[node] = sig;
        maybe_certify(now, out);
    }

    void maybe_certify(TimeMs now, Outbox& out) {
        if (!proposal_ || proposal_->sigs.size() < majority()) return;
        LedgerBlock block = proposal_->block;
        block.certificate.assign(proposal_->sigs.begin(), proposal_->sigs.end());
        proposal_.reset();
        seen_proposal_.reset();
        tc_deadline_.reset();
        phase_ = NodePhase::block_creation;

        LogEntry entry;
        entry.term = term_;
        entry.is_block = true;
        entry.block = std::move(block);
        log_.push_back(entry);
        persist_log_entry(log_.size(), entry);
        if (cluster_size() == 1) {
            commit_index_ = log_.size();
            apply_committed(now, out);
        } else {
            broadcast_append(now, out);
            heartbeat_deadline_ = now + config_.heartbeat_ms;
        }
    }

    // ---- apply ----

    void apply_committed(TimeMs now, Outbox& out) {
        while (last_applied_ < commit_index_) {
            const LogEntry& e = log_[last_applied_];
            ++last_applied_;
            if (!e.is_block) continue;
            apply_block(e.block, now, out);
        }
    }

    void apply_block(const LedgerBlock& block, TimeMs now, Outbox& out) {
        if (block.height < blocks_.size()) return;  // recovery replay
        if (block.height != blocks_.size()) {
            incident("apply gap: block height " + std::to_string(block.height) + " at ledger height " +
                     std::to_string(blocks_.size()));
            return;
        }
        blocks_.push_back(block);
        Bytes bkey{'b'};
        put_u64_be(bkey, block.height);
        backend_.put(bkey, block.encode());
        auto store = period_store();
        auto w = store.open_window(block.height);
        for (const auto& e : block.entries) w.insert(TrieKey::for_public_key(e.porter_key), e.record.encode());
        TrieRoot root = w.seal();
        if (root.digest != block.root)
            incident("applied block root mismatch at height " + std::to_string(block.height));
        backend_.sync();

        if (seen_proposal_ && seen_proposal_->height <= block.height) seen_proposal_.reset();
        for (const auto& e : block.entries) {
            committed_roots_[e.porter_id][e.record.version] = e.record.trie_root;
            auto buffered = buffer_.find(e.porter_id);
            if (buffered != buffer_.end() && buffered->second.record.version <= e.record.version)
                buffer_.erase(buffered);
            if (e.porter_id == config_.porter_id) {
                out.send(config_.porter_id,
                         Json{{"type", "anchor_proof"},
                              {"from", config_.node_id},
                              {"height", block.height},
                              {"record", to_hex(e.record.encode())},
                              {"proof", to_hex(proofwire::encode(
                                            store.prove_inclusion(block.height,
                                                                  TrieKey::for_public_key(e.porter_key))))}});
            }
        }
        last_apply_time_ = now;
        if (role_ == Role::leader) tb_deadline_ = now + config_.block_ms;
        if (hooks.on_apply) hooks.on_apply(block.height, block, now);
    }

    // ---- queries ----

    void handle_query_root(const std::string& from, const Json& j, Outbox& out) {
        Json ack{{"type", "query_root_ack"}, {"latest", static_cast<int64_t>(blocks_.size()) - 1}};
        if (j.contains("height")) {
            uint64_t h = j.at("height").get<uint64_t>();
            auto block = block_at(h);
            ack["ok"] = block.has_value();
            if (block) {
                ack["height"] = h;
                ack["root"] = block->root.hex();
                ack["block_hash"] = block->block_hash().hex();
            }
        } else {
            ack["ok"] = true;
        }
        out.send(from, ack);
    }

    void handle_query_anchor(const std::string& from, const Json& j, Outbox& out) {
        uint64_t h = j.at("height").get<uint64_t>();
        Bytes porter_key = json_hex(j, "porter_key");
        Json ack{{"type", "query_anchor_ack"}, {"height", h}};
        auto block = block_at(h);
        if (!block) {
            ack["ok"] = false;
            ack["reason"] = "unknown height";
            out.send(from, ack);
            return;
        }
        TrieKey key = TrieKey::for_public_key(porter_key);
        auto store = period_store();
        const RootEntry* entry = nullptr;
        for (const auto& e : block->entries)
            if (e.porter_key == porter_key) entry = &e;
        if (entry) {
            ack["ok"] = true;
            ack["excluded"] = false;
            ack["record"] = to_hex(entry->record.encode());
            ack["proof"] = to_hex(proofwire::encode(store.prove_inclusion(h, key)));
        } else {
            ack["ok"] = true;
            ack["excluded"] = true;
            ack["proof"] = to_hex(proofwire::encode(store.prove_exclusion(h, key)));
        }
        out.send(from, ack);
    }

    void incident(const std::string& what) {
        if (hooks.on_incident) hooks.on_incident(config_.node_id + ": " + what);
    }

    SloopConfig config_;
    KvBackend& backend_;
    mutable PrefixedBackend period_backend_{backend_, to_bytes("pt/")};
    std::mt19937_64 rng_;

    // raft
    Role role_ = Role::follower;
    uint64_t term_ = 0;
    std::string voted_for_;
    std::string leader_id_;
    std::set<std::string> votes_;
    std::vector<LogEntry> log_;  // 1-based indexing via index-1
    uint64_t commit_index_ = 0;
    uint64_t last_applied_ = 0;
    std::map<std::string, uint64_t> next_index_;
    std::map<std::string, uint64_t> match_index_;
    TimeMs election_deadline_ = 0;
    TimeMs heartbeat_deadline_ = 0;

    // two-stage commitment
    NodePhase phase_ = NodePhase::block_creation;
    std::optional<TimeMs> tb_deadline_;
    std::optional<TimeMs> tc_deadline_;
    std::optional<ProposalCore> seen_proposal_;  // survives leader change for re-broadcast
    std::optional<ProposalState> proposal_;      // leader-side signature gathering
    std::optional<TimeMs> last_apply_time_;

    // ledger
    std::vector<LedgerBlock> blocks_;
    std::map<std::string, RootEntry> buffer_;  // porter -> latest pending entry
    std::map<std::string, std::map<uint64_t, Digest>> committed_roots_;
};

}  // namespace sark
