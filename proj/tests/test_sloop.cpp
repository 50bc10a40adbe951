// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#include <catch2/catch_amalgamated.hpp>

#include "sark/scenarios.hpp"
#include "sark/sloop.hpp"
#include "test_support.hpp"

using namespace sark;

namespace {

// Single node driven by hand-crafted messages.
struct LoneNode {
    MemoryBackend be;
    std::map<std::string, Bytes> node_keys;
    std::map<std::string, Bytes> porter_keys;
    KeyPair porter_kp;
    std::unique_ptr<SloopNode> node;
    std::vector<std::string> incidents;

    LoneNode() {
        std::mt19937_64 rng(2024);
        KeyPair self = keygen(test::rand_seed(rng));
        KeyPair peer_a = keygen(test::rand_seed(rng));
        KeyPair peer_b = keygen(test::rand_seed(rng));
        porter_kp = keygen(test::rand_seed(rng));
        node_keys = {{"n1", self.public_key}, {"n2", peer_a.public_key}, {"n3", peer_b.public_key}};
        porter_keys = {{"PA", porter_kp.public_key}};
        SloopConfig cfg;
        cfg.node_id = "n1";
        cfg.peers = {"n2", "n3"};
        cfg.node_keys = node_keys;
        cfg.porter_keys = porter_keys;
        cfg.keypair = self;
        node = std::make_unique<SloopNode>(cfg, be, 0);
        node->hooks.on_incident = [this](const std::string& s) { incidents.push_back(s); };
    }

    std::vector<Json> feed(const std::string& from, const Json& msg, TimeMs now = 10) {
        Outbox out;
        std::string s = msg.dump();
        node->on_message(from, Bytes(s.begin(), s.end()), now, out);
        std::vector<Json> replies;
        for (auto& env : out.take()) replies.push_back(*parse_message(env.payload));
        return replies;
    }
};

Json vote_request(const std::string& from, uint64_t term, uint64_t lli = 0, uint64_t llt = 0) {
    return Json{{"type", "request_vote"}, {"term", term},          {"from", from},
                {"last_log_index", lli},  {"last_log_term", llt}};
}

}  // namespace

TEST_CASE("a node grants at most one vote per term", "[sloop]") {
    LoneNode h;
    auto r1 = h.feed("n2", vote_request("n2", 1));
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].at("granted") == true);

    auto r2 = h.feed("n3", vote_request("n3", 1));
    REQUIRE(r2.size() == 1);
    CHECK(r2[0].at("granted") == false);

    // same candidate again: idempotent grant
    auto r3 = h.feed("n2", vote_request("n2", 1));
    CHECK(r3[0].at("granted") == true);

    // later term: vote again
    auto r4 = h.feed("n3", vote_request("n3", 2));
    CHECK(r4[0].at("granted") == true);
}

TEST_CASE("votes are denied to candidates with stale logs", "[sloop]") {
    LoneNode h;
    // give the node one log entry at term 1 via append_entries
    LogEntry noop;
    noop.term = 1;
    auto r = h.feed("n2", Json{{"type", "append_entries"},
                               {"term", 1},
                               {"from", "n2"},
                               {"prev_log_index", 0},
                               {"prev_log_term", 0},
                               {"entries", {to_hex(noop.encode())}},
                               {"leader_commit", 0}});
    REQUIRE(r.size() == 1);
    CHECK(r[0].at("success") == true);

    // candidate with an empty log at a later term: not up to date
    auto deny = h.feed("n3", vote_request("n3", 2, 0, 0));
    CHECK(deny[0].at("granted") == false);
    // candidate with the same log: granted
    auto grant = h.feed("n3", vote_request("n3", 3, 1, 1));
    CHECK(grant[0].at("granted") == true);
}

TEST_CASE("append_entries rejects gaps and truncates conflicts", "[sloop]") {
    LoneNode h;
    LogEntry e1;
    e1.term = 1;
    auto gap = h.feed("n2", Json{{"type", "append_entries"},
                                 {"term", 1},
                                 {"from", "n2"},
                                 {"prev_log_index", 5},
                                 {"prev_log_term", 1},
                                 {"entries", {to_hex(e1.encode())}},
                                 {"leader_commit", 0}});
    CHECK(gap[0].at("success") == false);

    auto ok = h.feed("n2", Json{{"type", "append_entries"},
                                {"term", 1},
                                {"from", "n2"},
                                {"prev_log_index", 0},
                                {"prev_log_term", 0},
                                {"entries", {to_hex(e1.encode())}},
                                {"leader_commit", 0}});
    CHECK(ok[0].at("success") == true);
    CHECK(ok[0].at("match_index") == 1);
}

TEST_CASE("followers reject proposals whose root does not recompute", "[sloop]") {
    LoneNode h;
    RootRecord rec{0, sha256(to_bytes("root")), Digest{}};
    RootEntry entry;
    entry.porter_id = "PA";
    entry.porter_key = h.porter_kp.public_key;
    entry.record = rec;
    entry.signature =
        sign(h.porter_kp.secret_key, signing_digest(DomainTag::porter_root, rec.encode()));
    REQUIRE(entry.signature_valid());

    Json proposal{{"type", "block_proposal"},
                  {"term", 1},
                  {"from", "n2"},
                  {"height", 0},
                  {"prev_hash", Digest{}.hex()},
                  {"root", sha256(to_bytes("wrong")).hex()},  // tampered
                  {"ts", 10},
                  {"entries", {entry.to_json()}}};
    auto replies = h.feed("n2", proposal);
    CHECK(replies.empty());
    REQUIRE_FALSE(h.incidents.empty());
    CHECK(h.incidents.back().find("root mismatch") != std::string::npos);

    // matching root: signature comes back
    proposal["root"] = compute_period_root({entry}).hex();
    auto ok = h.feed("n2", proposal);
    REQUIRE(ok.size() == 1);
    CHECK(ok[0].at("type") == "block_signature");
    CHECK(h.node->phase() == NodePhase::block_commitment);
}

TEST_CASE("conflicting porter roots are flagged and only one survives", "[sloop]") {
    LoneNode h;
    auto make_entry = [&](const std::string& tag) {
        RootRecord rec{0, sha256(to_bytes(tag)), Digest{}};
        RootEntry e;
        e.porter_id = "PA";
        e.porter_key = h.porter_kp.public_key;
        e.record = rec;
        e.signature = sign(h.porter_kp.secret_key, signing_digest(DomainTag::porter_root, rec.encode()));
        return e;
    };
    auto a = make_entry("one");
    auto b = make_entry("two");
    Json ja = a.to_json();
    ja["type"] = "root_entry";
    ja["from"] = "PA";
    ja["relay"] = false;
    Json jb = b.to_json();
    jb["type"] = "root_entry";
    jb["from"] = "n2";
    jb["relay"] = true;

    auto fwd = h.feed("PA", ja);
    CHECK(fwd.size() == 2);  // forwarded to both peers
    CHECK(h.incidents.empty());
    auto dup = h.feed("n2", jb);
    CHECK(dup.empty());
    REQUIRE_FALSE(h.incidents.empty());
    CHECK(h.incidents.back().find("equivocation") != std::string::npos);
}

TEST_CASE("root entries from unknown porters are dropped", "[sloop]") {
    LoneNode h;
    std::mt19937_64 rng(77);
    KeyPair rogue = keygen(test::rand_seed(rng));
    RootRecord rec{0, sha256(to_bytes("r")), Digest{}};
    Json j{{"type", "root_entry"},
           {"from", "PX"},
           {"porter", "PX"},
           {"key", to_hex(rogue.public_key)},
           {"record", to_hex(rec.encode())},
           {"sig", to_hex(sign(rogue.secret_key, signing_digest(DomainTag::porter_root, rec.encode())))},
           {"relay", false}};
    auto replies = h.feed("PX", j);
    CHECK(replies.empty());
    REQUIRE_FALSE(h.incidents.empty());
    CHECK(h.incidents.back().find("unknown porter") != std::string::npos);
}

TEST_CASE("no-fault cluster commits blocks with valid certificates", "[sloop][sim]") {
    auto cfg = sim::scenario_no_fault(7);
    auto result = sim::run_sim(cfg);
    INFO((result.errors.empty() ? std::string{} : result.errors.front()));
    CHECK(result.errors.empty());
    REQUIRE_FALSE(result.ledgers.empty());
    size_t min_height = SIZE_MAX;
    for (const auto& [n, blocks] : result.ledgers) min_height = std::min(min_height, blocks.size());
    CHECK(min_height >= 4);  // ~T_b cadence over 12s
    // porter roots flow in: each porter anchored at least 3 windows
    for (const auto& [p, roots] : result.committed_roots) CHECK(roots.size() >= 3);
}

TEST_CASE("exactly one leader per term across seeded runs", "[sloop][sim]") {
    for (uint64_t seed = 1; seed <= 30; ++seed) {
        auto result = sim::run_sim(sim::scenario_no_fault(seed));
        CHECK(result.errors.empty());
        CHECK(result.first_leader_at >= 0);
    }
}

TEST_CASE("leader crash in creation phase recovers and commits", "[sloop][sim]") {
    auto result = sim::run_sim(sim::scenario_leader_crash_creation_phase(11));
    INFO((result.errors.empty() ? std::string{} : result.errors.front()));
    CHECK(result.errors.empty());
    size_t max_height = 0;
    for (const auto& [n, blocks] : result.ledgers) max_height = std::max(max_height, blocks.size());
    CHECK(max_height >= 3);
    CHECK(result.elections_held >= 2);  // initial + post-crash
}

TEST_CASE("leader crash in commitment phase preserves the block", "[sloop][sim]") {
    auto result = sim::run_sim(sim::scenario_leader_crash_commitment_phase(13));
    INFO((result.errors.empty() ? std::string{} : result.errors.front()));
    CHECK(result.errors.empty());
    // every porter version carried by any proposal is committed by sim end
    for (const auto& [porter, version] : result.proposed_entries) {
        auto it = result.committed_roots.find(porter);
        bool covered = it != result.committed_roots.end() && !it->second.empty() &&
                       it->second.rbegin()->first >= version;
        INFO(porter << "/" << version);
        CHECK(covered);
    }
}

TEST_CASE("minority partition does not stop commitment", "[sloop][sim]") {
    auto result = sim::run_sim(sim::scenario_minority_partition(17));
    INFO((result.errors.empty() ? std::string{} : result.errors.front()));
    CHECK(result.errors.empty());
    size_t max_height = 0;
    for (const auto& [n, blocks] : result.ledgers) max_height = std::max(max_height, blocks.size());
    CHECK(max_height >= 4);
}

TEST_CASE("equivocating porter is detected and never double-committed", "[sloop][sim]") {
    auto result = sim::run_sim(sim::scenario_porter_equivocation(19));
    CHECK(result.errors.empty());
    bool flagged = false;
    for (const auto& inc : result.incidents)
        if (inc.find("equivocation") != std::string::npos) flagged = true;
    CHECK(flagged);
    // at most one root for (PE, 0) across all ledgers
    std::set<Digest> roots_for_pe;
    for (const auto& [n, blocks] : result.ledgers)
        for (const auto& b : blocks)
            for (const auto& e : b.entries)
                if (e.porter_id == "PE" && e.record.version == 0) roots_for_pe.insert(e.record.trie_root);
    CHECK(roots_for_pe.size() <= 1);
}

TEST_CASE("ledger queries answer with verifying anchor proofs", "[sloop][sim]") {
    auto cfg = sim::scenario_no_fault(23);
    auto result = sim::run_sim(cfg);
    REQUIRE(result.errors.empty());
    const auto& blocks = result.ledgers.begin()->second;
    REQUIRE_FALSE(blocks.empty());
    // recompute an anchor proof offline from the stored blocks
    for (const auto& b : blocks) {
        MemoryBackend be;
        AuthenticatedStore store(StructureKind::jmt, be);
        auto w = store.open_window(0);
        for (const auto& e : b.entries) w.insert(TrieKey::for_public_key(e.porter_key), e.record.encode());
        CHECK(w.seal().digest == b.root);
    }
}
