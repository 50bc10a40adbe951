// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#include <catch2/catch_amalgamated.hpp>

#include "sark/scenarios.hpp"
#include "test_support.hpp"

using namespace sark;
using namespace sark::sim;

TEST_CASE("identical configs produce identical traces", "[simnet]") {
    for (const std::string name : {"no_fault", "leader_crash_commitment_phase", "e2e_three_transfers"}) {
        auto cfg = make_scenario(name, 42);
        REQUIRE(cfg);
        auto a = run_sim(*cfg);
        auto b = run_sim(*cfg);
        CHECK(a.trace == b.trace);
        CHECK(a.messages.sent == b.messages.sent);
        CHECK(a.finality.size() == b.finality.size());
    }
}

TEST_CASE("different seeds produce different traces", "[simnet]") {
    auto a = run_sim(scenario_no_fault(1));
    auto b = run_sim(scenario_no_fault(2));
    CHECK(a.trace != b.trace);
}

TEST_CASE("message accounting conserves every send", "[simnet]") {
    for (const auto& scenario : scenario_suite()) {
        auto result = run_sim(scenario.make(5));
        INFO(scenario.name);
        CHECK(result.messages.sent == result.messages.delivered + result.messages.dropped_partition +
                                          result.messages.dropped_crash + result.messages.pending_at_end);
        if (scenario.name == "minority_partition") CHECK(result.messages.dropped_partition > 0);
        if (scenario.name.find("crash") != std::string::npos) CHECK(result.messages.dropped_crash > 0);
    }
}

TEST_CASE("no-fault finality stays within the best-case envelope", "[simnet]") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        auto cfg = scenario_no_fault(seed);
        auto result = run_sim(cfg);
        REQUIRE_FALSE(result.finality.empty());
        for (const auto& rec : result.finality) {
            INFO("seed " << seed << " height " << rec.height << " finality " << rec.finality_ms());
            CHECK(rec.failures == 0);
            CHECK(rec.finality_ms() <= finality_bound(cfg, rec));
        }
    }
}

TEST_CASE("commitment-phase leader crash stays within the crash envelope", "[simnet]") {
    int crashes_observed = 0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        auto cfg = scenario_leader_crash_commitment_phase(seed);
        auto result = run_sim(cfg);
        CHECK(result.errors.empty());
        for (const auto& rec : result.finality) {
            INFO("seed " << seed << " height " << rec.height << " f=" << rec.failures
                         << " finality " << rec.finality_ms() << " bound " << finality_bound(cfg, rec));
            CHECK(rec.finality_ms() <= finality_bound(cfg, rec));
            if (rec.failures > 0) ++crashes_observed;
        }
    }
    CHECK(crashes_observed > 0);
}

TEST_CASE("end-to-end three transfers settle and verify inside the simulator", "[simnet][e2e]") {
    auto cfg = scenario_e2e_three_transfers(3);
    auto result = run_sim(cfg);
    INFO((result.errors.empty() ? std::string{} : result.errors.front()));
    CHECK(result.errors.empty());
    REQUIRE(result.clients.count("alice"));
    const auto& alice = result.clients.at("alice");
    INFO(alice.detail);
    CHECK(alice.finished);
    CHECK(alice.transfers_completed == 3);
    CHECK(alice.verified);
    CHECK(alice.finished_at < 10000);
}

TEST_CASE("porter crash before submit recovers through client retry", "[simnet]") {
    auto cfg = scenario_porter_crash_before_submit(9);
    auto result = run_sim(cfg);
    INFO((result.errors.empty() ? std::string{} : result.errors.front()));
    CHECK(result.errors.empty());
    REQUIRE(result.clients.count("alice"));
    const auto& alice = result.clients.at("alice");
    INFO(alice.detail);
    CHECK(alice.finished);
    CHECK(alice.verified);
}

TEST_CASE("follower crash does not stall the ledger", "[simnet]") {
    auto result = run_sim(scenario_follower_crash(21));
    CHECK(result.errors.empty());
    size_t max_height = 0;
    for (const auto& [n, blocks] : result.ledgers) max_height = std::max(max_height, blocks.size());
    CHECK(max_height >= 4);
}

TEST_CASE("scenario csv has the documented shape", "[simnet]") {
    auto cfg = scenario_no_fault(4);
    auto result = run_sim(cfg);
    std::string csv = finality_csv_rows(result);
    REQUIRE_FALSE(csv.empty());
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
        CHECK(line.rfind("no_fault,4,", 0) == 0);
    }
    CHECK(finality_csv_header() == "scenario,seed,height,finality_ms,f,delta_ms,bound_ms,within_bound");
}

TEST_CASE("sim config round trips through json", "[simnet]") {
    auto cfg = scenario_sequential_double_leader_crash(31);
    Json j = cfg.to_json();
    auto back = SimConfig::from_json(j);
    CHECK(back.to_json() == j);
    auto a = run_sim(cfg);
    auto b = run_sim(back);
    CHECK(a.trace == b.trace);
}
