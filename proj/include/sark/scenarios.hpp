// Copyright 2026 the Sark developers. Distributed under the Apache License,
// Version 2.0. See the accompanying LICENSE file or
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <sstream>

#include "sark/simnet.hpp"

namespace sark::sim {

struct Scenario {
    std::string name;
    std::function<SimConfig(uint64_t seed)> make;
};

namespace detail {

inline SimConfig base(uint64_t seed, const std::string& name) {
    SimConfig c;
    c.scenario = name;
    c.seed = seed;
    return c;
}

}  // namespace detail

inline SimConfig scenario_no_fault(uint64_t seed) {
    SimConfig c = detail::base(seed, "no_fault");
    c.duration_ms = 12000;
    return c;
}

inline SimConfig scenario_leader_crash_creation_phase(uint64_t seed) {
    SimConfig c = detail::base(seed, "leader_crash_creation_phase");
    c.duration_ms = 16000;
    FaultAction crash;
    crash.on = "block_applied";
    crash.occurrence = 1;
    crash.delay_ms = c.block_ms / 2;  // middle of the creation period
    crash.target = "leader";
    crash.action = "crash";
    FaultAction recover;
    recover.at = 9000;
    recover.target = "crashed";
    recover.action = "recover";
    c.faults = {crash, recover};
    return c;
}

inline SimConfig scenario_leader_crash_commitment_phase(uint64_t seed) {
    SimConfig c = detail::base(seed, "leader_crash_commitment_phase");
    c.duration_ms = 18000;
    FaultAction crash;
    crash.on = "proposal_broadcast";
    crash.occurrence = 2;  // let block 0 settle, crash inside block 1's round
    crash.delay_ms = 1;    // < one network delay: signatures are still in flight
    crash.target = "leader";
    crash.action = "crash";
    FaultAction recover;
    recover.at = 11000;
    recover.target = "crashed";
    recover.action = "recover";
    c.faults = {crash, recover};
    return c;
}

inline SimConfig scenario_sequential_double_leader_crash(uint64_t seed) {
    SimConfig c = detail::base(seed, "sequential_double_leader_crash");
    c.duration_ms = 22000;
    FaultAction first;
    first.on = "proposal_broadcast";
    first.occurrence = 2;
    first.delay_ms = 1;
    first.target = "leader";
    first.action = "crash";
    FaultAction second;  // the re-broadcast by the successor is the next proposal event
    second.on = "proposal_broadcast";
    second.occurrence = 3;
    second.delay_ms = 1;
    second.target = "leader";
    second.action = "crash";
    FaultAction recover1;
    recover1.at = 12000;
    recover1.target = "crashed";
    recover1.action = "recover";
    FaultAction recover2;
    recover2.at = 13000;
    recover2.target = "crashed";
    recover2.action = "recover";
    c.faults = {first, second, recover1, recover2};
    return c;
}

inline SimConfig scenario_follower_crash(uint64_t seed) {
    SimConfig c = detail::base(seed, "follower_crash");
    c.duration_ms = 14000;
    FaultAction crash;
    crash.at = 3000;
    crash.target = "follower";
    crash.action = "crash";
    FaultAction recover;
    recover.at = 9000;
    recover.target = "crashed";
    recover.action = "recover";
    c.faults = {crash, recover};
    return c;
}

inline SimConfig scenario_minority_partition(uint64_t seed) {
    SimConfig c = detail::base(seed, "minority_partition");
    c.duration_ms = 14000;
    FaultAction part;
    part.at = 2500;
    part.action = "partition";
    part.groups = {{"n1", "n2"}, {"n3"}};
    FaultAction heal;
    heal.at = 8000;
    heal.action = "heal";
    c.faults = {part, heal};
    return c;
}

inline SimConfig scenario_porter_crash_before_submit(uint64_t seed) {
    SimConfig c = detail::base(seed, "porter_crash_before_submit");
    c.duration_ms = 16000;
    ClientScript client;
    client.id = "alice";
    client.transfers = 1;
    client.next_venues = {"PA", "PA"};
    client.start_ms = 200;
    c.clients = {client};
    FaultAction crash;  // inside the first window, before it can seal and submit
    crash.at = c.porter_window_ms - 50;
    crash.target = "PA";
    crash.action = "crash";
    FaultAction recover;
    recover.at = 4500;
    recover.target = "PA";
    recover.action = "recover";
    c.faults = {crash, recover};
    return c;
}

inline SimConfig scenario_porter_equivocation(uint64_t seed) {
    SimConfig c = detail::base(seed, "porter_equivocation");
    c.duration_ms = 10000;
    c.equivocator = true;
    c.equivocate_at_ms = 1500;
    return c;
}

inline SimConfig scenario_e2e_three_transfers(uint64_t seed) {
    SimConfig c = detail::base(seed, "e2e_three_transfers");
    c.duration_ms = 10000;
    c.heartbeat_ms = 80;
    c.block_ms = 800;
    c.commit_ms = 300;
    c.election_min_ms = 240;
    c.election_max_ms = 480;
    c.porter_window_ms = 800;
    c.delay_max_ms = 8;
    ClientScript client;
    client.id = "alice";
    client.transfers = 3;
    client.next_venues = {"PA", "PB", "PA", "PA"};  // venue per update: PA, PB, PA
    client.start_ms = 100;
    client.poll_ms = 40;
    c.clients = {client};
    return c;
}

inline std::vector<Scenario> scenario_suite() {
    return {
        {"no_fault", scenario_no_fault},
        {"leader_crash_creation_phase", scenario_leader_crash_creation_phase},
        {"leader_crash_commitment_phase", scenario_leader_crash_commitment_phase},
        {"sequential_double_leader_crash", scenario_sequential_double_leader_crash},
        {"follower_crash", scenario_follower_crash},
        {"minority_partition", scenario_minority_partition},
        {"porter_crash_before_submit", scenario_porter_crash_before_submit},
        {"porter_equivocation", scenario_porter_equivocation},
        {"e2e_three_transfers", scenario_e2e_three_transfers},
    };
}

inline std::optional<SimConfig> make_scenario(const std::string& name, uint64_t seed) {
    for (const auto& s : scenario_suite())
        if (s.name == name) return s.make(seed);
    return std::nullopt;
}

// The paper's finality envelope for a block: T_b + epsilon (epsilon <= T_c)
// with no faults, T_b + T_h + sum(delta) + (f+1)*T_c with f sequential
// leader failures.
inline TimeMs finality_bound(const SimConfig& c, const FinalityRecord& r) {
    if (r.failures == 0) return c.block_ms + c.commit_ms;
    return c.block_ms + c.heartbeat_ms + r.delta_ms() +
           static_cast<TimeMs>(r.failures + 1) * c.commit_ms;
}

inline std::string finality_csv_header() {
    return "scenario,seed,height,finality_ms,f,delta_ms,bound_ms,within_bound";
}

inline std::string finality_csv_rows(const SimResult& result) {
    std::ostringstream out;
    for (const auto& r : result.finality) {
        TimeMs bound = finality_bound(result.config, r);
        out << result.config.scenario << ',' << result.config.seed << ',' << r.height << ','
            << r.finality_ms() << ',' << r.failures << ',' << r.delta_ms() << ',' << bound << ','
            << (r.finality_ms() <= bound ? "true" : "false") << '\n';
    }
    return out.str();
}

}  // namespace sark::sim
