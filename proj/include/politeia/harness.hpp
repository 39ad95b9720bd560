#pragma once

// The simulation driver. One run executes a fixed number of epochs, each
// cycling through the same phases: arrivals and elections, departures and
// social activity, proposals and tallies, settlement, archive and summary
// construction with upward reporting, block assembly, and finality with
// minting. Given (seed, config) the run is fully deterministic: the event
// log and every chain digest are byte-stable across repeats.

#include "politeia/chain_io.hpp"
#include "politeia/deliberation.hpp"
#include "politeia/economy.hpp"
#include "politeia/ledger.hpp"
#include "politeia/policy.hpp"

#include <map>
#include <string>
#include <vector>

namespace politeia::sim {

// A runtime assertion about the scenario itself failed (impossible script
// reference, rectification retries exhausted). Distinct from config_error
// so the CLI can map it to its own exit code.
struct scenario_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct scripted_event {
    epoch_t epoch = 0;
    std::string kind; // node-arrival | node-departure | achievement-publication |
                      // verification-result | superior-disclosure-order |
                      // forced-transfer | inject-core-violation
    node_id node = 0;
    std::string policy;          // node-arrival: policy override
    std::string field = "default"; // achievement-publication: benchmark field
    econ::stater claimed_value = 0;
    bool fraudulent = false;     // hidden true-value flag, never archived
    bool ok = true;              // verification-result verdict
    group_id group = 0;          // inject-core-violation target; 0 picks one
};

struct scenario_config {
    std::uint64_t seed = 1;
    epoch_t epochs = 10;
    std::uint64_t initial_nodes = 5;
    std::map<epoch_t, std::uint64_t> arrival_schedule;
    std::map<std::string, double> policy_mix{{"honest", 1.0}};
    std::map<node_id, std::string> policy_assignments; // overrides the mix
    delib::delib_config deliberation;
    econ::econ_config economy;
    bool hold_rewards = false;
    epoch_t hold_release_epochs = 2; // auto-release unless a script decides
    std::map<std::string, econ::stater> benchmarks{{"default", 100}};
    ledger::ledger_config ledger;
    agent_params agents;
    std::vector<node_id> malicious_clique; // empty: every malicious node
    std::vector<scripted_event> scripts;
};

// Strict parse of the JSON config schema; unknown keys are errors.
scenario_config config_from_json(const std::string& text);
void validate(const scenario_config& cfg); // throws config_error

struct case_summary {
    node_id beneficiary = 0;
    econ::stater amount = 0;
    std::string status;
};

struct run_result {
    std::string event_log; // JSONL, one event per line
    ledger::chain_bundle chain;
    bool verify_ok = false;
    std::string verify_detail;
    std::vector<digest> block_digests; // chain hash per height
    std::map<node_id, econ::stater> balances;
    std::map<node_id, econ::stater> held;
    econ::stater total_minted = 0;
    std::map<case_id, case_summary> cases;
    std::uint64_t conservation_checks = 0;
};

run_result run_scenario(const scenario_config& cfg);

} // namespace politeia::sim
