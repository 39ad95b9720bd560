#pragma once

// Scripted agent behavior for simulation runs. Agents are pure decision
// functions over an observable snapshot plus seeded randomness; they hold
// no hidden channel to the simulation state.
//
// Privacy boundary: `observable` is built from community-public records
// (membership, reputation standings, announcements, the benchmark table)
// plus the agent's own books. It has no field that could carry another
// node's transaction counterparties, so the boundary holds by
// construction.

#include "politeia/economy.hpp"
#include "politeia/org.hpp"
#include "politeia/reputation.hpp"
#include "politeia/rng.hpp"
#include "politeia/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace politeia::sim {

enum class policy_kind : std::uint8_t { honest = 0, lazy = 1, malicious = 2, fraudster = 3 };

std::string policy_name(policy_kind k);
policy_kind policy_from_name(const std::string& name); // throws config_error

struct agent_params {
    std::uint32_t lazy_skip_percent = 40; // chance a lazy agent withholds input
    std::uint32_t chat_percent = 25;      // chance of starting a chat per epoch
    std::uint32_t tx_percent = 25;        // chance of initiating a transfer
};

// Community-wide context shared by every agent; the harness keeps the
// mutable sets current as nodes arrive and announcements are published.
struct agent_context {
    agent_params params;
    std::map<std::string, econ::stater> benchmarks;
    std::set<node_id> clique;             // coordinated malicious nodes
    std::set<node_id> revealed_offenders; // named in public announcements
};

struct observable {
    epoch_t epoch = 0;
    group_id group = 0;
    std::vector<node_id> members;         // the group's current member order
    std::vector<node_id> reputation_rank; // same nodes, best first
    econ::stater own_spendable = 0;       // the agent's own account only
};

struct reward_question {
    node_id beneficiary = 0;
    std::string field;
    econ::stater claimed = 0;
};

struct opinion {
    bool abstain = false;
    std::uint8_t score = 0;
    std::optional<econ::stater> amount;
};

struct tx_intent {
    node_id receiver = 0;
    econ::stater amount = 0;
    bool research = false;
};

class agent {
public:
    agent(policy_kind kind, node_id self, const agent_context* ctx)
        : kind_(kind), self_(self), ctx_(ctx) {}

    policy_kind kind() const { return kind_; }
    node_id self() const { return self_; }

    // The benchmark-anchored amount every honest voter arrives at. Shared
    // so the malicious inflation is an exact multiple of it.
    econ::stater honest_amount(const reward_question& q) const;

    std::vector<node_id> ballot_ranking(const observable& obs, det_rng& rng) const;
    opinion judge_reward(const observable& obs, const reward_question& q, det_rng& rng) const;
    opinion judge_generic(const observable& obs, det_rng& rng) const;
    // Empty map means the agent skipped this evaluation round.
    std::map<rep::dimension, std::uint8_t> evaluate_peer(const observable& obs, node_id subject,
                                                         det_rng& rng) const;
    std::optional<node_id> chat_partner(const observable& obs, det_rng& rng) const;
    std::optional<tx_intent> transaction(const observable& obs, det_rng& rng) const;

private:
    bool in_clique(node_id n) const { return ctx_->clique.count(n) > 0; }

    policy_kind kind_;
    node_id self_;
    const agent_context* ctx_;
};

} // namespace politeia::sim
