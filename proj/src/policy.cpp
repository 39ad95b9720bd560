#include "politeia/policy.hpp"

#include <algorithm>

namespace politeia::sim {

std::string policy_name(policy_kind k) {
    switch (k) {
        case policy_kind::honest: return "honest";
        case policy_kind::lazy: return "lazy";
        case policy_kind::malicious: return "malicious";
        case policy_kind::fraudster: return "fraudster";
    }
    throw protocol_error("unknown policy kind");
}

policy_kind policy_from_name(const std::string& name) {
    if (name == "honest") return policy_kind::honest;
    if (name == "lazy") return policy_kind::lazy;
    if (name == "malicious") return policy_kind::malicious;
    if (name == "fraudster") return policy_kind::fraudster;
    throw config_error("unknown policy '" + name + "'");
}

econ::stater agent::honest_amount(const reward_question& q) const {
    auto it = ctx_->benchmarks.find(q.field);
    if (it == ctx_->benchmarks.end()) it = ctx_->benchmarks.find("default");
    if (it == ctx_->benchmarks.end()) return q.claimed;
    // Claims are taken at face value up to twice the field's benchmark;
    // anything above that is capped rather than trusted.
    return std::min(q.claimed, econ::checked_add(it->second, it->second));
}

std::vector<node_id> agent::ballot_ranking(const observable& obs, det_rng&) const {
    std::vector<node_id> rank = obs.reputation_rank;
    auto promote = [&rank](auto&& keep_first) {
        std::stable_partition(rank.begin(), rank.end(), keep_first);
    };
    switch (kind_) {
        case policy_kind::honest:
        case policy_kind::lazy:
            break;
        case policy_kind::malicious:
            promote([this](node_id n) { return in_clique(n); });
            break;
        case policy_kind::fraudster:
            promote([this](node_id n) { return n == self_; });
            break;
    }
    return rank;
}

opinion agent::judge_reward(const observable&, const reward_question& q, det_rng& rng) const {
    econ::stater fair = honest_amount(q);
    opinion honest_view;
    if (ctx_->revealed_offenders.count(q.beneficiary)) {
        honest_view = {false, 0, 0};
    } else {
        honest_view = {false, 8, fair};
    }

    switch (kind_) {
        case policy_kind::honest:
            return honest_view;
        case policy_kind::lazy:
            if (rng.chance(ctx_->params.lazy_skip_percent, 100)) return {true, 0, {}};
            return honest_view;
        case policy_kind::malicious:
            if (in_clique(q.beneficiary)) {
                econ::stater inflated = fair;
                for (int i = 0; i < 9; ++i) inflated = econ::checked_add(inflated, fair);
                return {false, 10, inflated};
            }
            return {false, 3, fair / 2};
        case policy_kind::fraudster:
            if (q.beneficiary == self_) return {false, 10, q.claimed};
            return honest_view;
    }
    throw protocol_error("unknown policy kind");
}

opinion agent::judge_generic(const observable&, det_rng& rng) const {
    if (kind_ == policy_kind::lazy && rng.chance(ctx_->params.lazy_skip_percent, 100)) {
        return {true, 0, {}};
    }
    return {false, 8, {}};
}

std::map<rep::dimension, std::uint8_t> agent::evaluate_peer(const observable&, node_id subject,
                                                            det_rng& rng) const {
    if (kind_ == policy_kind::lazy && rng.chance(ctx_->params.lazy_skip_percent, 100)) {
        return {};
    }
    std::map<rep::dimension, std::uint8_t> scores;
    if (kind_ == policy_kind::malicious) {
        std::uint8_t flat = in_clique(subject) ? 9 : 2;
        for (rep::dimension d : rep::kDimensions) scores[d] = flat;
        return scores;
    }
    for (rep::dimension d : rep::kDimensions) {
        scores[d] = static_cast<std::uint8_t>(5 + rng.below(4));
    }
    return scores;
}

std::optional<node_id> agent::chat_partner(const observable& obs, det_rng& rng) const {
    std::uint32_t percent = ctx_->params.chat_percent;
    if (kind_ == policy_kind::fraudster) percent /= 4; // keeps a low profile
    if (obs.members.size() < 2 || percent == 0 || !rng.chance(percent, 100)) return {};
    std::vector<node_id> others;
    for (node_id n : obs.members) {
        if (n != self_) others.push_back(n);
    }
    return rng.pick(others);
}

std::optional<tx_intent> agent::transaction(const observable& obs, det_rng& rng) const {
    if (kind_ == policy_kind::fraudster) return {};
    if (obs.own_spendable < 4 || obs.members.size() < 2) return {};
    if (!rng.chance(ctx_->params.tx_percent, 100)) return {};
    std::vector<node_id> others;
    for (node_id n : obs.members) {
        if (n != self_) others.push_back(n);
    }
    tx_intent intent;
    intent.receiver = rng.pick(others);
    intent.amount = 1 + rng.below(obs.own_spendable / 4);
    intent.research = rng.chance(1, 5);
    return intent;
}

} // namespace politeia::sim
