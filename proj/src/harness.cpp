#include "politeia/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace politeia::sim {

using nlohmann::json;
using namespace politeia::ledger;

// ---------------------------------------------------------------------
// Configuration

namespace {

[[noreturn]] void cfg_fail(const std::string& what) { throw config_error(what); }

void allow_keys(const json& o, std::initializer_list<const char*> keys,
                const std::string& where) {
    if (!o.is_object()) cfg_fail(where + " must be an object");
    for (const auto& [k, v] : o.items()) {
        if (std::find_if(keys.begin(), keys.end(),
                         [&](const char* a) { return k == a; }) == keys.end()) {
            cfg_fail("unknown key '" + k + "' in " + where);
        }
    }
}

std::uint64_t cfg_u64(const json& o, const char* k, std::uint64_t fallback) {
    if (!o.contains(k)) return fallback;
    if (!o.at(k).is_number_unsigned()) cfg_fail(std::string("'") + k + "' must be unsigned");
    return o.at(k).get<std::uint64_t>();
}

bool cfg_bool(const json& o, const char* k, bool fallback) {
    if (!o.contains(k)) return fallback;
    if (!o.at(k).is_boolean()) cfg_fail(std::string("'") + k + "' must be a boolean");
    return o.at(k).get<bool>();
}

std::string cfg_str(const json& o, const char* k, const std::string& fallback) {
    if (!o.contains(k)) return fallback;
    if (!o.at(k).is_string()) cfg_fail(std::string("'") + k + "' must be a string");
    return o.at(k).get<std::string>();
}

std::uint64_t cfg_key_u64(const std::string& key, const std::string& where) {
    for (char c : key) {
        if (c < '0' || c > '9') cfg_fail("non-numeric key '" + key + "' in " + where);
    }
    try {
        return std::stoull(key);
    } catch (const std::exception&) {
        cfg_fail("key '" + key + "' out of range in " + where);
    }
}

} // namespace

scenario_config config_from_json(const std::string& text) {
    json o;
    try {
        o = json::parse(text);
    } catch (const json::exception& e) {
        cfg_fail(std::string("config is not valid JSON: ") + e.what());
    }
    allow_keys(o,
               {"seed", "epochs", "initial_nodes", "arrival_schedule", "policy_mix",
                "policy_assignments", "deliberation", "economy", "ledger", "agents",
                "scripted_events"},
               "config");

    scenario_config cfg;
    cfg.seed = cfg_u64(o, "seed", cfg.seed);
    cfg.epochs = cfg_u64(o, "epochs", cfg.epochs);
    cfg.initial_nodes = cfg_u64(o, "initial_nodes", cfg.initial_nodes);

    if (o.contains("arrival_schedule")) {
        if (!o.at("arrival_schedule").is_object()) cfg_fail("'arrival_schedule' must be an object");
        for (const auto& [k, v] : o.at("arrival_schedule").items()) {
            if (!v.is_number_unsigned()) cfg_fail("arrival counts must be unsigned");
            cfg.arrival_schedule[cfg_key_u64(k, "arrival_schedule")] = v.get<std::uint64_t>();
        }
    }
    if (o.contains("policy_mix")) {
        if (!o.at("policy_mix").is_object()) cfg_fail("'policy_mix' must be an object");
        cfg.policy_mix.clear();
        for (const auto& [k, v] : o.at("policy_mix").items()) {
            if (!v.is_number()) cfg_fail("policy fractions must be numbers");
            cfg.policy_mix[k] = v.get<double>();
        }
    }
    if (o.contains("policy_assignments")) {
        if (!o.at("policy_assignments").is_object()) {
            cfg_fail("'policy_assignments' must be an object");
        }
        for (const auto& [k, v] : o.at("policy_assignments").items()) {
            if (!v.is_string()) cfg_fail("policy assignments must name policies");
            cfg.policy_assignments[cfg_key_u64(k, "policy_assignments")] =
                v.get<std::string>();
        }
    }
    if (o.contains("deliberation")) {
        const json& d = o.at("deliberation");
        allow_keys(d,
                   {"deadline_epochs", "adoption_threshold_tenths", "quorum_num", "quorum_den",
                    "third_party_holders"},
                   "deliberation");
        cfg.deliberation.deadline_epochs = cfg_u64(d, "deadline_epochs", 2);
        cfg.deliberation.adoption_threshold_tenths =
            static_cast<std::uint32_t>(cfg_u64(d, "adoption_threshold_tenths", 60));
        cfg.deliberation.quorum_num = static_cast<std::uint32_t>(cfg_u64(d, "quorum_num", 1));
        cfg.deliberation.quorum_den = static_cast<std::uint32_t>(cfg_u64(d, "quorum_den", 2));
        cfg.deliberation.third_party_holders = cfg_u64(d, "third_party_holders", 3);
    }
    if (o.contains("economy")) {
        const json& d = o.at("economy");
        allow_keys(d, {"restriction_epochs", "hold_rewards", "hold_release_epochs", "benchmarks"},
                   "economy");
        cfg.economy.restriction_epochs = cfg_u64(d, "restriction_epochs", 10);
        cfg.hold_rewards = cfg_bool(d, "hold_rewards", false);
        cfg.hold_release_epochs = cfg_u64(d, "hold_release_epochs", 2);
        if (d.contains("benchmarks")) {
            if (!d.at("benchmarks").is_object()) cfg_fail("'benchmarks' must be an object");
            cfg.benchmarks.clear();
            for (const auto& [k, v] : d.at("benchmarks").items()) {
                if (!v.is_number_unsigned()) cfg_fail("benchmark values must be unsigned");
                cfg.benchmarks[k] = v.get<std::uint64_t>();
            }
        }
    }
    if (o.contains("ledger")) {
        const json& d = o.at("ledger");
        allow_keys(d, {"finality_window", "backup_count", "max_retry"}, "ledger");
        cfg.ledger.finality_window = cfg_u64(d, "finality_window", 1);
        cfg.ledger.backup_count = static_cast<std::uint32_t>(cfg_u64(d, "backup_count", 2));
        cfg.ledger.max_retry = static_cast<std::uint32_t>(cfg_u64(d, "max_retry", 3));
    }
    if (o.contains("agents")) {
        const json& d = o.at("agents");
        allow_keys(d, {"lazy_skip_percent", "chat_percent", "transaction_percent",
                       "malicious_clique"},
                   "agents");
        cfg.agents.lazy_skip_percent =
            static_cast<std::uint32_t>(cfg_u64(d, "lazy_skip_percent", 40));
        cfg.agents.chat_percent = static_cast<std::uint32_t>(cfg_u64(d, "chat_percent", 25));
        cfg.agents.tx_percent = static_cast<std::uint32_t>(cfg_u64(d, "transaction_percent", 25));
        if (d.contains("malicious_clique")) {
            if (!d.at("malicious_clique").is_array()) cfg_fail("'malicious_clique' must be a list");
            for (const json& v : d.at("malicious_clique")) {
                if (!v.is_number_unsigned()) cfg_fail("clique entries must be node ids");
                cfg.malicious_clique.push_back(v.get<std::uint64_t>());
            }
        }
    }
    if (o.contains("scripted_events")) {
        if (!o.at("scripted_events").is_array()) cfg_fail("'scripted_events' must be a list");
        for (const json& v : o.at("scripted_events")) {
            allow_keys(v, {"epoch", "kind", "node", "policy", "field", "claimed_value",
                           "fraudulent", "ok", "group"},
                       "scripted event");
            scripted_event ev;
            ev.epoch = cfg_u64(v, "epoch", 0);
            ev.kind = cfg_str(v, "kind", "");
            ev.node = cfg_u64(v, "node", 0);
            ev.policy = cfg_str(v, "policy", "");
            ev.field = cfg_str(v, "field", "default");
            ev.claimed_value = cfg_u64(v, "claimed_value", 0);
            ev.fraudulent = cfg_bool(v, "fraudulent", false);
            ev.ok = cfg_bool(v, "ok", true);
            ev.group = cfg_u64(v, "group", 0);
            cfg.scripts.push_back(std::move(ev));
        }
    }
    validate(cfg);
    return cfg;
}

void validate(const scenario_config& cfg) {
    if (cfg.epochs == 0) cfg_fail("'epochs' must be at least 1");
    if (cfg.initial_nodes == 0) cfg_fail("'initial_nodes' must be at least 1");
    if (cfg.policy_mix.empty()) cfg_fail("'policy_mix' must name at least one policy");
    double sum = 0;
    for (const auto& [name, frac] : cfg.policy_mix) {
        policy_from_name(name);
        if (frac < 0) cfg_fail("policy fraction for '" + name + "' is negative");
        sum += frac;
    }
    if (std::abs(sum - 1.0) > 1e-9) cfg_fail("policy fractions must sum to 1");
    for (const auto& [node, name] : cfg.policy_assignments) {
        if (node == 0) cfg_fail("policy assignment for the reserved treasury id");
        policy_from_name(name);
    }
    if (cfg.deliberation.deadline_epochs == 0) cfg_fail("'deadline_epochs' must be positive");
    if (cfg.deliberation.quorum_den == 0) cfg_fail("'quorum_den' must be positive");
    if (cfg.deliberation.adoption_threshold_tenths > 100) {
        cfg_fail("'adoption_threshold_tenths' exceeds the 0..100 score scale");
    }
    if (cfg.hold_release_epochs == 0) cfg_fail("'hold_release_epochs' must be positive");
    if (cfg.ledger.finality_window == 0) cfg_fail("'finality_window' must be positive");
    if (cfg.ledger.max_retry == 0) cfg_fail("'max_retry' must be positive");
    if (cfg.agents.lazy_skip_percent > 100 || cfg.agents.chat_percent > 100 ||
        cfg.agents.tx_percent > 100) {
        cfg_fail("agent percentages must lie in 0..100");
    }
    static const std::set<std::string> kKinds{
        "node-arrival",        "node-departure",         "achievement-publication",
        "verification-result", "superior-disclosure-order", "forced-transfer",
        "inject-core-violation"};
    for (const auto& ev : cfg.scripts) {
        if (!kKinds.count(ev.kind)) cfg_fail("unknown scripted event kind '" + ev.kind + "'");
        if (ev.epoch >= cfg.epochs) cfg_fail("scripted event past the run horizon");
        if (!ev.policy.empty()) policy_from_name(ev.policy);
        if (ev.kind == "achievement-publication" && ev.claimed_value == 0) {
            cfg_fail("achievement publication needs a positive claimed_value");
        }
        if ((ev.kind == "achievement-publication" || ev.kind == "node-departure" ||
             ev.kind == "verification-result" || ev.kind == "superior-disclosure-order" ||
             ev.kind == "forced-transfer") &&
            ev.node == 0) {
            cfg_fail("scripted '" + ev.kind + "' needs a target node");
        }
    }
}

// ---------------------------------------------------------------------
// Simulation state

namespace {

std::string hex_of(const digest& d) { return to_hex(d); }

struct case_facts {
    node_id beneficiary = 0;
    std::string field;
    econ::stater claimed = 0;
};

struct pending_fix {
    rejection_notice notice;
    group_id group = 0;
    epoch_t subject = 0;
    std::uint32_t retry = 0;
};

struct sim_state {
    const scenario_config& cfg;
    det_rng master;
    org::hierarchy h;
    rep::evaluation_store evals;
    delib::proposal_engine engine;
    econ::economy econ;
    agent_context actx;

    std::map<node_id, key_pair> keys;
    std::map<node_id, agent> agents;
    chain_bundle chain;

    epoch_t now = 0;
    node_id next_node = 1;

    // Per-epoch working state, reset at each epoch boundary.
    std::map<group_id, group_report> reports;       // records by owning group
    std::vector<reward_record> top_records;         // reward desk, flushed to top
    std::vector<econ::invalidation_record> announcements;
    std::map<node_id, std::vector<archive_item>> records_of;
    std::map<digest, std::set<node_id>> expected_holders;
    std::map<group_id, std::vector<node_id>> rank_cache;

    // Cross-epoch protocol state.
    std::map<node_id, digest> prev_archive;
    std::map<group_id, std::map<epoch_t, digest>> built_summaries; // custody inventory
    std::map<epoch_t, std::vector<case_id>> confirmed_during;
    std::map<epoch_t, std::map<group_id, group_report>> true_reports; // pre-injection
    std::vector<pending_fix> pending;
    std::map<case_id, case_facts> facts;
    std::map<proposal_id, case_id> case_of;
    std::set<proposal_id> voided; // host group dissolved before tally
    std::map<case_id, epoch_t> held_since;
    std::set<node_id> scripted_verdict_nodes;
    std::map<node_id, transaction_id> last_tx_of;
    std::map<epoch_t, std::vector<const scripted_event*>> scripts_by_epoch;
    std::vector<std::pair<std::string, std::uint64_t>> mix_cut; // cumulative 1e9 scale

    std::string log;
    std::uint64_t conservation_checks = 0;

    explicit sim_state(const scenario_config& c)
        : cfg(c), master(det_rng::from_seed(c.seed)), engine(c.deliberation), econ(c.economy) {
        actx.params = c.agents;
        actx.benchmarks = c.benchmarks;
        actx.clique.insert(c.malicious_clique.begin(), c.malicious_clique.end());
        for (const auto& ev : c.scripts) {
            scripts_by_epoch[ev.epoch].push_back(&ev);
            if (ev.kind == "verification-result") scripted_verdict_nodes.insert(ev.node);
        }
        std::uint64_t acc = 0;
        for (const auto& [name, frac] : c.policy_mix) {
            acc += static_cast<std::uint64_t>(std::llround(frac * 1e9));
            mix_cut.emplace_back(name, acc);
        }
        mix_cut.back().second = 1'000'000'000; // absorb rounding in the last bin
    }

    void put(json j) {
        log += j.dump();
        log += '\n';
    }

    void settle_money() {
        econ.book().check_conservation();
        ++conservation_checks;
    }

    const key_pair& key_of(node_id n) {
        auto it = keys.find(n);
        if (it != keys.end()) return it->second;
        auto seed_rng = master.fork("node-key", n);
        bytes seed = seed_rng.blob(32);
        std::array<std::uint8_t, 32> raw{};
        std::copy(seed.begin(), seed.end(), raw.begin());
        return keys.emplace(n, key_pair::from_seed(raw)).first->second;
    }

    policy_kind policy_for(node_id n, const std::string& scripted) {
        auto it = cfg.policy_assignments.find(n);
        if (it != cfg.policy_assignments.end()) return policy_from_name(it->second);
        if (!scripted.empty()) return policy_from_name(scripted);
        auto rng = master.fork("policy", n);
        std::uint64_t draw = rng.below(1'000'000'000);
        for (const auto& [name, cut] : mix_cut) {
            if (draw < cut) return policy_from_name(name);
        }
        return policy_from_name(mix_cut.back().first);
    }

    const std::vector<node_id>& rank_of(group_id g) {
        auto it = rank_cache.find(g);
        if (it != rank_cache.end()) return it->second;
        std::vector<rep::candidate> cands;
        for (node_id n : h.group_at(g).members) {
            cands.push_back({n, h.node_at(n).join_epoch});
        }
        return rank_cache.emplace(g, evals.rank(cands, now)).first->second;
    }

    observable observe(node_id self, group_id g) {
        observable obs;
        obs.epoch = now;
        obs.group = g;
        obs.members = h.group_at(g).members;
        obs.reputation_rank = rank_of(g);
        obs.own_spendable = econ.book().spendable(self);
        return obs;
    }

    void add_record(const digest& d, std::set<node_id> holders) {
        for (node_id n : holders) records_of[n].push_back({d, now, true});
        expected_holders[d] = std::move(holders);
    }

    void log_org_events(const std::vector<org::org_event>& events) {
        for (const auto& ev : events) {
            if (const auto* m = std::get_if<org::merge_event>(&ev)) {
                put({{"epoch", now}, {"kind", "org-merge"}, {"from", m->absorbed},
                     {"into", m->into}});
            } else if (const auto* s = std::get_if<org::split_event>(&ev)) {
                put({{"epoch", now}, {"kind", "org-split"}, {"group", s->original},
                     {"low", s->low_half}, {"high", s->high_half}});
            } else if (const auto* d = std::get_if<org::detach_event>(&ev)) {
                put({{"epoch", now}, {"kind", "org-detach"}, {"node", d->node},
                     {"from", d->from_group}, {"successor", d->successor.value_or(0)}});
            } else if (const auto* u = std::get_if<org::succession_event>(&ev)) {
                put({{"epoch", now}, {"kind", "org-succession"}, {"group", u->group},
                     {"departed", u->departed}, {"successor", u->successor}});
            } else if (const auto* r = std::get_if<org::root_event>(&ev)) {
                put({{"epoch", now}, {"kind", "org-root"}, {"group", r->new_root},
                     {"level", r->level}});
            } else if (const auto* x = std::get_if<org::dissolve_event>(&ev)) {
                put({{"epoch", now}, {"kind", "org-dissolve"}, {"group", x->group}});
            } else if (const auto* a = std::get_if<org::readmit_event>(&ev)) {
                put({{"epoch", now}, {"kind", "org-readmit"}, {"node", a->node},
                     {"into", a->into}});
            }
        }
    }

    void arrive(node_id id, const std::string& scripted_policy) {
        if (h.nodes().count(id)) throw scenario_error("scripted arrival of an existing node");
        policy_kind kind = policy_for(id, scripted_policy);
        group_id g = h.admit_node(id, key_of(id).pk, now);
        agents.emplace(id, agent(kind, id, &actx));
        if (kind == policy_kind::malicious && cfg.malicious_clique.empty()) {
            actx.clique.insert(id);
        }
        put({{"epoch", now}, {"kind", "node-arrival"}, {"node", id}, {"group", g},
             {"policy", policy_name(kind)}});
        if (id >= next_node) next_node = id + 1;
    }

    // Runs elections until no group is flagged, recording results, ballots,
    // and custody handovers.
    void settle_elections() {
        auto rng_root = master.fork("election", now);
        for (int round = 0; round < 64; ++round) {
            auto flagged = h.groups_needing_election();
            if (flagged.empty()) return;
            for (group_id g : flagged) {
                if (!h.groups().count(g)) continue; // dissolved by an earlier round
                run_group_election(g, rng_root.fork("group", g).fork("round", round));
            }
        }
        throw scenario_error("elections did not settle");
    }

    void run_group_election(group_id g, det_rng rng) {
        const auto& grp = h.group_at(g);
        std::uint32_t declared = static_cast<std::uint32_t>(grp.size());
        std::vector<org::ballot> ballots;
        org::composite_index composite;
        for (node_id m : grp.members) {
            composite.set(m, evals.aggregate(m, now).composite);
        }
        std::vector<node_id> member_order = grp.members;
        for (node_id m : member_order) {
            auto voter_rng = rng.fork("voter", m);
            std::vector<node_id> ranking =
                agents.at(m).ballot_ranking(observe(m, g), voter_rng);
            ballots.push_back({m, ranking});
            signed_vote sv{m, g, now, ranking, {}};
            bytes payload = sv.signed_payload();
            sv.sig = sign(key_of(m), std::span<const std::uint8_t>(payload.data(), payload.size()));
            add_record(sv.record_digest(), {m});
        }
        auto result = h.run_election(g, ballots, composite);
        std::vector<node_id> pre_cores = grp.core_nodes;
        log_org_events(h.confirm_election(g, result.winners));

        reports[g].elections.push_back({g, declared, result.winners, result.host});
        put({{"epoch", now}, {"kind", "election"}, {"group", g}, {"host", result.host},
             {"size", declared}, {"winners", result.winners}});

        if (!h.groups().count(g)) return; // structural cascade removed the group
        std::vector<node_id> post_cores = h.group_at(g).core_nodes;
        if (!pre_cores.empty() && pre_cores != post_cores && !post_cores.empty()) {
            std::vector<digest> inventory;
            for (const auto& [e, d] : built_summaries[g]) inventory.push_back(d);
            auto record = build_core_handover(
                g, now, inventory, inventory, pre_cores, post_cores,
                [this](node_id n) -> const key_pair& { return key_of(n); });
            digest d = record.record_digest();
            std::set<node_id> parties(pre_cores.begin(), pre_cores.end());
            parties.insert(post_cores.begin(), post_cores.end());
            add_record(d, std::move(parties));
            reports[g].handovers.push_back(std::move(record));
            put({{"epoch", now}, {"kind", "handover"}, {"group", g}, {"digest", hex_of(d)}});
        }
    }

    bool blocked(node_id n) const {
        const auto& ident = h.node_at(n);
        return ident.status != org::node_status::active;
    }

    // --- phase 1: arrivals, restriction expiry, rebalance, elections

    void phase_arrivals() {
        for (const auto& [n, ident] : h.nodes()) {
            if (ident.status == org::node_status::restricted && ident.restricted_until <= now) {
                h.node_mut(n).status = org::node_status::active;
                put({{"epoch", now}, {"kind", "restriction-lifted"}, {"node", n}});
            }
        }
        if (now == 0) {
            for (std::uint64_t i = 1; i <= cfg.initial_nodes; ++i) arrive(i, "");
        }
        auto it = cfg.arrival_schedule.find(now);
        std::uint64_t scheduled = it == cfg.arrival_schedule.end() ? 0 : it->second;
        for (std::uint64_t i = 0; i < scheduled; ++i) arrive(next_node, "");
        for (const scripted_event* ev : scripts_at("node-arrival")) {
            arrive(ev->node == 0 ? next_node : ev->node, ev->policy);
        }
        log_org_events(h.rebalance());
        settle_elections();
    }

    std::vector<const scripted_event*> scripts_at(const std::string& kind) {
        std::vector<const scripted_event*> out;
        auto it = scripts_by_epoch.find(now);
        if (it == scripts_by_epoch.end()) return out;
        for (const scripted_event* ev : it->second) {
            if (ev->kind == kind) out.push_back(ev);
        }
        return out;
    }

    // --- phase 2: departures, transfers, chats, evaluations

    void phase_social() {
        bool structural = false;
        for (const scripted_event* ev : scripts_at("node-departure")) {
            if (!h.nodes().count(ev->node) || !h.node_at(ev->node).participates()) {
                throw scenario_error("scripted departure of an absent node");
            }
            put({{"epoch", now}, {"kind", "node-departure"}, {"node", ev->node}});
            log_org_events(h.remove_node(ev->node));
            structural = true;
        }
        for (const scripted_event* ev : scripts_at("forced-transfer")) {
            structural |= force_transfer(ev->node);
        }
        if (structural) {
            log_org_events(h.rebalance());
            settle_elections();
        }

        auto chat_rng = master.fork("chat", now);
        auto eval_rng = master.fork("eval", now);
        for (const auto& [n, ident] : h.nodes()) {
            if (!ident.participates() || ident.memberships.empty()) continue;
            group_id g = h.primary_group(n);
            observable obs = observe(n, g);

            auto rn = chat_rng.fork("node", n);
            if (auto partner = agents.at(n).chat_partner(obs, rn)) {
                auto chat = engine.record_chat(h, n, *partner, rn.blob(8), std::nullopt,
                                               key_of(n), rn, now);
                std::set<node_id> holders(chat.archive_holders.begin(),
                                          chat.archive_holders.end());
                add_record(chat.record_digest(), std::move(holders));
                put({{"epoch", now}, {"kind", "chat"}, {"digest", hex_of(chat.record_digest())},
                     {"receiver", *partner}, {"sender", n}});
            }

            auto re = eval_rng.fork("node", n);
            std::vector<node_id> peers;
            for (node_id m : h.group_at(g).members) {
                if (m != n) peers.push_back(m);
            }
            if (peers.empty()) continue;
            for (std::size_t idx : re.sample(peers.size(), std::min<std::size_t>(3, peers.size()))) {
                node_id subject = peers[idx];
                auto scores = agents.at(n).evaluate_peer(obs, subject, re);
                if (scores.empty()) continue;
                rep::evaluation ev{n, subject, now, std::move(scores), {}};
                bytes payload = ev.signed_payload();
                ev.sig = sign(key_of(n),
                              std::span<const std::uint8_t>(payload.data(), payload.size()));
                digest d = evals.submit(ev, key_of(n).pk, true, now);
                add_record(d, {n, subject});
                put({{"epoch", now}, {"kind", "evaluation"}, {"digest", hex_of(d)},
                     {"evaluator", n}, {"subject", subject}});
            }
        }
    }

    bool force_transfer(node_id n) {
        if (!h.nodes().count(n) || h.node_at(n).memberships.empty()) {
            put({{"epoch", now}, {"kind", "forced-transfer"}, {"applied", false}, {"from", 0},
                 {"node", n}, {"to", 0}});
            return false;
        }
        group_id from = h.primary_group(n);
        int level = h.group_at(from).level;
        group_id to = 0;
        std::size_t best_size = org::kMaxGroupSize;
        for (const auto& [gid, grp] : h.groups()) {
            if (gid == from || grp.level != level || grp.size() >= org::kMaxGroupSize) continue;
            if (!h.lca(from, gid)) continue;
            if (to == 0 || grp.size() < best_size || (grp.size() == best_size && gid < to)) {
                to = gid;
                best_size = grp.size();
            }
        }
        if (to == 0) {
            put({{"epoch", now}, {"kind", "forced-transfer"}, {"applied", false}, {"from", from},
                 {"node", n}, {"to", 0}});
            return false;
        }
        group_id orderer = *h.lca(from, to);
        log_org_events(h.transfer_node(orderer, n, from, to));
        put({{"epoch", now}, {"kind", "forced-transfer"}, {"applied", true}, {"from", from},
             {"node", n}, {"to", to}});
        return true;
    }

    // --- phase 3: achievements, proposals, feedback, tallies, routing

    void phase_deliberation() {
        for (const scripted_event* ev : scripts_at("achievement-publication")) {
            publish_achievement(*ev);
        }

        auto fb_rng = master.fork("feedback", now);
        for (proposal_id p : engine.open_proposals()) {
            if (voided.count(p)) continue;
            const auto& prop = engine.proposal_at(p);
            if (!h.groups().count(prop.group)) continue; // group dissolved mid-flight
            std::set<node_id> already;
            for (const auto& f : engine.feedbacks_of(p)) already.insert(f.voter);
            for (node_id m : h.group_at(prop.group).members) {
                if (already.count(m)) continue;
                auto rn = fb_rng.fork("proposal", p).fork("node", m);
                observable obs = observe(m, prop.group);
                opinion op;
                auto case_it = case_of.find(p);
                if (case_it != case_of.end()) {
                    const case_facts& cf = facts.at(case_it->second);
                    op = agents.at(m).judge_reward(
                        obs, {cf.beneficiary, cf.field, cf.claimed}, rn);
                } else {
                    op = agents.at(m).judge_generic(obs, rn);
                }
                if (op.abstain) continue;
                delib::feedback f{p, m, op.score, "", op.amount, now, {}};
                bytes payload = f.signed_payload();
                f.sig = sign(key_of(m),
                             std::span<const std::uint8_t>(payload.data(), payload.size()));
                engine.submit_feedback(h, f, key_of(m).pk, now);
                json line{{"epoch", now}, {"kind", "feedback"},
                          {"digest", hex_of(f.record_digest())}, {"proposal", p},
                          {"score", op.score}, {"voter", m}};
                if (op.amount) line["amount"] = *op.amount;
                put(std::move(line));
                add_record(f.record_digest(), {m});
            }
        }

        for (proposal_id p : engine.open_proposals()) {
            if (voided.count(p)) continue;
            if (!h.groups().count(engine.proposal_at(p).group)) {
                void_orphaned(p);
                continue;
            }
            if (!engine.ready_for_tally(h, p, now)) continue;
            tally_and_route(p);
        }
    }

    // A merge can erase a group while one of its proposals is still open.
    // The member set the quorum was defined against no longer exists, so the
    // proposal can never be tallied; drop it and close any attached case.
    void void_orphaned(proposal_id p) {
        voided.insert(p);
        put({{"epoch", now}, {"kind", "proposal-voided"}, {"proposal", p},
             {"reason", "group dissolved"}});
        auto case_it = case_of.find(p);
        if (case_it == case_of.end()) return;
        case_id c = case_it->second;
        econ.reject_case(c);
        top_records.push_back({c, facts.at(c).beneficiary, 0,
                               static_cast<std::uint8_t>(econ::case_status::rejected)});
        put({{"epoch", now}, {"kind", "reward-rejected"}, {"case", c}});
    }

    void publish_achievement(const scripted_event& ev) {
        if (!h.nodes().count(ev.node) || blocked(ev.node)) {
            throw scenario_error("achievement publication by an absent or blocked node");
        }
        byte_writer w;
        w.u64(ev.node);
        w.str(ev.field);
        w.u64(ev.claimed_value);
        w.u64(now);
        bytes payload = w.take();
        digest d = sha256(payload);
        econ.register_achievement(d);
        add_record(d, {ev.node});
        put({{"epoch", now}, {"kind", "achievement"}, {"claimed", ev.claimed_value},
             {"digest", hex_of(d)}, {"field", ev.field}, {"fraudulent", ev.fraudulent},
             {"node", ev.node}});

        if (!econ::economy::check_activation(h)) {
            put({{"epoch", now}, {"kind", "reward-denied"}, {"node", ev.node},
                 {"reason", "activation"}});
            return;
        }
        group_id origin = h.primary_group(ev.node);
        case_id c = econ.open_reward_case(h, ev.node, ev.node, origin, d);
        facts[c] = {ev.node, ev.field, ev.claimed_value};

        delib::proposal prop;
        prop.kind = delib::proposal_kind::reward_evaluation;
        prop.proposer = ev.node;
        prop.group = origin;
        prop.payload = payload;
        prop.submitted_epoch = now;
        prop.deadline_epoch = now + cfg.deliberation.deadline_epochs;
        bytes signed_part = prop.signed_payload();
        prop.sig = sign(key_of(ev.node),
                        std::span<const std::uint8_t>(signed_part.data(), signed_part.size()));
        auto submitted = engine.submit(h, prop, key_of(ev.node).pk, now);
        case_of[submitted.id] = c;
        add_record(engine.proposal_at(submitted.id).record_digest(), {ev.node});
        put({{"epoch", now}, {"kind", "proposal"},
             {"digest", hex_of(engine.proposal_at(submitted.id).record_digest())},
             {"group", origin}, {"id", submitted.id}, {"proposer", ev.node},
             {"type", kind_name(prop.kind)}});
        put({{"epoch", now}, {"kind", "case-opened"}, {"case", c}, {"group", origin},
             {"node", ev.node}, {"proposal", submitted.id}});
    }

    void tally_and_route(proposal_id p) {
        group_id g = engine.proposal_at(p).group;
        auto kind = engine.proposal_at(p).kind;
        const delib::outcome& out = engine.tally(h, p, now);
        put({{"epoch", now}, {"kind", "tally"}, {"adopted", out.adopted},
             {"mean_den", out.mean.den}, {"mean_num", out.mean.num}, {"proposal", p},
             {"quorum_failed", out.quorum_failed}, {"voters", out.voters.size()},
             {"waived", out.waived.size()}});

        auto case_it = case_of.find(p);
        delib::routing_choice choice = delib::routing_choice::finalize;
        if (case_it != case_of.end() && out.adopted && g != h.top_group()) {
            choice = delib::routing_choice::escalate;
        }
        auto opened = engine.route(h, p, choice, now);

        if (h.groups().count(g)) {
            reports[g].outcomes.push_back({engine.proposal_at(p).record_digest(),
                                           static_cast<std::uint8_t>(kind), out.adopted,
                                           out.mean.num, out.mean.den,
                                           static_cast<std::uint8_t>(choice)});
        }
        if (case_it == case_of.end()) return;
        case_id c = case_it->second;

        if (!out.adopted) {
            econ.reject_case(c);
            top_records.push_back({c, facts.at(c).beneficiary, 0,
                                   static_cast<std::uint8_t>(econ::case_status::rejected)});
            put({{"epoch", now}, {"kind", "reward-rejected"}, {"case", c}});
            return;
        }

        std::vector<econ::stater> proposed;
        for (const auto& f : engine.feedbacks_of(p)) {
            if (f.proposed_amount) proposed.push_back(*f.proposed_amount);
        }
        if (proposed.empty()) { // adopted but nobody priced it; treat as rejected
            econ.reject_case(c);
            put({{"epoch", now}, {"kind", "reward-rejected"}, {"case", c}});
            return;
        }
        econ.record_group_amount(c, g, proposed);
        econ::stater level_amount = econ.case_at(c).per_group_amounts.at(g);
        put({{"epoch", now}, {"kind", "group-amount"}, {"amount", level_amount}, {"case", c},
             {"group", g}});

        if (choice == delib::routing_choice::escalate) {
            econ.mark_escalating(c);
            for (proposal_id next : opened) case_of[next] = c;
            put({{"epoch", now}, {"kind", "routing"}, {"choice", "escalate"}, {"opened", opened},
                 {"proposal", p}});
            return;
        }
        econ.confirm_reward(c, level_amount, cfg.hold_rewards);
        confirmed_during[now].push_back(c);
        top_records.push_back({c, facts.at(c).beneficiary, level_amount,
                               static_cast<std::uint8_t>(econ::case_status::confirmed)});
        put({{"epoch", now}, {"kind", "reward-confirmed"}, {"amount", level_amount}, {"case", c},
             {"hold", cfg.hold_rewards}});
    }

    // --- phase 4: verification verdicts, holds, transfers, disclosures

    void phase_settlement() {
        for (const scripted_event* ev : scripts_at("verification-result")) {
            case_id target = 0;
            for (const auto& [c, rc] : econ.cases()) {
                if (rc.beneficiary == ev->node && rc.status == econ::case_status::held) {
                    target = c;
                    break;
                }
            }
            if (target == 0) throw scenario_error("verification verdict without a held reward");
            if (ev->ok) {
                econ.release_hold(target);
                put({{"epoch", now}, {"kind", "hold-released"}, {"case", target}});
            } else {
                auto inv = econ.fail_verification(h, target, now);
                actx.revealed_offenders.insert(ev->node);
                top_records.push_back({target, ev->node, econ.case_at(target).final_amount,
                                       static_cast<std::uint8_t>(econ::case_status::rejected)});
                put({{"epoch", now}, {"kind", "verification-failed"}, {"case", target},
                     {"digest", hex_of(inv.record_digest())}, {"node", ev->node},
                     {"restricted_until", inv.restricted_until}});
                announcements.push_back(std::move(inv));
            }
            settle_money();
        }

        std::vector<case_id> to_release;
        for (const auto& [c, since] : held_since) {
            if (econ.case_at(c).status != econ::case_status::held) continue;
            if (scripted_verdict_nodes.count(econ.case_at(c).beneficiary)) continue;
            if (now - since >= cfg.hold_release_epochs) to_release.push_back(c);
        }
        for (case_id c : to_release) {
            econ.release_hold(c);
            put({{"epoch", now}, {"kind", "hold-released"}, {"case", c}});
            settle_money();
        }

        auto tx_rng = master.fork("tx", now);
        for (const auto& [n, ident] : h.nodes()) {
            if (blocked(n) || ident.memberships.empty()) continue;
            auto rn = tx_rng.fork("node", n);
            observable obs = observe(n, h.primary_group(n));
            auto intent = agents.at(n).transaction(obs, rn);
            if (!intent) continue;
            node_id r = intent->receiver;
            if (!h.node_at(r).participates() || intent->amount == 0 ||
                intent->amount > econ.book().spendable(n)) {
                continue;
            }
            execute_transfer(n, r, intent->amount, intent->research);
        }

        for (const scripted_event* ev : scripts_at("superior-disclosure-order")) {
            auto it = last_tx_of.find(ev->node);
            bool applied = false;
            transaction_id t = it == last_tx_of.end() ? 0 : it->second;
            if (t != 0 && !econ.transaction_at(t).disclosed) {
                econ.disclose_by_order(h, t, h.top_group());
                applied = true;
            }
            put({{"epoch", now}, {"kind", "disclosure"}, {"applied", applied}, {"by", "order"},
                 {"tx", t}});
        }
    }

    void execute_transfer(node_id sender, node_id receiver, econ::stater amount, bool research) {
        econ::transaction tx;
        tx.sender = sender;
        tx.receiver = receiver;
        tx.amount = amount;
        tx.epoch = now;
        tx.research_tagged = research;
        bytes payload = tx.dual_signed_payload();
        auto span = std::span<const std::uint8_t>(payload.data(), payload.size());
        tx.sender_sig = sign(key_of(sender), span);
        tx.receiver_sig = sign(key_of(receiver), span);
        auto [sr, rr] = econ.execute_transaction(h, tx, key_of(sender), key_of(receiver));
        settle_money();
        last_tx_of[sender] = sr.tx;
        add_record(sr.archive_hash, {sender, receiver});
        put({{"epoch", now}, {"kind", "transaction"}, {"amount", amount},
             {"digest", hex_of(sr.archive_hash)}, {"receiver", receiver}, {"research", research},
             {"sender", sender}, {"tx", sr.tx}});

        econ::confirmation_record conf;
        auto verdict = econ.lca_confirm(h, sr, key_of(sender).pk, rr, key_of(receiver).pk, now,
                                        &conf);
        if (!verdict.confirmed) {
            throw scenario_error("policy-generated transfer failed cross confirmation");
        }
        if (h.groups().count(verdict.confirmer)) {
            reports[verdict.confirmer].confirmed_transactions.push_back(
                {sr.tx, amount, verdict.confirmer, sr.archive_hash});
        }
        put({{"epoch", now}, {"kind", "lca-confirmed"}, {"group", verdict.confirmer},
             {"tx", sr.tx}});
    }

    // --- phase 5: rectifications, archives, snapshot, summaries, reporting

    void phase_ledger() {
        auto due = std::move(pending);
        pending.clear();
        for (auto& fix : due) rectify(fix);

        build_archives();

        h.set_epoch(now);
        snapshot_info snap = snapshot_from(h);
        chain.snapshots[now] = std::move(snap);
        chain.index_snapshot(now);

        std::vector<group_id> gids;
        for (const auto& [gid, grp] : h.groups()) gids.push_back(gid);
        auto backup_rng = master.fork("backup", now);
        chain.backups[now] = assign_cross_backups(gids, cfg.ledger.backup_count, backup_rng);
        chain.index_backups(now);

        build_summaries();
    }

    void build_archives() {
        std::set<node_id> present;
        for (const auto& [gid, grp] : h.groups()) {
            present.insert(grp.members.begin(), grp.members.end());
        }
        for (node_id n : present) {
            digest prev = prev_archive.count(n) ? prev_archive[n] : zero_digest();
            auto it = records_of.find(n);
            std::vector<archive_item> items = it == records_of.end()
                                                  ? std::vector<archive_item>{}
                                                  : it->second;
            auto archive = build_node_archive(n, now, prev, items, key_of(n));
            prev_archive[n] = archive.archive_digest();
            chain.archives[now][n] = std::move(archive);
            chain.index_archive(now, n);
        }
        audit_archives(present);
    }

    // Every recorded digest must sit in exactly the archives of its
    // assigned holders; this is the log-to-archive audit pass.
    void audit_archives(const std::set<node_id>& present) {
        const auto& per_node = chain.archives.at(now);
        for (const auto& [d, holders] : expected_holders) {
            for (node_id n : present) {
                const auto& digs = per_node.at(n).record_digests;
                bool has = std::find(digs.begin(), digs.end(), d) != digs.end();
                if (has != (holders.count(n) > 0)) {
                    throw protocol_error("archive audit: record held by the wrong nodes");
                }
            }
        }
    }

    void build_summaries() {
        const snapshot_info& snap = chain.snapshots.at(now);
        group_id top = snap.top();

        std::map<group_id, group_id> victims; // group -> 1 if injected
        for (const scripted_event* ev : scripts_at("inject-core-violation")) {
            victims[pick_victim(*ev)] = 1;
        }

        std::vector<std::pair<int, group_id>> order;
        for (const auto& [gid, sg] : snap.groups) order.emplace_back(sg.level, gid);
        std::sort(order.begin(), order.end());

        for (const auto& [level, g] : order) {
            const snap_group& sg = snap.groups.at(g);
            group_report report = std::move(reports[g]);
            if (g == top) {
                for (auto& r : top_records) report.reward_cases.push_back(r);
                top_records.clear();
                for (auto& a : announcements) report.announcements.push_back(std::move(a));
                announcements.clear();
            }

            if (victims.count(g)) {
                true_reports[now][g] = report; // keep the honest version
                election_record lie;
                lie.group = g;
                lie.declared_size = static_cast<std::uint32_t>(sg.members.size());
                std::size_t liars = org::required_core_count(sg.members.size()) + 1;
                if (sg.members.size() < liars) {
                    throw scenario_error("injection target too small to fake a core set");
                }
                lie.winners.assign(sg.members.begin(), sg.members.begin() + liars);
                lie.host = sg.members.front();
                report.elections.push_back(std::move(lie));
            }

            store_summary(now, g, std::move(report),
                          chain.summaries.count(now) && chain.summaries.at(now).count(g)
                              ? chain.summaries.at(now).at(g).revision + 1
                              : 0);

            if (sg.parent) report_to_parent(g, *sg.parent);
        }

        assemble_epoch_block();
    }

    group_id pick_victim(const scripted_event& ev) {
        if (ev.group != 0) {
            if (!h.groups().count(ev.group)) throw scenario_error("injection target is gone");
            return ev.group;
        }
        if (ev.node != 0) return h.primary_group(ev.node);
        for (const auto& [gid, grp] : h.groups()) {
            if (grp.parent) return gid;
        }
        throw scenario_error("no subordinate group to inject a violation into");
    }

    // Builds and stores the (epoch, group) summary at the given revision
    // from bundle state, signed by the epoch snapshot's signer set.
    group_summary& store_summary(epoch_t e, group_id g, group_report report,
                                 std::uint32_t revision) {
        const snapshot_info& snap = chain.snapshots.at(e);
        const snap_group& sg = snap.groups.at(g);
        std::map<node_id, node_archive> member_archives;
        std::map<node_id, public_key> pks;
        for (node_id n : sg.members) {
            member_archives[n] = chain.archives.at(e).at(n);
            pks[n] = snap.nodes.at(n).pk;
        }
        std::map<group_id, group_summary> children;
        for (group_id c : sg.children) children[c] = chain.summaries.at(e).at(c);
        digest hier = chain.snapshot_digests.at(e);
        digest backs = g == snap.top() ? chain.backup_digests.at(e) : zero_digest();
        auto summary = build_group_summary(
            g, e, revision, hier, backs, std::move(report), member_archives, children, pks,
            sg.children, snap.signers_of(g),
            [this](node_id n) -> const key_pair& { return key_of(n); });
        built_summaries[g][e] = summary.declared_digest;
        auto& slot = chain.summaries[e][g];
        slot = std::move(summary);
        chain.index_summary(e, g);
        return slot;
    }

    void report_to_parent(group_id g, group_id parent) {
        const auto& summary = chain.summaries.at(now).at(g);
        std::map<node_id, node_archive> member_archives;
        for (node_id n : h.group_at(g).members) {
            member_archives[n] = chain.archives.at(now).at(n);
        }
        std::map<group_id, group_summary> children;
        for (group_id c : h.group_at(g).children) {
            children[c] = chain.summaries.at(now).at(c);
        }
        auto notice = report_up(h, parent, summary, member_archives, children,
                                key_of(h.leaders(parent).front()));
        if (!notice) return;
        put({{"epoch", now}, {"kind", "rejection"}, {"digest", hex_of(notice->record_digest())},
             {"from", parent}, {"reasons", notice->reasons}, {"subject", notice->epoch},
             {"to", g}});
        pending.push_back({*notice, g, notice->epoch, 0});
        reports[parent].rejections_issued.push_back(std::move(*notice));
    }

    void rectify(pending_fix& fix) {
        group_id g = fix.group;
        epoch_t subject = fix.subject;
        if (!h.groups().count(g)) throw scenario_error("rectification target vanished");
        const snapshot_info& snap = chain.snapshots.at(subject);

        bool wants_election =
            std::find(fix.notice.required_rectifications.begin(),
                      fix.notice.required_rectifications.end(),
                      rectify_action::re_elect) != fix.notice.required_rectifications.end();
        if (wants_election) {
            run_group_election(g, master.fork("rectify", now).fork("group", g));
            if (!h.groups().count(g)) throw scenario_error("rectification target vanished");
        }

        rectification_record rect;
        rect.group = g;
        rect.epoch = now;
        rect.notice = fix.notice.record_digest();
        rect.actions = fix.notice.required_rectifications;
        rect.note = "re-ran the election and rebuilt the summary";
        bytes payload = rect.signed_payload();
        rect.sig = sign(key_of(h.leaders(g).front()),
                        std::span<const std::uint8_t>(payload.data(), payload.size()));

        group_report corrected;
        auto te = true_reports.find(subject);
        if (te != true_reports.end() && te->second.count(g)) {
            corrected = te->second.at(g);
        } else {
            corrected = chain.summaries.at(subject).at(g).report;
        }
        corrected.rectifications.push_back(rect);
        put({{"epoch", now}, {"kind", "rectification"}, {"digest", hex_of(rect.record_digest())},
             {"group", g}, {"notice", hex_of(rect.notice)}, {"subject", subject}});

        std::uint32_t rev = chain.summaries.at(subject).at(g).revision + 1;
        store_summary(subject, g, std::move(corrected), rev);
        put({{"epoch", now}, {"kind", "summary-rebuilt"}, {"epoch_rebuilt", subject},
             {"group", g}, {"revision", rev}});

        // Ancestors recommit their child hashes; their own reports stand.
        std::optional<group_id> up = snap.groups.at(g).parent;
        while (up) {
            std::uint32_t arev = chain.summaries.at(subject).at(*up).revision + 1;
            group_report same = chain.summaries.at(subject).at(*up).report;
            store_summary(subject, *up, std::move(same), arev);
            put({{"epoch", now}, {"kind", "summary-rebuilt"}, {"epoch_rebuilt", subject},
                 {"group", *up}, {"revision", arev}});
            up = snap.groups.at(*up).parent;
        }

        rebuild_block(subject);
        revalidate(fix, snap);
    }

    void revalidate(pending_fix& fix, const snapshot_info& snap) {
        group_id g = fix.group;
        const snap_group& sg = snap.groups.at(g);
        if (!sg.parent || !h.groups().count(g) || !h.groups().count(*sg.parent)) return;
        const auto& live = h.group_at(g);
        if (live.members != sg.members || live.children != sg.children ||
            h.parent_of(g) != sg.parent || h.leaders(g) != snap.signers_of(g)) {
            return; // membership drifted; custody holders stand behind the rebuild
        }
        std::map<node_id, node_archive> member_archives;
        for (node_id n : sg.members) member_archives[n] = chain.archives.at(fix.subject).at(n);
        std::map<group_id, group_summary> children;
        for (group_id c : sg.children) children[c] = chain.summaries.at(fix.subject).at(c);
        auto again = report_up(h, *sg.parent, chain.summaries.at(fix.subject).at(g),
                               member_archives, children,
                               key_of(h.leaders(*sg.parent).front()));
        if (!again) return;
        if (fix.retry + 1 >= cfg.ledger.max_retry) {
            throw scenario_error("rectification retries exhausted for group " +
                                 std::to_string(g));
        }
        put({{"epoch", now}, {"kind", "rejection"}, {"digest", hex_of(again->record_digest())},
             {"from", *sg.parent}, {"reasons", again->reasons}, {"subject", again->epoch},
             {"to", g}});
        pending.push_back({*again, g, again->epoch, fix.retry + 1});
        reports[*sg.parent].rejections_issued.push_back(std::move(*again));
    }

    void rebuild_block(epoch_t e) {
        const snapshot_info& snap = chain.snapshots.at(e);
        group_id top = snap.top();
        digest prev = e == 0 ? zero_digest() : chain.block_summary_digests.at(e - 1);
        auto block = assemble_block(e, prev, chain.summaries.at(e).at(top),
                                    snap.signers_of(top),
                                    [this](node_id n) -> const key_pair& { return key_of(n); });
        chain.blocks[e] = std::move(block);
        chain.index_block(e);
        put({{"epoch", now}, {"kind", "block-rebuilt"},
             {"digest", hex_of(chain.block_summary_digests.at(e))}, {"height", e}});
    }

    // --- phases 6 and 7: block assembly, finality, minting

    void assemble_epoch_block() {
        const snapshot_info& snap = chain.snapshots.at(now);
        group_id top = snap.top();
        digest prev = now == 0 ? zero_digest() : chain.block_summary_digests.at(now - 1);
        auto block = assemble_block(now, prev, chain.summaries.at(now).at(top),
                                    snap.signers_of(top),
                                    [this](node_id n) -> const key_pair& { return key_of(n); });
        chain.blocks[now] = std::move(block);
        chain.index_block(now);
        put({{"epoch", now}, {"kind", "block"},
             {"digest", hex_of(chain.block_summary_digests.at(now))}, {"height", now}});
    }

    void phase_finality() {
        std::map<epoch_t, std::vector<digest>> notices;
        std::map<digest, epoch_t> rectified;
        for (const auto& [e, per_group] : chain.summaries) {
            for (const auto& [g, s] : per_group) {
                for (const auto& n : s.report.rejections_issued) {
                    notices[n.epoch].push_back(n.record_digest());
                }
                for (const auto& r : s.report.rectifications) {
                    auto it = rectified.find(r.notice);
                    if (it == rectified.end() || r.epoch < it->second) {
                        rectified[r.notice] = r.epoch;
                    }
                }
            }
        }
        for (auto& [height, block] : chain.blocks) {
            epoch_t expected = height + cfg.ledger.finality_window;
            bool resolvable = true;
            auto it = notices.find(height);
            if (it != notices.end()) {
                for (const digest& nd : it->second) {
                    auto rit = rectified.find(nd);
                    if (rit == rectified.end()) {
                        resolvable = false;
                        break;
                    }
                    expected = std::max(expected, rit->second + cfg.ledger.finality_window);
                }
            }
            bool want = resolvable && expected <= now;
            if (block.finalized) {
                if (!want) throw protocol_error("a finalized block regressed");
                continue;
            }
            if (!want) continue;
            block.finalized = true;
            block.finalize_epoch = expected;
            put({{"epoch", now}, {"kind", "block-finalized"}, {"finalize_epoch", expected},
                 {"height", height}});
            mint_for(height);
        }
    }

    void mint_for(epoch_t height) {
        auto it = confirmed_during.find(height);
        if (it == confirmed_during.end() || it->second.empty()) return;
        econ.mint_on_finality(it->second);
        settle_money();
        for (case_id c : it->second) {
            const auto& rc = econ.case_at(c);
            bool held = rc.status == econ::case_status::held;
            if (held) held_since[c] = now;
            top_records.push_back({c, rc.beneficiary, rc.final_amount,
                                   static_cast<std::uint8_t>(rc.status)});
            put({{"epoch", now}, {"kind", "reward-minted"}, {"amount", rc.final_amount},
                 {"case", c}, {"field", facts.at(c).field}, {"held", held},
                 {"node", rc.beneficiary}});
        }
    }

    void epoch_end() {
        for (const auto& [n, ident] : h.nodes()) {
            if (!ident.participates() || ident.memberships.empty()) continue;
            auto view = evals.aggregate(n, now);
            json means = json::object();
            for (auto d : rep::kDimensions) {
                const auto& ratio = view.per_dimension.at(d);
                means[rep::dimension_name(d)] = json::array({ratio.num, ratio.den});
            }
            put({{"composite_den", view.composite.den}, {"composite_num", view.composite.num},
                 {"epoch", now}, {"kind", "reputation"}, {"means", std::move(means)},
                 {"node", n}});
        }
        json balances = json::object();
        for (const auto& [n, v] : econ.book().balances()) balances[std::to_string(n)] = v;
        json held = json::object();
        for (const auto& [n, v] : econ.book().held()) held[std::to_string(n)] = v;
        std::map<int, std::uint64_t> by_level;
        for (const auto& [gid, grp] : h.groups()) ++by_level[grp.level];
        json levels = json::object();
        for (const auto& [lv, cnt] : by_level) levels[std::to_string(lv)] = cnt;
        put({{"epoch", now}, {"kind", "epoch-end"}, {"balances", std::move(balances)},
             {"groups", std::move(levels)}, {"held", std::move(held)},
             {"nodes", h.active_node_count()}, {"total_minted", econ.book().total_minted()}});
        reports.clear();
        records_of.clear();
        expected_holders.clear();
        rank_cache.clear();
        settle_money();
    }

    void run_epoch(epoch_t e) {
        now = e;
        h.set_epoch(e);
        phase_arrivals();
        phase_social();
        phase_deliberation();
        phase_settlement();
        phase_ledger();
        phase_finality();
        epoch_end();
    }
};

} // namespace

run_result run_scenario(const scenario_config& cfg) {
    validate(cfg);
    sim_state st(cfg);
    for (epoch_t e = 0; e < cfg.epochs; ++e) st.run_epoch(e);

    run_result result;
    verify_context ctx;
    auto violation = verify_chain(st.chain, ctx, cfg.ledger);
    result.verify_ok = !violation.has_value();
    if (violation) result.verify_detail = violation->to_string();
    st.put({{"epoch", cfg.epochs}, {"kind", "verify-result"}, {"ok", result.verify_ok},
            {"detail", result.verify_detail}});

    result.event_log = std::move(st.log);
    for (const auto& [height, d] : st.chain.block_summary_digests) {
        result.block_digests.push_back(d);
    }
    result.balances = st.econ.book().balances();
    result.held = st.econ.book().held();
    result.total_minted = st.econ.book().total_minted();
    for (const auto& [c, rc] : st.econ.cases()) {
        result.cases[c] = {rc.beneficiary, rc.final_amount, econ::case_status_name(rc.status)};
    }
    result.conservation_checks = st.conservation_checks;
    result.chain = std::move(st.chain);
    return result;
}

} // namespace politeia::sim
