#include "politeia/deliberation.hpp"

#include <algorithm>

namespace politeia::delib {

std::string kind_name(proposal_kind k) {
    switch (k) {
        case proposal_kind::reward_evaluation: return "reward-evaluation";
        case proposal_kind::rule_making: return "rule-making";
        case proposal_kind::election: return "election";
    }
    throw protocol_error("unknown proposal kind");
}

proposal_kind kind_from_name(const std::string& name) {
    for (auto k : {proposal_kind::reward_evaluation, proposal_kind::rule_making,
                   proposal_kind::election}) {
        if (kind_name(k) == name) return k;
    }
    throw protocol_error("unknown proposal kind: " + name);
}

bytes proposal::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::proposal);
    w.u8(static_cast<std::uint8_t>(kind));
    w.u64(proposer);
    w.u64(group);
    w.blob(payload);
    w.u64(submitted_epoch);
    w.u64(deadline_epoch);
    return w.take();
}

bytes proposal::canonical_bytes() const {
    byte_writer w;
    w.u64(id);
    w.raw(signed_payload());
    w.boolean(system_generated);
    w.u8(static_cast<std::uint8_t>(relation));
    w.opt(origin, [](byte_writer& out, proposal_id o) { out.u64(o); });
    w.sig(sig);
    return w.take();
}

digest proposal::payload_digest() const { return sha256(payload); }
digest proposal::record_digest() const { return sha256(canonical_bytes()); }

bytes feedback::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::feedback);
    w.u64(proposal);
    w.u64(voter);
    w.u8(score);
    w.str(reasons);
    w.opt(proposed_amount, [](byte_writer& out, std::uint64_t a) { out.u64(a); });
    w.u64(epoch);
    return w.take();
}

bytes feedback::canonical_bytes() const {
    byte_writer w;
    w.raw(signed_payload());
    w.sig(sig);
    return w.take();
}

digest feedback::record_digest() const { return sha256(canonical_bytes()); }

bytes outcome::canonical_bytes() const {
    byte_writer w;
    w.kind(record_kind::tally);
    w.u64(proposal);
    w.u64(mean.num);
    w.u64(mean.den);
    w.list(voters, [](byte_writer& out, node_id n) { out.u64(n); });
    w.list(waived, [](byte_writer& out, node_id n) { out.u64(n); });
    w.boolean(adopted);
    w.boolean(quorum_failed);
    w.u64(host);
    w.u8(static_cast<std::uint8_t>(routing));
    w.list(advisories, [](byte_writer& out, const advisory_score& a) {
        out.u64(a.group);
        out.u64(a.mean.num);
        out.u64(a.mean.den);
        out.boolean(a.adopted);
    });
    return w.take();
}

digest outcome::record_digest() const { return sha256(canonical_bytes()); }

bytes chat_record::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::chat);
    w.u64(sender);
    w.u64(receiver);
    w.u64(epoch);
    w.blob(payload);
    w.opt(consultation, [](byte_writer& out, proposal_id p) { out.u64(p); });
    return w.take();
}

bytes chat_record::canonical_bytes() const {
    byte_writer w;
    w.raw(signed_payload());
    w.sig(sig);
    w.list(archive_holders, [](byte_writer& out, node_id n) { out.u64(n); });
    return w.take();
}

digest chat_record::record_digest() const { return sha256(canonical_bytes()); }

proposal& proposal_engine::mut(proposal_id p) {
    auto it = proposals_.find(p);
    if (it == proposals_.end()) throw protocol_error("unknown proposal id " + std::to_string(p));
    return it->second;
}

const proposal& proposal_engine::proposal_at(proposal_id p) const {
    auto it = proposals_.find(p);
    if (it == proposals_.end()) throw protocol_error("unknown proposal id " + std::to_string(p));
    return it->second;
}

const outcome& proposal_engine::outcome_of(proposal_id p) const {
    auto it = outcomes_.find(p);
    if (it == outcomes_.end()) throw protocol_error("proposal not tallied: " + std::to_string(p));
    return it->second;
}

std::vector<feedback> proposal_engine::feedbacks_of(proposal_id p) const {
    std::vector<feedback> out;
    auto it = feedbacks_.find(p);
    if (it != feedbacks_.end()) {
        for (const auto& [voter, f] : it->second) out.push_back(f);
    }
    return out;
}

std::vector<proposal_id> proposal_engine::open_proposals() const {
    std::vector<proposal_id> out;
    for (const auto& [pid, p] : proposals_) {
        if (!outcomes_.count(pid)) out.push_back(pid);
    }
    return out;
}

node_id proposal_engine::host_of(const org::hierarchy& h, group_id g) const {
    const auto& grp = h.group_at(g);
    if (!grp.core_nodes.empty()) return grp.core_nodes.front();
    return h.acting_host(g);
}

proposal_id proposal_engine::register_proposal(proposal p) {
    p.id = next_id_++;
    proposal_id id = p.id;
    proposals_.emplace(id, std::move(p));
    return id;
}

submit_result proposal_engine::submit(const org::hierarchy& h, proposal p,
                                      const public_key& proposer_pk, epoch_t now) {
    const auto& grp = h.group_at(p.group);
    if (!grp.is_member(p.proposer)) throw protocol_error("proposer is not a group member");
    const auto& ident = h.node_at(p.proposer);
    if (ident.status != org::node_status::active) {
        throw protocol_error("proposer rights are restricted or revoked");
    }
    if (p.submitted_epoch != now) throw protocol_error("proposal submission epoch mismatch");
    if (p.deadline_epoch <= p.submitted_epoch) {
        throw protocol_error("proposal deadline must lie after submission");
    }
    if (p.system_generated) throw protocol_error("system flag is reserved for the engine");
    if (!verify(proposer_pk, p.signed_payload(), p.sig)) {
        throw protocol_error("proposal signature does not verify");
    }

    submit_result result;
    result.host = host_of(h, p.group);

    // A group without elected cores first runs an election, chaired by the
    // longest-tenure member; the submitted proposal is hosted by the same
    // member in the meantime.
    if (grp.core_nodes.empty()) {
        proposal election;
        election.kind = proposal_kind::election;
        election.proposer = result.host;
        election.group = p.group;
        byte_writer w;
        w.u64(p.group);
        election.payload = w.take();
        election.submitted_epoch = now;
        election.deadline_epoch = now + cfg_.deadline_epochs;
        election.system_generated = true;
        result.election_proposal = register_proposal(std::move(election));
    }

    result.id = register_proposal(std::move(p));
    return result;
}

feedback_status proposal_engine::submit_feedback(const org::hierarchy& h, const feedback& f,
                                                 const public_key& voter_pk, epoch_t now) {
    const auto& p = proposal_at(f.proposal);
    if (outcomes_.count(f.proposal)) throw protocol_error("proposal already tallied");
    const auto& grp = h.group_at(p.group);
    if (!grp.is_member(f.voter)) throw protocol_error("feedback from a non-member");
    if (f.score > 10) throw protocol_error("feedback score above 10");
    if (f.epoch != now) throw protocol_error("feedback epoch mismatch");
    if (!verify(voter_pk, f.signed_payload(), f.sig)) {
        throw protocol_error("feedback signature does not verify");
    }
    if (feedbacks_[f.proposal].count(f.voter)) {
        throw protocol_error("duplicate feedback from one voter");
    }
    if (now > p.deadline_epoch) return feedback_status::waived;
    feedbacks_[f.proposal].emplace(f.voter, f);
    return feedback_status::recorded;
}

bool proposal_engine::ready_for_tally(const org::hierarchy& h, proposal_id p, epoch_t now) const {
    const auto& prop = proposal_at(p);
    if (outcomes_.count(p)) return false;
    if (now > prop.deadline_epoch) return true;
    const auto& grp = h.group_at(prop.group);
    auto fit = feedbacks_.find(p);
    std::size_t responded = fit == feedbacks_.end() ? 0 : fit->second.size();
    if (responded < grp.size()) return false;
    for (node_id m : grp.members) {
        if (fit->second.find(m) == fit->second.end()) return false;
    }
    return true;
}

const outcome& proposal_engine::tally(const org::hierarchy& h, proposal_id p, epoch_t now) {
    const auto& prop = proposal_at(p);
    if (outcomes_.count(p)) throw protocol_error("proposal already tallied");
    if (!ready_for_tally(h, p, now)) throw protocol_error("proposal is not ready for tally");

    const auto& grp = h.group_at(prop.group);
    outcome out;
    out.proposal = p;
    out.host = host_of(h, prop.group);

    std::uint64_t sum = 0;
    auto fit = feedbacks_.find(p);
    if (fit != feedbacks_.end()) {
        for (const auto& [voter, f] : fit->second) {
            out.voters.push_back(voter);
            sum += f.score;
        }
    }
    out.waived = grp.members;
    std::sort(out.waived.begin(), out.waived.end());
    out.waived.erase(std::remove_if(out.waived.begin(), out.waived.end(),
                                    [&](node_id m) {
                                        return std::binary_search(out.voters.begin(),
                                                                  out.voters.end(), m);
                                    }),
                     out.waived.end());

    std::size_t quorum =
        (grp.size() * cfg_.quorum_num + cfg_.quorum_den - 1) / cfg_.quorum_den;
    out.quorum_failed = out.voters.size() < quorum;
    if (!out.voters.empty()) {
        out.mean = score_ratio{sum, out.voters.size()};
    }
    // Exact comparison: mean >= threshold  <=>  10*sum >= tenths*count.
    bool above = !out.voters.empty() &&
                 10 * sum >= std::uint64_t(cfg_.adoption_threshold_tenths) * out.voters.size();
    out.adopted = above && !out.quorum_failed;

    auto [it, fresh] = outcomes_.emplace(p, std::move(out));
    (void)fresh;

    // A delegated child's verdict flows back to its origin as advice.
    if (prop.relation == proposal_relation::delegated_from && prop.origin) {
        auto oit = outcomes_.find(*prop.origin);
        if (oit != outcomes_.end()) {
            oit->second.advisories.push_back(
                advisory_score{prop.group, it->second.mean, it->second.adopted});
        }
    }
    return it->second;
}

std::vector<proposal_id> proposal_engine::route(const org::hierarchy& h, proposal_id p,
                                                routing_choice choice, epoch_t now) {
    const auto& prop = proposal_at(p);
    auto oit = outcomes_.find(p);
    if (oit == outcomes_.end()) throw protocol_error("routing before tally");

    const auto& grp = h.group_at(prop.group);
    if (choice == routing_choice::escalate && !grp.parent) {
        choice = routing_choice::finalize; // nowhere to escalate from the top
    }
    if (choice == routing_choice::delegate && grp.children.empty()) {
        choice = routing_choice::finalize;
    }
    oit->second.routing = choice;

    std::vector<proposal_id> opened;
    if (choice == routing_choice::escalate) {
        proposal up;
        up.kind = prop.kind;
        up.proposer = oit->second.host;
        up.group = *grp.parent;
        up.payload = prop.payload;
        up.submitted_epoch = now;
        up.deadline_epoch = now + cfg_.deadline_epochs;
        up.system_generated = true;
        up.relation = proposal_relation::escalated_from;
        up.origin = p;
        opened.push_back(register_proposal(std::move(up)));
    } else if (choice == routing_choice::delegate) {
        for (group_id child : grp.children) {
            proposal down;
            down.kind = prop.kind;
            down.proposer = oit->second.host;
            down.group = child;
            down.payload = prop.payload;
            down.submitted_epoch = now;
            down.deadline_epoch = now + cfg_.deadline_epochs;
            down.system_generated = true;
            down.relation = proposal_relation::delegated_from;
            down.origin = p;
            opened.push_back(register_proposal(std::move(down)));
        }
    }
    return opened;
}

chat_record proposal_engine::record_chat(const org::hierarchy& h, node_id sender,
                                         node_id receiver, bytes payload,
                                         std::optional<proposal_id> consultation,
                                         const key_pair& sender_keys, det_rng& rng,
                                         epoch_t now) {
    if (sender == receiver) throw protocol_error("chat with oneself");
    if (!h.node_at(sender).participates() || !h.node_at(receiver).participates()) {
        throw protocol_error("chat with a revoked node");
    }
    chat_record chat;
    chat.sender = sender;
    chat.receiver = receiver;
    chat.epoch = now;
    chat.payload = std::move(payload);
    chat.consultation = consultation;
    chat.sig = sign(sender_keys, chat.signed_payload());

    std::vector<node_id> pool;
    for (const auto& [nid, ident] : h.nodes()) {
        if (nid == sender || nid == receiver) continue;
        if (ident.participates() && !ident.memberships.empty()) pool.push_back(nid);
    }
    chat.archive_holders = {sender, receiver};
    for (std::size_t i : rng.sample(pool.size(), cfg_.third_party_holders)) {
        chat.archive_holders.push_back(pool[i]);
    }
    std::sort(chat.archive_holders.begin() + 2, chat.archive_holders.end());
    return chat;
}

} // namespace politeia::delib
