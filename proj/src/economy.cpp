#include "politeia/economy.hpp"

#include <algorithm>

namespace politeia::econ {

stater checked_add(stater a, stater b) {
    if (a > UINT64_MAX - b) throw protocol_error("stater addition overflow");
    return a + b;
}

stater checked_sub(stater a, stater b) {
    if (b > a) throw protocol_error("stater subtraction underflow");
    return a - b;
}

stater group_amount(std::vector<stater> proposed) {
    if (proposed.empty()) throw protocol_error("adopted reward case without amount proposals");
    std::sort(proposed.begin(), proposed.end());
    return proposed[(proposed.size() - 1) / 2];
}

std::string case_status_name(case_status s) {
    switch (s) {
        case case_status::evaluating: return "evaluating";
        case case_status::escalating: return "escalating";
        case case_status::confirmed: return "confirmed";
        case case_status::minted: return "minted";
        case case_status::held: return "held";
        case case_status::rejected: return "rejected";
    }
    throw protocol_error("unknown case status");
}

bytes reward_case::canonical_bytes() const {
    byte_writer w;
    w.kind(record_kind::reward_grant);
    w.u64(id);
    w.u64(beneficiary);
    w.dig(achievement_ref);
    w.u64(proposer);
    w.u64(origin_group);
    w.map(per_group_amounts, [](byte_writer& out, group_id g, stater a) {
        out.u64(g);
        out.u64(a);
    });
    w.u8(static_cast<std::uint8_t>(status));
    w.u64(final_amount);
    w.boolean(hold);
    return w.take();
}

digest reward_case::record_digest() const { return sha256(canonical_bytes()); }

bytes transaction::dual_signed_payload() const {
    byte_writer w;
    w.kind(record_kind::transaction);
    w.u64(sender);
    w.u64(receiver);
    w.u64(amount);
    w.blob(memo);
    w.u64(epoch);
    w.boolean(research_tagged);
    return w.take();
}

bytes transaction::canonical_bytes() const {
    byte_writer w;
    w.u64(id);
    w.raw(dual_signed_payload());
    w.boolean(disclosed);
    w.sig(sender_sig);
    w.sig(receiver_sig);
    return w.take();
}

digest transaction::archive_hash() const {
    // The private archive commits to the immutable content; the disclosed
    // flag can change later without breaking already-submitted reports.
    byte_writer w;
    w.u64(id);
    w.raw(dual_signed_payload());
    w.sig(sender_sig);
    w.sig(receiver_sig);
    return sha256(w.take());
}

bytes tx_report::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::confirmation);
    w.u8(0); // report sub-record
    w.u64(tx);
    w.u64(reporter);
    w.u64(counterparty_group);
    w.u64(amount);
    w.dig(archive_hash);
    return w.take();
}

bytes tx_report::canonical_bytes() const {
    byte_writer w;
    w.raw(signed_payload());
    w.sig(sig);
    return w.take();
}

digest tx_report::record_digest() const { return sha256(canonical_bytes()); }

bytes confirmation_record::canonical_bytes() const {
    byte_writer w;
    w.kind(record_kind::confirmation);
    w.u8(1); // confirmation sub-record
    w.u64(tx);
    w.u64(confirmer);
    w.u64(epoch);
    return w.take();
}

digest confirmation_record::record_digest() const { return sha256(canonical_bytes()); }

bytes invalidation_record::canonical_bytes() const {
    byte_writer w;
    w.kind(record_kind::invalidation);
    w.u64(tx);
    w.list(offenders, [](byte_writer& out, node_id n) { out.u64(n); });
    w.u64(epoch);
    w.u64(restricted_until);
    w.str(reason);
    return w.take();
}

digest invalidation_record::record_digest() const { return sha256(canonical_bytes()); }

stater balance_book::balance_of(node_id n) const {
    auto it = balances_.find(n);
    return it == balances_.end() ? 0 : it->second;
}

stater balance_book::held_of(node_id n) const {
    auto it = held_.find(n);
    return it == held_.end() ? 0 : it->second;
}

stater balance_book::debt_of(node_id n) const {
    auto it = debts_.find(n);
    return it == debts_.end() ? 0 : it->second;
}

void balance_book::check_conservation() const {
    stater assets = 0;
    for (const auto& [n, v] : balances_) assets = checked_add(assets, v);
    for (const auto& [n, v] : held_) assets = checked_add(assets, v);
    stater debt = 0;
    for (const auto& [n, v] : debts_) debt = checked_add(debt, v);
    if (checked_sub(assets, debt) != total_minted_) {
        throw protocol_error("conservation violated: balances + held - debts != minted");
    }
}

void balance_book::credit(node_id n, stater amount, bool hold) {
    auto& bucket = hold ? held_[n] : balances_[n];
    bucket = checked_add(bucket, amount);
    total_minted_ = checked_add(total_minted_, amount);
}

void balance_book::transfer(node_id from, node_id to, stater amount) {
    stater& src = balances_[from];
    if (src < amount) throw protocol_error("insufficient spendable balance");
    src -= amount;
    balances_[to] = checked_add(balances_[to], amount);
}

void balance_book::claw_back(node_id from, node_id to, stater amount) {
    stater available = balance_of(from);
    stater recovered = std::min(available, amount);
    balances_[from] -= recovered;
    balances_[to] = checked_add(balances_[to], recovered);
    if (recovered < amount) {
        stater deficit = amount - recovered;
        debts_[from] = checked_add(debts_[from], deficit);
        balances_[to] = checked_add(balances_[to], deficit);
    }
}

void balance_book::release_hold(node_id n, stater amount) {
    stater& h = held_[n];
    if (h < amount) throw protocol_error("hold release exceeds held funds");
    h -= amount;
    balances_[n] = checked_add(balances_[n], amount);
}

void balance_book::forfeit_hold(node_id n, stater amount) {
    stater& h = held_[n];
    if (h < amount) throw protocol_error("hold forfeit exceeds held funds");
    h -= amount;
    balances_[kTreasury] = checked_add(balances_[kTreasury], amount);
}

bool economy::check_activation(const org::hierarchy& h) {
    return h.active_node_count() >= kActivationThreshold;
}

void economy::register_achievement(const digest& achievement) {
    achievements_.insert(achievement.v);
}

bool economy::achievement_known(const digest& achievement) const {
    return achievements_.count(achievement.v) > 0;
}

reward_case& economy::case_mut(case_id c) {
    auto it = cases_.find(c);
    if (it == cases_.end()) throw protocol_error("unknown reward case " + std::to_string(c));
    return it->second;
}

const reward_case& economy::case_at(case_id c) const {
    auto it = cases_.find(c);
    if (it == cases_.end()) throw protocol_error("unknown reward case " + std::to_string(c));
    return it->second;
}

case_id economy::open_reward_case(const org::hierarchy& h, node_id beneficiary, node_id proposer,
                                  group_id origin_group, const digest& achievement) {
    if (!check_activation(h)) {
        throw protocol_error("reward system inactive: fewer than 4 active nodes");
    }
    if (!achievement_known(achievement)) {
        throw protocol_error("achievement record is not archived");
    }
    if (case_achievements_.count(achievement.v)) {
        throw protocol_error("a reward case already exists for this achievement");
    }
    h.group_at(origin_group);
    h.node_at(beneficiary);
    reward_case rc;
    rc.id = next_case_++;
    rc.beneficiary = beneficiary;
    rc.achievement_ref = achievement;
    rc.proposer = proposer;
    rc.origin_group = origin_group;
    case_achievements_.insert(achievement.v);
    case_id id = rc.id;
    cases_.emplace(id, std::move(rc));
    return id;
}

void economy::record_group_amount(case_id c, group_id g, std::vector<stater> proposed) {
    reward_case& rc = case_mut(c);
    if (rc.status != case_status::evaluating && rc.status != case_status::escalating) {
        throw protocol_error("amounts may only be recorded while a case is under evaluation");
    }
    rc.per_group_amounts[g] = group_amount(std::move(proposed));
}

void economy::mark_escalating(case_id c) {
    reward_case& rc = case_mut(c);
    if (rc.status != case_status::evaluating && rc.status != case_status::escalating) {
        throw protocol_error("only open cases escalate");
    }
    rc.status = case_status::escalating;
}

void economy::confirm_reward(case_id c, stater final_amount, bool hold) {
    reward_case& rc = case_mut(c);
    if (rc.status != case_status::evaluating && rc.status != case_status::escalating) {
        throw protocol_error("case is not awaiting confirmation");
    }
    rc.status = case_status::confirmed;
    rc.final_amount = final_amount;
    rc.hold = hold;
}

void economy::reject_case(case_id c) {
    reward_case& rc = case_mut(c);
    if (rc.status == case_status::minted || rc.status == case_status::held) {
        throw protocol_error("minted cases cannot be rejected");
    }
    rc.status = case_status::rejected;
}

void economy::mint_on_finality(const std::vector<case_id>& cited) {
    for (case_id c : cited) {
        reward_case& rc = case_mut(c);
        if (rc.status != case_status::confirmed) {
            throw protocol_error("block cites a case that is not confirmed");
        }
        book_.credit(rc.beneficiary, rc.final_amount, rc.hold);
        rc.status = rc.hold ? case_status::held : case_status::minted;
    }
    book_.check_conservation();
}

void economy::release_hold(case_id c) {
    reward_case& rc = case_mut(c);
    if (rc.status != case_status::held) throw protocol_error("case holds no funds");
    book_.release_hold(rc.beneficiary, rc.final_amount);
    rc.status = case_status::minted;
    book_.check_conservation();
}

invalidation_record economy::fail_verification(org::hierarchy& h, case_id c, epoch_t now) {
    reward_case& rc = case_mut(c);
    if (rc.status != case_status::held) throw protocol_error("case holds no funds");
    book_.forfeit_hold(rc.beneficiary, rc.final_amount);
    rc.status = case_status::rejected;

    auto& ident = h.node_mut(rc.beneficiary);
    ident.status = org::node_status::restricted;
    ident.restricted_until = now + cfg_.restriction_epochs;

    invalidation_record rec;
    rec.tx = 0; // no transaction involved: a fabricated achievement
    rec.offenders = {rc.beneficiary};
    rec.epoch = now;
    rec.restricted_until = ident.restricted_until;
    rec.reason = "peer verification failed for achievement-backed reward";
    book_.check_conservation();
    return rec;
}

const transaction& economy::transaction_at(transaction_id t) const {
    auto it = transactions_.find(t);
    if (it == transactions_.end()) throw protocol_error("unknown transaction " + std::to_string(t));
    return it->second;
}

std::pair<tx_report, tx_report> economy::execute_transaction(const org::hierarchy& h,
                                                             transaction tx,
                                                             const key_pair& sender_keys,
                                                             const key_pair& receiver_keys) {
    if (tx.sender == tx.receiver) throw protocol_error("transaction with oneself");
    if (tx.amount == 0) throw protocol_error("transaction amount must be positive");
    if (!verify(sender_keys.pk, tx.dual_signed_payload(), tx.sender_sig) ||
        !verify(receiver_keys.pk, tx.dual_signed_payload(), tx.receiver_sig)) {
        throw protocol_error("transaction signature does not verify");
    }
    const auto& sender = h.node_at(tx.sender);
    const auto& receiver = h.node_at(tx.receiver);
    if (sender.status != org::node_status::active) {
        throw protocol_error("sender rights are restricted or revoked");
    }
    if (!receiver.participates()) throw protocol_error("receiver is revoked");
    if (book_.spendable(tx.sender) < tx.amount) {
        throw protocol_error("insufficient spendable balance");
    }

    tx.id = next_tx_++;
    book_.transfer(tx.sender, tx.receiver, tx.amount);

    tx_report from_sender;
    from_sender.tx = tx.id;
    from_sender.reporter = tx.sender;
    from_sender.counterparty_group = h.primary_group(tx.receiver);
    from_sender.amount = tx.amount;
    from_sender.archive_hash = tx.archive_hash();
    from_sender.sig = sign(sender_keys, from_sender.signed_payload());

    tx_report from_receiver;
    from_receiver.tx = tx.id;
    from_receiver.reporter = tx.receiver;
    from_receiver.counterparty_group = h.primary_group(tx.sender);
    from_receiver.amount = tx.amount;
    from_receiver.archive_hash = tx.archive_hash();
    from_receiver.sig = sign(receiver_keys, from_receiver.signed_payload());

    transactions_.emplace(tx.id, std::move(tx));
    book_.check_conservation();
    return {from_sender, from_receiver};
}

lca_outcome economy::lca_confirm(const org::hierarchy& h, const tx_report& sender_report,
                                 const public_key& sender_pk, const tx_report& receiver_report,
                                 const public_key& receiver_pk, epoch_t now,
                                 confirmation_record* out) const {
    if (sender_report.tx != receiver_report.tx) {
        throw protocol_error("reports reference different transactions");
    }
    if (!verify(sender_pk, sender_report.signed_payload(), sender_report.sig) ||
        !verify(receiver_pk, receiver_report.signed_payload(), receiver_report.sig)) {
        throw protocol_error("transaction report signature does not verify");
    }
    lca_outcome result;
    if (sender_report.amount != receiver_report.amount ||
        !(sender_report.archive_hash == receiver_report.archive_hash)) {
        result.confirmed = false;
        return result;
    }
    // Each report names the counterparty's group; the confirmer is the
    // lowest group whose subtree covers both.
    auto lca = h.lca(receiver_report.counterparty_group, sender_report.counterparty_group);
    if (!lca) throw protocol_error("transaction parties share no ancestor group");
    result.confirmed = true;
    result.confirmer = *lca;
    if (out) {
        out->tx = sender_report.tx;
        out->confirmer = *lca;
        out->epoch = now;
    }
    return result;
}

invalidation_record economy::invalidate_transaction(org::hierarchy& h, transaction_id t,
                                                    std::vector<node_id> offenders, epoch_t now,
                                                    std::string reason) {
    auto it = transactions_.find(t);
    if (it == transactions_.end()) throw protocol_error("unknown transaction " + std::to_string(t));
    if (!invalidated_.insert(t).second) throw protocol_error("transaction already invalidated");
    transaction& tx = it->second;

    book_.claw_back(tx.receiver, tx.sender, tx.amount);

    invalidation_record rec;
    rec.tx = t;
    rec.offenders = std::move(offenders);
    rec.epoch = now;
    rec.restricted_until = now + cfg_.restriction_epochs;
    rec.reason = std::move(reason);
    for (node_id n : rec.offenders) {
        auto& ident = h.node_mut(n);
        if (ident.status == org::node_status::revoked) continue;
        ident.status = org::node_status::restricted;
        ident.restricted_until = rec.restricted_until;
    }
    book_.check_conservation();
    return rec;
}

void economy::disclose_by_consent(transaction_id t) {
    auto it = transactions_.find(t);
    if (it == transactions_.end()) throw protocol_error("unknown transaction " + std::to_string(t));
    transaction& tx = it->second;
    if (tx.disclosed) return;
    tx.disclosed = true;
    if (tx.research_tagged) {
        research_costs_[tx.sender] = checked_add(research_costs_[tx.sender], tx.amount);
    }
}

void economy::disclose_by_order(const org::hierarchy& h, transaction_id t, group_id orderer) {
    auto it = transactions_.find(t);
    if (it == transactions_.end()) throw protocol_error("unknown transaction " + std::to_string(t));
    transaction& tx = it->second;
    group_id sg = h.primary_group(tx.sender);
    group_id rg = h.primary_group(tx.receiver);
    if (!h.in_subtree(orderer, sg) || !h.in_subtree(orderer, rg)) {
        throw protocol_error("disclosure order from a group outside both jurisdictions");
    }
    tx.disclosed = true;
}

stater economy::research_cost_basis(node_id n) const {
    auto it = research_costs_.find(n);
    return it == research_costs_.end() ? 0 : it->second;
}

} // namespace politeia::econ
