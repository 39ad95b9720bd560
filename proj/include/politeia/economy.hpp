#pragma once

// The Stater currency: reward cases with per-level amount consensus and
// top-level confirmation, minting at block finality, balance transfers
// with redacted per-group reports, lowest-common-ancestor confirmation,
// invalidation with penalties, and circulation holds.
//
// Money invariants enforced here:
//   - arithmetic is checked; overflow throws, never wraps;
//   - total_minted changes only in mint_on_finality;
//   - sum(balances) + sum(held) - sum(debts) == total_minted after every
//     operation (debts are liability magnitudes from reversals that could
//     not be recovered in full);
//   - held funds are not spendable; forfeited holds move to the treasury
//     account (id 0) instead of being burned.

#include "politeia/codec.hpp"
#include "politeia/crypto.hpp"
#include "politeia/org.hpp"
#include "politeia/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace politeia::econ {

using stater = std::uint64_t;

inline constexpr node_id kTreasury = 0;
inline constexpr std::size_t kActivationThreshold = 4;

stater checked_add(stater a, stater b);
stater checked_sub(stater a, stater b);

// Lower median of the proposed amounts: even counts take the lower of the
// two central values. Robust to a single inflated extreme.
stater group_amount(std::vector<stater> proposed);

enum class case_status : std::uint8_t {
    evaluating = 0,
    escalating = 1,
    confirmed = 2,
    minted = 3,
    held = 4,     // minted, circulation restricted until verification
    rejected = 5,
};
std::string case_status_name(case_status s);

struct reward_case {
    case_id id = 0;
    node_id beneficiary = 0;
    digest achievement_ref;
    node_id proposer = 0;
    group_id origin_group = 0;
    std::map<group_id, stater> per_group_amounts;
    case_status status = case_status::evaluating;
    stater final_amount = 0; // meaningful from confirmed onward
    bool hold = false;       // confirmed but awaiting peer verification

    bytes canonical_bytes() const;
    digest record_digest() const;
};

struct transaction {
    transaction_id id = 0; // assigned at execution
    node_id sender = 0;
    node_id receiver = 0;
    stater amount = 0;
    bytes memo;
    epoch_t epoch = 0;
    bool research_tagged = false; // marks spending as research cost
    bool disclosed = false;
    signature sender_sig;
    signature receiver_sig;

    bytes dual_signed_payload() const; // both parties sign these bytes
    bytes canonical_bytes() const;
    digest archive_hash() const; // over the full record, kept privately
};

struct tx_report {
    transaction_id tx = 0;
    node_id reporter = 0;
    group_id counterparty_group = 0;
    stater amount = 0;
    digest archive_hash;
    signature sig;

    bytes signed_payload() const;
    bytes canonical_bytes() const;
    digest record_digest() const;
};

struct confirmation_record {
    transaction_id tx = 0;
    group_id confirmer = 0;
    epoch_t epoch = 0;

    bytes canonical_bytes() const;
    digest record_digest() const;
};

struct invalidation_record {
    transaction_id tx = 0;
    std::vector<node_id> offenders;
    epoch_t epoch = 0;
    epoch_t restricted_until = 0;
    std::string reason;

    bytes canonical_bytes() const; // doubles as the public announcement
    digest record_digest() const;
};

class balance_book {
public:
    stater balance_of(node_id n) const;
    stater held_of(node_id n) const;
    stater debt_of(node_id n) const;
    stater spendable(node_id n) const { return balance_of(n); }
    stater total_minted() const { return total_minted_; }
    const std::map<node_id, stater>& balances() const { return balances_; }
    const std::map<node_id, stater>& held() const { return held_; }
    const std::map<node_id, stater>& debts() const { return debts_; }

    // Throws protocol_error if the conservation identity is broken.
    void check_conservation() const;

private:
    friend class economy;
    void credit(node_id n, stater amount, bool hold);
    void transfer(node_id from, node_id to, stater amount);
    // Moves up to `amount` back from `from` to `to`; any shortfall is
    // recorded as `from`'s debt so conservation still holds.
    void claw_back(node_id from, node_id to, stater amount);
    void release_hold(node_id n, stater amount);
    void forfeit_hold(node_id n, stater amount);

    std::map<node_id, stater> balances_;
    std::map<node_id, stater> held_;
    std::map<node_id, stater> debts_;
    stater total_minted_ = 0;
};

struct lca_outcome {
    bool confirmed = false;
    group_id confirmer = 0; // valid when confirmed
};

struct econ_config {
    epoch_t restriction_epochs = 10; // penalty for falsified transactions
};

class economy {
public:
    explicit economy(econ_config cfg = {}) : cfg_(cfg) {}
    const econ_config& config() const { return cfg_; }
    const balance_book& book() const { return book_; }

    // Minting and rewards activate once the community holds at least 4
    // active nodes.
    static bool check_activation(const org::hierarchy& h);

    // Achievements must be archived (digest known) before a case may cite
    // them.
    void register_achievement(const digest& achievement);
    bool achievement_known(const digest& achievement) const;

    case_id open_reward_case(const org::hierarchy& h, node_id beneficiary, node_id proposer,
                             group_id origin_group, const digest& achievement);
    const reward_case& case_at(case_id c) const;
    const std::map<case_id, reward_case>& cases() const { return cases_; }

    // Records one level's consensus amount (the lower median of the
    // members' proposals) while the case climbs the hierarchy.
    void record_group_amount(case_id c, group_id g, std::vector<stater> proposed);
    void mark_escalating(case_id c);

    // Top-level adoption. `hold` restricts circulation until verification.
    void confirm_reward(case_id c, stater final_amount, bool hold);
    void reject_case(case_id c);

    // Credits every confirmed case cited by a finalized block; the only
    // place total_minted moves.
    void mint_on_finality(const std::vector<case_id>& cited);

    // Scripted peer-verification verdicts for held rewards.
    void release_hold(case_id c);
    // Failed verification: held funds forfeit to the treasury; the
    // beneficiary is restricted. Returns the public announcement.
    invalidation_record fail_verification(org::hierarchy& h, case_id c, epoch_t now);

    // Settles a doubly-signed transfer and returns the two redacted
    // reports (sender's first).
    std::pair<tx_report, tx_report> execute_transaction(const org::hierarchy& h, transaction tx,
                                                        const key_pair& sender_keys,
                                                        const key_pair& receiver_keys);
    const transaction& transaction_at(transaction_id t) const;

    // Cross-checks both parties' reports and finds the confirming group.
    lca_outcome lca_confirm(const org::hierarchy& h, const tx_report& sender_report,
                            const public_key& sender_pk, const tx_report& receiver_report,
                            const public_key& receiver_pk, epoch_t now,
                            confirmation_record* out = nullptr) const;

    // Reverses a falsified transaction, restricts the offenders, and
    // returns the public announcement record.
    invalidation_record invalidate_transaction(org::hierarchy& h, transaction_id t,
                                               std::vector<node_id> offenders, epoch_t now,
                                               std::string reason);

    // Voluntary dual-consent disclosure, or a superior group's order.
    // Research-tagged voluntary disclosures feed the sender's cost basis.
    void disclose_by_consent(transaction_id t);
    void disclose_by_order(const org::hierarchy& h, transaction_id t, group_id orderer);
    stater research_cost_basis(node_id n) const;

private:
    reward_case& case_mut(case_id c);

    econ_config cfg_;
    balance_book book_;
    std::map<case_id, reward_case> cases_;
    std::set<std::array<std::uint8_t, 32>> case_achievements_;
    std::set<std::array<std::uint8_t, 32>> achievements_;
    std::map<transaction_id, transaction> transactions_;
    std::set<transaction_id> invalidated_;
    std::map<node_id, stater> research_costs_;
    case_id next_case_ = 1;
    transaction_id next_tx_ = 1;
};

} // namespace politeia::econ
