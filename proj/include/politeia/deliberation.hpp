#pragma once

// Proposal lifecycle: submission, scored feedback with deadlines and
// waivers, hosting, tallying, and routing up or down the hierarchy.
// Casual chats ride along as signed records with seeded third-party
// archive holders.
//
// Decision rule: a proposal is adopted when the mean score reaches the
// adoption threshold AND at least ceil(|members| * quorum) members voted.
// The mean is compared exactly (10 * sum >= threshold_tenths * count), so
// outcomes never hinge on floating-point rounding.

#include "politeia/codec.hpp"
#include "politeia/crypto.hpp"
#include "politeia/org.hpp"
#include "politeia/rng.hpp"
#include "politeia/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace politeia::delib {

struct delib_config {
    epoch_t deadline_epochs = 2;           // feedback window after submission
    std::uint32_t adoption_threshold_tenths = 60; // mean score >= 6.0 adopts
    std::uint32_t quorum_num = 1;          // quorum = ceil(members * num / den)
    std::uint32_t quorum_den = 2;
    std::size_t third_party_holders = 3;   // extra archive holders per chat
};

enum class proposal_kind : std::uint8_t {
    reward_evaluation = 0,
    rule_making = 1,
    election = 2,
};
std::string kind_name(proposal_kind k);
proposal_kind kind_from_name(const std::string& name);

// How a proposal relates to the one it sprang from.
enum class proposal_relation : std::uint8_t {
    none = 0,
    escalated_from = 1, // re-opened in the parent group
    delegated_from = 2, // mirrored into a child group, outcome is advisory
};

struct proposal {
    proposal_id id = 0; // assigned at submission
    proposal_kind kind = proposal_kind::rule_making;
    node_id proposer = 0;
    group_id group = 0;
    bytes payload;
    epoch_t submitted_epoch = 0;
    epoch_t deadline_epoch = 0;
    bool system_generated = false; // engine-created (escalation, delegation,
                                   // auto-election); carries no signature
    proposal_relation relation = proposal_relation::none;
    std::optional<proposal_id> origin;
    signature sig;

    bytes signed_payload() const; // everything the proposer signs (no id)
    bytes canonical_bytes() const;
    digest payload_digest() const;
    digest record_digest() const;
};

struct feedback {
    proposal_id proposal = 0;
    node_id voter = 0;
    std::uint8_t score = 0; // 0..=10
    std::string reasons;
    std::optional<std::uint64_t> proposed_amount; // reward cases only
    epoch_t epoch = 0;
    signature sig;

    bytes signed_payload() const;
    bytes canonical_bytes() const;
    digest record_digest() const;
};

enum class routing_choice : std::uint8_t {
    finalize = 0,
    escalate = 1,
    delegate = 2,
};

struct advisory_score {
    group_id group = 0;
    score_ratio mean{0, 1};
    bool adopted = false;
};

struct outcome {
    proposal_id proposal = 0;
    score_ratio mean{0, 1};
    std::vector<node_id> voters; // ascending
    std::vector<node_id> waived; // ascending, members minus voters at tally
    bool adopted = false;
    bool quorum_failed = false;
    node_id host = 0;
    routing_choice routing = routing_choice::finalize;
    std::vector<advisory_score> advisories; // delegated children's verdicts

    bytes canonical_bytes() const;
    digest record_digest() const;
};

struct chat_record {
    node_id sender = 0;
    node_id receiver = 0;
    epoch_t epoch = 0;
    bytes payload;
    std::optional<proposal_id> consultation; // pre-proposal opinion poll tag
    signature sig;
    std::vector<node_id> archive_holders; // sender, receiver, third parties

    bytes signed_payload() const; // holders are derived, not signed
    bytes canonical_bytes() const;
    digest record_digest() const;
};

struct submit_result {
    proposal_id id = 0;
    node_id host = 0;
    // Set when the group had no cores: a system election proposal opened,
    // hosted by the longest-tenure member, before the submitted one runs.
    std::optional<proposal_id> election_proposal;
};

enum class feedback_status : std::uint8_t { recorded = 0, waived = 1 };

class proposal_engine {
public:
    explicit proposal_engine(delib_config cfg = {}) : cfg_(cfg) {}
    const delib_config& config() const { return cfg_; }

    // Registers a signed proposal and assigns its id and host.
    submit_result submit(const org::hierarchy& h, proposal p, const public_key& proposer_pk,
                         epoch_t now);

    feedback_status submit_feedback(const org::hierarchy& h, const feedback& f,
                                    const public_key& voter_pk, epoch_t now);

    // A proposal can be tallied once its deadline passed, or early once
    // every current group member has responded.
    bool ready_for_tally(const org::hierarchy& h, proposal_id p, epoch_t now) const;
    const outcome& tally(const org::hierarchy& h, proposal_id p, epoch_t now);

    // Applies the host's routing decision to a tallied proposal. Escalating
    // from the top group and delegating without children coerce to
    // finalize. Returns ids of any proposals the routing opened.
    std::vector<proposal_id> route(const org::hierarchy& h, proposal_id p, routing_choice choice,
                                   epoch_t now);

    // Builds, signs, and registers a casual chat. Third-party archive
    // holders are drawn from the active community, never the two parties.
    chat_record record_chat(const org::hierarchy& h, node_id sender, node_id receiver,
                            bytes payload, std::optional<proposal_id> consultation,
                            const key_pair& sender_keys, det_rng& rng, epoch_t now);

    const proposal& proposal_at(proposal_id p) const;
    bool has_outcome(proposal_id p) const { return outcomes_.count(p) > 0; }
    const outcome& outcome_of(proposal_id p) const;
    std::vector<feedback> feedbacks_of(proposal_id p) const;
    // Proposals not yet tallied, ascending id.
    std::vector<proposal_id> open_proposals() const;
    std::size_t proposal_count() const { return proposals_.size(); }

private:
    proposal& mut(proposal_id p);
    proposal_id register_proposal(proposal p);
    node_id host_of(const org::hierarchy& h, group_id g) const;

    delib_config cfg_;
    proposal_id next_id_ = 1;
    std::map<proposal_id, proposal> proposals_;
    std::map<proposal_id, std::map<node_id, feedback>> feedbacks_;
    std::map<proposal_id, outcome> outcomes_;
};

} // namespace politeia::delib
