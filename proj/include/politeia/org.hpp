#pragma once

// Organizational state machine: a ten-level tree of groups with ordered
// members, elected core nodes, merge/split rebalancing, promotion and
// detachment, and cross-group transfers.
//
// Structural rules kept by this module:
//   - group sizes stay in [3, 25] unless flagged pending merge/split;
//   - a group of size 3-10 elects 1 core, 11-18 elects 2, 19-25 elects 3;
//   - every core of a non-top group sits in the parent group; upper-level
//     membership is exactly the leaders of the children plus the group's
//     own cores;
//   - one parentless group (the top-level group) roots the tree; parent
//     level is always child level + 1;
//   - a node that is core at levels i and i+1 and has joined a level-(i+2)
//     group detaches from its level-i group, and the next member in the
//     sorting order takes the vacated core seat.

#include "politeia/codec.hpp"
#include "politeia/crypto.hpp"
#include "politeia/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace politeia::org {

inline constexpr int kMaxLevel = 10;
inline constexpr std::size_t kMinGroupSize = 3;
inline constexpr std::size_t kMaxGroupSize = 25;
inline constexpr std::size_t kMaxMembershipsPerLevel = 2;

// Core seats by group size: 0..2 -> 0 (pending merge), 3..10 -> 1,
// 11..18 -> 2, 19..25 -> 3. Sizes above 25 must split first.
std::size_t required_core_count(std::size_t size);

enum class node_status : std::uint8_t { active = 0, restricted = 1, revoked = 2 };

struct node_identity {
    node_id id = 0;
    public_key pk;
    epoch_t join_epoch = 0;
    node_status status = node_status::active;
    epoch_t restricted_until = 0; // meaningful while restricted
    std::vector<group_id> memberships; // sorted, unique

    bool participates() const { return status != node_status::revoked; }
};

struct group {
    group_id id = 0;
    int level = 1;
    std::vector<node_id> members;    // order is the sorting priority
    std::vector<node_id> core_nodes; // election ranking order, subset of members
    std::optional<group_id> parent;
    std::vector<group_id> children; // sorted
    bool pending_merge = false;
    bool pending_split = false;
    bool needs_election = false;

    std::size_t size() const { return members.size(); }
    bool is_member(node_id n) const;
    bool is_core(node_id n) const;
};

struct ballot {
    node_id voter = 0;
    std::vector<node_id> ranking; // distinct member ids, best first
};

struct election_result {
    group_id group = 0;
    std::vector<node_id> winners; // Borda order
    node_id host = 0;
    std::vector<node_id> voters;
    std::vector<node_id> previous_cores;
};

// Reputation composites used for election tie-breaks and candidate ranking.
class composite_index {
public:
    void set(node_id n, score_ratio s) { scores_[n] = s; }
    score_ratio of(node_id n) const;

private:
    std::map<node_id, score_ratio> scores_;
};

// Structural events emitted by rebalance and membership maintenance,
// for the event log and for tests.
struct merge_event {
    group_id absorbed = 0;
    group_id into = 0;
};
struct split_event {
    group_id original = 0;
    group_id low_half = 0;
    group_id high_half = 0;
};
struct detach_event {
    node_id node = 0;
    group_id from_group = 0;
    std::optional<node_id> successor;
};
struct succession_event {
    group_id group = 0;
    node_id departed = 0;
    node_id successor = 0;
};
struct root_event {
    group_id new_root = 0;
    int level = 0;
};
struct dissolve_event {
    group_id group = 0;
};
struct readmit_event {
    node_id node = 0;
    group_id into = 0;
};
using org_event = std::variant<merge_event, split_event, detach_event, succession_event,
                               root_event, dissolve_event, readmit_event>;

class hierarchy {
public:
    epoch_t epoch() const { return epoch_; }
    void set_epoch(epoch_t e) { epoch_ = e; }

    const std::map<group_id, group>& groups() const { return groups_; }
    const std::map<node_id, node_identity>& nodes() const { return nodes_; }

    const group& group_at(group_id g) const;
    const node_identity& node_at(node_id n) const;
    node_identity& node_mut(node_id n);

    bool empty() const { return groups_.empty(); }

    // New nodes default to level 1: they join the smallest level-1 group
    // with free capacity, or a fresh (pending-merge) group if none has any.
    group_id admit_node(node_id id, const public_key& pk, epoch_t now);

    // Merge undersized groups into their smallest fitting sibling, split
    // oversized ones, keep the tree single-rooted, and repeat to fixpoint.
    std::vector<org_event> rebalance();

    // Borda count over ranked ballots; ties broken by reputation
    // composite, then tenure, then id. Pure: does not mutate state.
    election_result run_election(group_id g, const std::vector<ballot>& ballots,
                                 const composite_index& reputation) const;

    // Apply a confirmed election: the winners become the group's cores and
    // members of the parent group; displaced cores resign upward; promotion
    // detachments cascade.
    std::vector<org_event> confirm_election(group_id g, const std::vector<node_id>& winners);

    // Departure from the community: memberships removed, core seats pass to
    // the next member in sorting order, upper memberships resync.
    std::vector<org_event> remove_node(node_id n);

    // The ordering group moves a node between two same-level groups in its
    // subtree. Capacity and jurisdiction are enforced.
    std::vector<org_event> transfer_node(group_id orderer, node_id n, group_id from, group_id to);

    // Cores re-order their group's sorting priority.
    void set_sorting_priority(group_id g, const std::vector<node_id>& order,
                              const std::vector<node_id>& callers);

    group_id top_group() const;
    std::optional<group_id> parent_of(group_id g) const;
    std::optional<group_id> lca(group_id a, group_id b) const;
    bool in_subtree(group_id root, group_id g) const;

    // The group a node reports transactions under: its lowest-level
    // membership, lowest id first on ties.
    group_id primary_group(node_id n) const;
    int level_of(node_id n) const;

    // Elected cores, or the acting host (longest tenure, then lowest id)
    // while the group has none.
    std::vector<node_id> leaders(group_id g) const;
    node_id acting_host(group_id g) const;

    std::size_t active_node_count() const;
    std::vector<group_id> groups_needing_election() const;
    void clear_election_flag(group_id g);

    // Test/scenario hook: overwrite a group's core list without any checks.
    void force_cores(group_id g, const std::vector<node_id>& cores);

    // Throws protocol_error on any broken structural invariant.
    void validate() const;

    bytes canonical_snapshot() const;

private:
    group& mut(group_id g);
    group_id new_group(int level, std::optional<group_id> parent);
    void drop_membership(node_id n, group_id g);
    void add_membership(node_id n, group_id g);
    void erase_group(group_id g, std::vector<org_event>& events);
    void fill_core_vacancy(group& grp, node_id departed, std::size_t departed_pos,
                           std::vector<org_event>& events);
    std::size_t member_pos(const group& grp, node_id n) const;
    // Root formation, upper-membership sync, promotion detachments and
    // orphan re-admission, iterated to a fixpoint.
    void sync_structure(std::vector<org_event>& events);
    group_id admit_into_level1(node_id id, std::vector<org_event>* events);

    std::map<group_id, group> groups_;
    std::map<node_id, node_identity> nodes_;
    epoch_t epoch_ = 0;
    group_id next_group_id_ = 1;
};

} // namespace politeia::org
