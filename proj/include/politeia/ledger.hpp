#pragma once

// Archive pipeline: per-node activity archives roll up into core-signed
// group summaries, summaries roll up the tree, and the top-level summary
// of each epoch becomes a hash-chained community block. Parents may reject
// a child summary with reasons; the child rectifies, rebuilds (revision+1),
// and the block's finality is pushed back until the rectification has aged
// a full confirmation window.
//
// Verification never trusts JSON bytes: every digest is recomputed from
// the canonical binary encoding of the parsed content, and every signature
// is checked against the epoch's hierarchy snapshot.

#include "politeia/codec.hpp"
#include "politeia/crypto.hpp"
#include "politeia/economy.hpp"
#include "politeia/org.hpp"
#include "politeia/rng.hpp"
#include "politeia/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace politeia::ledger {

struct ledger_config {
    epoch_t finality_window = 1;   // epochs a block must survive un-rejected
    std::uint32_t backup_count = 2; // cross-backup holders per group
    std::uint32_t max_retry = 3;    // rectification attempts before giving up
};

// One archivable record: its digest, the epoch it was produced in, and
// whether it carries a signature. Unsigned records may not be archived.
struct archive_item {
    digest d;
    epoch_t epoch = 0;
    bool is_signed = true;
};

struct node_archive {
    node_id node = 0;
    epoch_t epoch = 0;
    digest prev_digest; // digest of this node's previous archive, zero if none
    std::vector<digest> record_digests; // sorted by (record epoch, digest)
    signature sig; // node's signature over archive_digest()

    bytes canonical_bytes() const;
    digest archive_digest() const;
};

node_archive build_node_archive(node_id node, epoch_t epoch, const digest& prev,
                                std::vector<archive_item> items, const key_pair& keys);

// A ranked election ballot as an archivable record.
struct signed_vote {
    node_id voter = 0;
    group_id group = 0;
    epoch_t epoch = 0;
    std::vector<node_id> ranking;
    signature sig;

    bytes signed_payload() const;
    bytes canonical_bytes() const;
    digest record_digest() const;
};

// Flat affair records embedded in a group's per-epoch report. Each carries
// enough to re-check the affair without the originating module's state.
struct outcome_record {
    digest proposal;
    std::uint8_t kind = 0;
    bool adopted = false;
    std::uint64_t mean_num = 0;
    std::uint64_t mean_den = 1;
    std::uint8_t routing = 0;
};

struct election_record {
    group_id group = 0;
    std::uint32_t declared_size = 0; // group size the elector claims
    std::vector<node_id> winners;
    node_id host = 0;
};

struct tx_record {
    transaction_id tx = 0;
    econ::stater amount = 0;
    group_id confirmer = 0;
    digest archive_hash;
};

struct reward_record {
    case_id rcase = 0;
    node_id beneficiary = 0;
    econ::stater amount = 0;
    std::uint8_t status = 0; // econ::case_status
};

enum class rectify_action : std::uint8_t {
    re_elect = 0,
    re_evaluate = 1,
    revoke_transaction = 2,
    other = 3,
};
std::string action_name(rectify_action a);
rectify_action action_from_name(const std::string& name);

struct rejection_notice {
    group_id from_group = 0;
    group_id to_group = 0;
    epoch_t epoch = 0; // epoch of the rejected summary
    std::string reasons; // non-empty
    std::vector<rectify_action> required_rectifications;
    signature sig; // host of from_group, over signed_payload()

    bytes signed_payload() const;
    bytes canonical_bytes() const;
    digest record_digest() const;
};

struct rectification_record {
    group_id group = 0;
    epoch_t epoch = 0; // epoch the rectification was performed in
    digest notice; // record_digest of the notice being answered
    std::vector<rectify_action> actions;
    std::string note;
    std::vector<digest> result_digests; // corrective records (election, invalidation)
    signature sig; // host of the rectifying group

    bytes signed_payload() const;
    bytes canonical_bytes() const;
    digest record_digest() const;
};

// Custody transfer of a group's summary history to a new core set.
struct handover_record {
    group_id group = 0;
    epoch_t epoch = 0;
    std::vector<digest> inventory; // digests of all summaries handed over
    std::vector<node_id> old_cores;
    std::vector<node_id> new_cores;
    std::map<node_id, signature> signatures; // both parties sign signed_payload()

    bytes signed_payload() const;
    bytes canonical_bytes() const;
    digest record_digest() const;
};

handover_record build_core_handover(group_id group, epoch_t epoch,
                                    const std::vector<digest>& outgoing_inventory,
                                    const std::vector<digest>& incoming_inventory,
                                    const std::vector<node_id>& old_cores,
                                    const std::vector<node_id>& new_cores,
                                    const std::function<const key_pair&(node_id)>& key_of);

// Structured affair summary for one group and epoch. Everything here is
// inside the summary digest, so the chain itself witnesses outcomes,
// confirmed transactions, announcements, rejections, and rectifications.
struct group_report {
    std::vector<outcome_record> outcomes;
    std::vector<election_record> elections;
    std::vector<tx_record> confirmed_transactions;
    std::vector<reward_record> reward_cases;
    std::vector<econ::invalidation_record> announcements;
    std::vector<rejection_notice> rejections_issued;
    std::vector<rectification_record> rectifications;
    std::vector<handover_record> handovers;

    void encode(byte_writer& w) const;
};

struct group_summary {
    group_id group = 0;
    epoch_t epoch = 0;
    std::uint32_t revision = 0; // bumped each time a rejection forces a rebuild
    digest hierarchy_digest;    // canonical hierarchy snapshot of the epoch
    digest backup_digest;       // cross-backup assignment; zero below the top
    group_report report;
    std::map<node_id, digest> member_archive_hashes;
    std::map<group_id, digest> child_summary_hashes;
    digest declared_digest; // claimed summary_digest; not part of the encoding
    std::map<node_id, signature> core_signatures; // over summary_digest()

    bytes canonical_bytes() const; // everything except declared_digest/signatures
    digest summary_digest() const;
};

// Assembles and signs a summary after verifying every member archive and
// child summary it commits to. `signers` is the group's current core set
// (or acting host while the group has none).
group_summary build_group_summary(group_id group, epoch_t epoch, std::uint32_t revision,
                                  const digest& hierarchy_digest, const digest& backup_digest,
                                  group_report report,
                                  const std::map<node_id, node_archive>& member_archives,
                                  const std::map<group_id, group_summary>& child_summaries,
                                  const std::map<node_id, public_key>& member_pks,
                                  const std::vector<group_id>& expected_children,
                                  const std::vector<node_id>& signers,
                                  const std::function<const key_pair&(node_id)>& key_of);

struct community_block {
    std::uint64_t height = 0;
    digest prev_hash; // chain hash of the previous block, zero for genesis
    group_summary top_summary;
    digest summary_hash;
    std::map<node_id, signature> top_signatures; // top group cores
    bool finalized = false;
    epoch_t finalize_epoch = 0; // meaningful once finalized

    bytes signing_payload() const; // height || prev_hash || summary_hash
};

// Block identity for linkage: the hash of the top summary's canonical
// encoding. prev_hash of height h+1 must equal this for height h.
digest block_chain_hash(const community_block& b);

community_block assemble_block(std::uint64_t height, const digest& prev_hash,
                               group_summary top_summary, const std::vector<node_id>& signers,
                               const std::function<const key_pair&(node_id)>& key_of);

// Throws unless the reasons text is non-empty; every rejection must say
// why it happened.
rejection_notice make_rejection(group_id from, group_id to, epoch_t epoch, std::string reasons,
                                std::vector<rectify_action> actions, const key_pair& signer);

// Parent-side review of a child's summary. Checks digests, signature
// completeness, archive coverage, and affair validity (election core
// counts). Returns a signed notice on the first violation found.
std::optional<rejection_notice> report_up(const org::hierarchy& h, group_id parent,
                                          const group_summary& child_summary,
                                          const std::map<node_id, node_archive>& member_archives,
                                          const std::map<group_id, group_summary>& child_summaries,
                                          const key_pair& parent_host_keys);

// Seeded cross-backup assignment: every group's summary is held by
// `backup_count` other groups, never itself. Single-group communities get
// an empty assignment.
std::map<group_id, std::vector<group_id>> assign_cross_backups(
    const std::vector<group_id>& groups, std::uint32_t backup_count, det_rng& rng);

bytes backup_canonical_bytes(epoch_t epoch, const std::map<group_id, std::vector<group_id>>& assignment);

// ---------------------------------------------------------------------
// Chain verification over a fully parsed export.

// Hierarchy snapshot as the verifier sees it: enough to recompute the
// snapshot digest and resolve keys, members, cores, and children.
struct snap_group {
    int level = 1;
    std::optional<group_id> parent;
    std::vector<node_id> members;
    std::vector<node_id> cores;
    std::vector<group_id> children;
    bool pending_merge = false;
    bool pending_split = false;
};

struct snap_node {
    public_key pk;
    epoch_t join_epoch = 0;
    std::uint8_t status = 0;
    epoch_t restricted_until = 0;
    std::vector<group_id> memberships;
};

struct snapshot_info {
    epoch_t epoch = 0;
    std::map<group_id, snap_group> groups;
    std::map<node_id, snap_node> nodes;

    bytes canonical_bytes() const; // must match hierarchy::canonical_snapshot
    group_id top() const;          // the single parentless group
    // Cores, or the acting host (earliest join, then lowest id) if none.
    std::vector<node_id> signers_of(group_id g) const;
};

snapshot_info snapshot_from(const org::hierarchy& h);

// Parsed chain with digests precomputed at load time, so repeated
// verification after single-file updates stays cheap.
struct chain_bundle {
    std::map<std::uint64_t, community_block> blocks;
    std::map<epoch_t, std::map<group_id, group_summary>> summaries;
    std::map<epoch_t, std::map<node_id, node_archive>> archives;
    std::map<epoch_t, snapshot_info> snapshots;
    std::map<epoch_t, std::map<group_id, std::vector<group_id>>> backups;

    // Digests recomputed from parsed content, keyed like the maps above.
    std::map<std::uint64_t, digest> block_summary_digests; // canonical(top_summary)
    std::map<epoch_t, std::map<group_id, digest>> summary_digests;
    std::map<epoch_t, std::map<node_id, digest>> archive_digests;
    std::map<epoch_t, digest> snapshot_digests;
    std::map<epoch_t, digest> backup_digests;

    void index_block(std::uint64_t height);
    void index_summary(epoch_t e, group_id g);
    void index_archive(epoch_t e, node_id n);
    void index_snapshot(epoch_t e);
    void index_backups(epoch_t e);
    void index_all();
};

struct chain_violation {
    epoch_t epoch = 0;      // epoch or block height the violation sits at
    std::string path;       // file-like locator of the offending field
    std::string reason;

    std::string to_string() const;
};

// Memoizes signature checks across verification runs; sound because the
// key covers the full (public key, message, signature) triple.
class verify_context {
public:
    bool check(const public_key& pk, std::span<const std::uint8_t> msg, const signature& sig);
    std::size_t cache_size() const { return cache_.size(); }

private:
    std::map<digest, bool> cache_;
};

// Full structural verification: linkage, digests, signatures, archive
// coverage, finality recomputation, and reward-amount consistency.
// Returns the first violation in deterministic check order, or nullopt.
std::optional<chain_violation> verify_chain(const chain_bundle& chain, verify_context& ctx,
                                            const ledger_config& cfg = {});

inline std::optional<chain_violation> verify_chain(const chain_bundle& chain,
                                                   const ledger_config& cfg = {}) {
    verify_context ctx;
    return verify_chain(chain, ctx, cfg);
}

} // namespace politeia::ledger
