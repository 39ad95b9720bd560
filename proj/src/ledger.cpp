#include "politeia/ledger.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace politeia::ledger {

namespace {

std::span<const std::uint8_t> dig_span(const digest& d) {
    return std::span<const std::uint8_t>(d.v.data(), d.v.size());
}

void encode_actions(byte_writer& w, const std::vector<rectify_action>& actions) {
    w.list(actions, [](byte_writer& out, rectify_action a) {
        out.u8(static_cast<std::uint8_t>(a));
    });
}

} // namespace

// ---------------------------------------------------------------------
// Node archives

bytes node_archive::canonical_bytes() const {
    byte_writer w;
    w.kind(record_kind::node_archive);
    w.u64(node);
    w.u64(epoch);
    w.dig(prev_digest);
    w.list(record_digests, [](byte_writer& out, const digest& d) { out.dig(d); });
    return w.take();
}

digest node_archive::archive_digest() const { return sha256(canonical_bytes()); }

node_archive build_node_archive(node_id node, epoch_t epoch, const digest& prev,
                                std::vector<archive_item> items, const key_pair& keys) {
    for (const auto& it : items) {
        if (!it.is_signed) throw protocol_error("unsigned record cannot be archived");
    }
    std::sort(items.begin(), items.end(), [](const archive_item& a, const archive_item& b) {
        return a.epoch != b.epoch ? a.epoch < b.epoch : a.d < b.d;
    });
    node_archive out;
    out.node = node;
    out.epoch = epoch;
    out.prev_digest = prev;
    out.record_digests.reserve(items.size());
    for (const auto& it : items) out.record_digests.push_back(it.d);
    digest d = out.archive_digest();
    out.sig = sign(keys, dig_span(d));
    return out;
}

// ---------------------------------------------------------------------
// Archivable election ballots

bytes signed_vote::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::signed_vote);
    w.u64(voter);
    w.u64(group);
    w.u64(epoch);
    w.list(ranking, [](byte_writer& out, node_id n) { out.u64(n); });
    return w.take();
}

bytes signed_vote::canonical_bytes() const {
    byte_writer w;
    w.raw(signed_payload());
    w.sig(sig);
    return w.take();
}

digest signed_vote::record_digest() const { return sha256(canonical_bytes()); }

// ---------------------------------------------------------------------
// Rejection and rectification

std::string action_name(rectify_action a) {
    switch (a) {
    case rectify_action::re_elect: return "re-elect";
    case rectify_action::re_evaluate: return "re-evaluate";
    case rectify_action::revoke_transaction: return "revoke-transaction";
    case rectify_action::other: return "other";
    }
    throw protocol_error("unknown rectification action");
}

rectify_action action_from_name(const std::string& name) {
    if (name == "re-elect") return rectify_action::re_elect;
    if (name == "re-evaluate") return rectify_action::re_evaluate;
    if (name == "revoke-transaction") return rectify_action::revoke_transaction;
    if (name == "other") return rectify_action::other;
    throw protocol_error("unknown rectification action: " + name);
}

bytes rejection_notice::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::rejection);
    w.u64(from_group);
    w.u64(to_group);
    w.u64(epoch);
    w.str(reasons);
    encode_actions(w, required_rectifications);
    return w.take();
}

bytes rejection_notice::canonical_bytes() const {
    byte_writer w;
    w.raw(signed_payload());
    w.sig(sig);
    return w.take();
}

digest rejection_notice::record_digest() const { return sha256(canonical_bytes()); }

bytes rectification_record::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::rectification);
    w.u64(group);
    w.u64(epoch);
    w.dig(notice);
    encode_actions(w, actions);
    w.str(note);
    w.list(result_digests, [](byte_writer& out, const digest& d) { out.dig(d); });
    return w.take();
}

bytes rectification_record::canonical_bytes() const {
    byte_writer w;
    w.raw(signed_payload());
    w.sig(sig);
    return w.take();
}

digest rectification_record::record_digest() const { return sha256(canonical_bytes()); }

// ---------------------------------------------------------------------
// Core handover

bytes handover_record::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::handover);
    w.u64(group);
    w.u64(epoch);
    w.list(inventory, [](byte_writer& out, const digest& d) { out.dig(d); });
    w.list(old_cores, [](byte_writer& out, node_id n) { out.u64(n); });
    w.list(new_cores, [](byte_writer& out, node_id n) { out.u64(n); });
    return w.take();
}

bytes handover_record::canonical_bytes() const {
    byte_writer w;
    w.raw(signed_payload());
    w.map(signatures, [](byte_writer& out, node_id n, const signature& s) {
        out.u64(n);
        out.sig(s);
    });
    return w.take();
}

digest handover_record::record_digest() const { return sha256(canonical_bytes()); }

handover_record build_core_handover(group_id group, epoch_t epoch,
                                    const std::vector<digest>& outgoing_inventory,
                                    const std::vector<digest>& incoming_inventory,
                                    const std::vector<node_id>& old_cores,
                                    const std::vector<node_id>& new_cores,
                                    const std::function<const key_pair&(node_id)>& key_of) {
    if (outgoing_inventory != incoming_inventory) {
        throw protocol_error("handover inventories disagree; custody transfer blocked");
    }
    handover_record rec;
    rec.group = group;
    rec.epoch = epoch;
    rec.inventory = outgoing_inventory;
    rec.old_cores = old_cores;
    rec.new_cores = new_cores;
    bytes payload = rec.signed_payload();
    std::set<node_id> parties(old_cores.begin(), old_cores.end());
    parties.insert(new_cores.begin(), new_cores.end());
    for (node_id n : parties) rec.signatures[n] = sign(key_of(n), payload);
    return rec;
}

// ---------------------------------------------------------------------
// Group summaries

void group_report::encode(byte_writer& w) const {
    w.list(outcomes, [](byte_writer& out, const outcome_record& r) {
        out.dig(r.proposal);
        out.u8(r.kind);
        out.boolean(r.adopted);
        out.u64(r.mean_num);
        out.u64(r.mean_den);
        out.u8(r.routing);
    });
    w.list(elections, [](byte_writer& out, const election_record& r) {
        out.u64(r.group);
        out.u32(r.declared_size);
        out.list(r.winners, [](byte_writer& o, node_id n) { o.u64(n); });
        out.u64(r.host);
    });
    w.list(confirmed_transactions, [](byte_writer& out, const tx_record& r) {
        out.u64(r.tx);
        out.u64(r.amount);
        out.u64(r.confirmer);
        out.dig(r.archive_hash);
    });
    w.list(reward_cases, [](byte_writer& out, const reward_record& r) {
        out.u64(r.rcase);
        out.u64(r.beneficiary);
        out.u64(r.amount);
        out.u8(r.status);
    });
    w.list(announcements, [](byte_writer& out, const econ::invalidation_record& r) {
        out.blob(r.canonical_bytes());
    });
    w.list(rejections_issued, [](byte_writer& out, const rejection_notice& r) {
        out.blob(r.canonical_bytes());
    });
    w.list(rectifications, [](byte_writer& out, const rectification_record& r) {
        out.blob(r.canonical_bytes());
    });
    w.list(handovers, [](byte_writer& out, const handover_record& r) {
        out.blob(r.canonical_bytes());
    });
}

bytes group_summary::canonical_bytes() const {
    byte_writer w;
    w.kind(record_kind::group_summary);
    w.u64(group);
    w.u64(epoch);
    w.u32(revision);
    w.dig(hierarchy_digest);
    w.dig(backup_digest);
    report.encode(w);
    w.map(member_archive_hashes, [](byte_writer& out, node_id n, const digest& d) {
        out.u64(n);
        out.dig(d);
    });
    w.map(child_summary_hashes, [](byte_writer& out, group_id g, const digest& d) {
        out.u64(g);
        out.dig(d);
    });
    return w.take();
}

digest group_summary::summary_digest() const { return sha256(canonical_bytes()); }

group_summary build_group_summary(group_id group, epoch_t epoch, std::uint32_t revision,
                                  const digest& hierarchy_digest, const digest& backup_digest,
                                  group_report report,
                                  const std::map<node_id, node_archive>& member_archives,
                                  const std::map<group_id, group_summary>& child_summaries,
                                  const std::map<node_id, public_key>& member_pks,
                                  const std::vector<group_id>& expected_children,
                                  const std::vector<node_id>& signers,
                                  const std::function<const key_pair&(node_id)>& key_of) {
    group_summary s;
    s.group = group;
    s.epoch = epoch;
    s.revision = revision;
    s.hierarchy_digest = hierarchy_digest;
    s.backup_digest = backup_digest;
    s.report = std::move(report);

    for (const auto& [n, archive] : member_archives) {
        if (archive.node != n || archive.epoch != epoch) {
            throw protocol_error("member archive does not belong to this group epoch");
        }
        auto pk_it = member_pks.find(n);
        if (pk_it == member_pks.end()) throw protocol_error("archive from unknown member");
        digest d = archive.archive_digest();
        if (!verify(pk_it->second, dig_span(d), archive.sig)) {
            throw protocol_error("member archive signature does not verify");
        }
        s.member_archive_hashes[n] = d;
    }

    for (group_id child : expected_children) {
        auto it = child_summaries.find(child);
        if (it == child_summaries.end()) {
            throw protocol_error("missing child summary blocks parent summary");
        }
        digest d = it->second.summary_digest();
        if (it->second.declared_digest != d) {
            throw protocol_error("child summary digest mismatch");
        }
        s.child_summary_hashes[child] = d;
    }

    digest own = s.summary_digest();
    s.declared_digest = own;
    for (node_id n : signers) s.core_signatures[n] = sign(key_of(n), dig_span(own));
    return s;
}

// ---------------------------------------------------------------------
// Blocks

bytes community_block::signing_payload() const {
    byte_writer w;
    w.kind(record_kind::block);
    w.u64(height);
    w.dig(prev_hash);
    w.dig(summary_hash);
    return w.take();
}

digest block_chain_hash(const community_block& b) {
    return sha256(b.top_summary.canonical_bytes());
}

community_block assemble_block(std::uint64_t height, const digest& prev_hash,
                               group_summary top_summary, const std::vector<node_id>& signers,
                               const std::function<const key_pair&(node_id)>& key_of) {
    community_block b;
    b.height = height;
    b.prev_hash = prev_hash;
    b.summary_hash = top_summary.summary_digest();
    if (top_summary.core_signatures.empty()) {
        throw protocol_error("top summary carries no core signatures");
    }
    b.top_summary = std::move(top_summary);
    bytes payload = b.signing_payload();
    for (node_id n : signers) b.top_signatures[n] = sign(key_of(n), payload);
    return b;
}

// ---------------------------------------------------------------------
// Parent review

rejection_notice make_rejection(group_id from, group_id to, epoch_t epoch, std::string reasons,
                                std::vector<rectify_action> actions, const key_pair& signer) {
    if (reasons.empty()) throw protocol_error("rejection must state its reasons");
    rejection_notice n;
    n.from_group = from;
    n.to_group = to;
    n.epoch = epoch;
    n.reasons = std::move(reasons);
    n.required_rectifications = std::move(actions);
    n.sig = sign(signer, n.signed_payload());
    return n;
}

std::optional<rejection_notice> report_up(const org::hierarchy& h, group_id parent,
                                          const group_summary& child_summary,
                                          const std::map<node_id, node_archive>& member_archives,
                                          const std::map<group_id, group_summary>& child_summaries,
                                          const key_pair& parent_host_keys) {
    const org::group& pg = h.group_at(parent);
    group_id child = child_summary.group;
    if (std::find(pg.children.begin(), pg.children.end(), child) == pg.children.end()) {
        throw protocol_error("summary submitted by a group that is not a direct child");
    }

    auto reject = [&](const std::string& why, rectify_action action) {
        return make_rejection(parent, child, child_summary.epoch, why, {action},
                              parent_host_keys);
    };

    if (child_summary.declared_digest != child_summary.summary_digest()) {
        return reject("summary digest does not match its content", rectify_action::other);
    }

    const org::group& cg = h.group_at(child);
    std::set<node_id> members(cg.members.begin(), cg.members.end());
    std::set<node_id> hashed;
    for (const auto& [n, d] : child_summary.member_archive_hashes) hashed.insert(n);
    if (hashed != members) {
        return reject("member archive hashes do not cover the current membership",
                      rectify_action::other);
    }
    for (const auto& [n, d] : child_summary.member_archive_hashes) {
        auto it = member_archives.find(n);
        if (it == member_archives.end() || it->second.archive_digest() != d) {
            return reject("member archive digest mismatch", rectify_action::other);
        }
        if (!verify(h.node_at(n).pk, dig_span(d), it->second.sig)) {
            return reject("member archive signature does not verify", rectify_action::other);
        }
    }

    std::set<group_id> expected(cg.children.begin(), cg.children.end());
    std::set<group_id> present;
    for (const auto& [g, d] : child_summary.child_summary_hashes) present.insert(g);
    if (expected != present) {
        return reject("child summary hashes do not cover the subordinate groups",
                      rectify_action::other);
    }
    for (const auto& [g, d] : child_summary.child_summary_hashes) {
        auto it = child_summaries.find(g);
        if (it == child_summaries.end() || it->second.summary_digest() != d) {
            return reject("subordinate summary digest mismatch", rectify_action::other);
        }
    }

    std::vector<node_id> signers = h.leaders(child);
    std::set<node_id> want(signers.begin(), signers.end());
    std::set<node_id> got;
    for (const auto& [n, s] : child_summary.core_signatures) got.insert(n);
    if (want != got) {
        return reject("summary is not signed by the full core set", rectify_action::other);
    }
    digest d = child_summary.summary_digest();
    for (const auto& [n, s] : child_summary.core_signatures) {
        if (!verify(h.node_at(n).pk, dig_span(d), s)) {
            return reject("core signature does not verify", rectify_action::other);
        }
    }

    for (const auto& er : child_summary.report.elections) {
        std::set<node_id> distinct(er.winners.begin(), er.winners.end());
        std::size_t required = org::required_core_count(er.declared_size);
        if (distinct.size() != er.winners.size() || er.winners.size() != required) {
            std::ostringstream why;
            why << "election for group " << er.group << " declared " << er.winners.size()
                << " winners for size " << er.declared_size << "; " << required << " required";
            return reject(why.str(), rectify_action::re_elect);
        }
    }

    return std::nullopt;
}

// ---------------------------------------------------------------------
// Cross-backups

std::map<group_id, std::vector<group_id>> assign_cross_backups(
    const std::vector<group_id>& groups, std::uint32_t backup_count, det_rng& rng) {
    std::map<group_id, std::vector<group_id>> out;
    if (groups.size() < 2) return out;
    for (group_id g : groups) {
        std::vector<group_id> others;
        others.reserve(groups.size() - 1);
        for (group_id o : groups) {
            if (o != g) others.push_back(o);
        }
        std::size_t want = std::min<std::size_t>(backup_count, others.size());
        det_rng sub = rng.fork("backup", g);
        std::vector<group_id> holders;
        for (std::size_t idx : sub.sample(others.size(), want)) holders.push_back(others[idx]);
        out[g] = std::move(holders);
    }
    return out;
}

bytes backup_canonical_bytes(epoch_t epoch,
                             const std::map<group_id, std::vector<group_id>>& assignment) {
    byte_writer w;
    w.kind(record_kind::backup_assignment);
    w.u64(epoch);
    w.map(assignment, [](byte_writer& out, group_id g, const std::vector<group_id>& holders) {
        out.u64(g);
        out.list(holders, [](byte_writer& o, group_id h) { o.u64(h); });
    });
    return w.take();
}

// ---------------------------------------------------------------------
// Snapshots

bytes snapshot_info::canonical_bytes() const {
    byte_writer w;
    w.kind(record_kind::hierarchy_snapshot);
    w.u64(epoch);
    w.u32(static_cast<std::uint32_t>(groups.size()));
    for (const auto& [gid, g] : groups) {
        w.u64(gid);
        w.u8(static_cast<std::uint8_t>(g.level));
        w.opt(g.parent, [](byte_writer& out, group_id p) { out.u64(p); });
        w.list(g.members, [](byte_writer& out, node_id n) { out.u64(n); });
        w.list(g.cores, [](byte_writer& out, node_id n) { out.u64(n); });
        w.list(g.children, [](byte_writer& out, group_id c) { out.u64(c); });
        w.boolean(g.pending_merge);
        w.boolean(g.pending_split);
    }
    w.u32(static_cast<std::uint32_t>(nodes.size()));
    for (const auto& [nid, ident] : nodes) {
        w.u64(nid);
        w.key(ident.pk);
        w.u64(ident.join_epoch);
        w.u8(ident.status);
        w.u64(ident.restricted_until);
        w.list(ident.memberships, [](byte_writer& out, group_id g) { out.u64(g); });
    }
    return w.take();
}

snapshot_info snapshot_from(const org::hierarchy& h) {
    snapshot_info out;
    out.epoch = h.epoch();
    for (const auto& [gid, g] : h.groups()) {
        snap_group sg;
        sg.level = g.level;
        sg.parent = g.parent;
        sg.members = g.members;
        sg.cores = g.core_nodes;
        sg.children = g.children;
        sg.pending_merge = g.pending_merge;
        sg.pending_split = g.pending_split;
        out.groups.emplace(gid, std::move(sg));
    }
    for (const auto& [nid, ident] : h.nodes()) {
        snap_node sn;
        sn.pk = ident.pk;
        sn.join_epoch = ident.join_epoch;
        sn.status = static_cast<std::uint8_t>(ident.status);
        sn.restricted_until = ident.restricted_until;
        sn.memberships = ident.memberships;
        out.nodes.emplace(nid, std::move(sn));
    }
    return out;
}

group_id snapshot_info::top() const {
    group_id found = 0;
    bool any = false;
    for (const auto& [gid, g] : groups) {
        if (!g.parent) {
            if (any) throw protocol_error("snapshot has multiple parentless groups");
            found = gid;
            any = true;
        }
    }
    if (!any) throw protocol_error("snapshot has no top-level group");
    return found;
}

std::vector<node_id> snapshot_info::signers_of(group_id g) const {
    auto it = groups.find(g);
    if (it == groups.end()) throw protocol_error("snapshot has no such group");
    if (!it->second.cores.empty()) return it->second.cores;
    node_id best = 0;
    bool any = false;
    for (node_id n : it->second.members) {
        auto nit = nodes.find(n);
        if (nit == nodes.end() || nit->second.status == 2) continue;
        if (!any || nit->second.join_epoch < nodes.at(best).join_epoch ||
            (nit->second.join_epoch == nodes.at(best).join_epoch && n < best)) {
            best = n;
            any = true;
        }
    }
    if (!any) throw protocol_error("group has no member able to act as host");
    return {best};
}

// ---------------------------------------------------------------------
// Bundle indexing

void chain_bundle::index_block(std::uint64_t height) {
    block_summary_digests[height] = block_chain_hash(blocks.at(height));
}

void chain_bundle::index_summary(epoch_t e, group_id g) {
    summary_digests[e][g] = summaries.at(e).at(g).summary_digest();
}

void chain_bundle::index_archive(epoch_t e, node_id n) {
    archive_digests[e][n] = archives.at(e).at(n).archive_digest();
}

void chain_bundle::index_snapshot(epoch_t e) {
    snapshot_digests[e] = sha256(snapshots.at(e).canonical_bytes());
}

void chain_bundle::index_backups(epoch_t e) {
    backup_digests[e] = sha256(backup_canonical_bytes(e, backups.at(e)));
}

void chain_bundle::index_all() {
    for (const auto& [h, b] : blocks) index_block(h);
    for (const auto& [e, per_group] : summaries) {
        for (const auto& [g, s] : per_group) index_summary(e, g);
    }
    for (const auto& [e, per_node] : archives) {
        for (const auto& [n, a] : per_node) index_archive(e, n);
    }
    for (const auto& [e, s] : snapshots) index_snapshot(e);
    for (const auto& [e, b] : backups) index_backups(e);
}

std::string chain_violation::to_string() const {
    std::ostringstream out;
    out << "epoch " << epoch << ": " << path << ": " << reason;
    return out.str();
}

bool verify_context::check(const public_key& pk, std::span<const std::uint8_t> msg,
                           const signature& sig) {
    byte_writer w;
    w.key(pk);
    w.blob(msg);
    w.sig(sig);
    digest k = sha256(w.data());
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    bool ok = verify(pk, msg, sig);
    cache_.emplace(k, ok);
    return ok;
}

// ---------------------------------------------------------------------
// Chain verification

namespace {

struct verify_state {
    const chain_bundle& chain;
    verify_context& ctx;
    const ledger_config& cfg;
    std::optional<chain_violation> violation;

    bool fail(epoch_t epoch, std::string path, std::string reason) {
        if (!violation) violation = chain_violation{epoch, std::move(path), std::move(reason)};
        return false;
    }
};

std::string block_path(std::uint64_t h) {
    return "chain/" + std::to_string(h) + ".block.json";
}
std::string summary_path(epoch_t e, group_id g) {
    return "archives/" + std::to_string(e) + "/" + std::to_string(g) + ".summary.json";
}
std::string archive_path(epoch_t e, node_id n) {
    return "archives/" + std::to_string(e) + "/" + std::to_string(n) + ".archive.json";
}

bool check_linkage(verify_state& st) {
    const auto& blocks = st.chain.blocks;
    if (blocks.empty()) return st.fail(0, "chain", "no blocks in export");

    std::uint64_t prev_height = 0;
    bool first = true;
    for (const auto& [h, b] : blocks) {
        if (!first && h != prev_height + 1) {
            return st.fail(h, block_path(h), "block heights are not contiguous");
        }
        if (b.height != h) {
            return st.fail(h, block_path(h) + ":height", "height does not match its file");
        }
        digest recomputed = st.chain.block_summary_digests.at(h);
        if (b.summary_hash != recomputed) {
            return st.fail(h, block_path(h) + ":summary_hash",
                           "summary hash does not match the embedded summary");
        }
        if (first) {
            if (!b.prev_hash.is_zero()) {
                return st.fail(h, block_path(h) + ":prev_hash", "genesis prev hash not zero");
            }
        } else if (b.prev_hash != st.chain.block_summary_digests.at(prev_height)) {
            return st.fail(h, block_path(h) + ":prev_hash",
                           "prev hash does not match the previous block");
        }
        if (b.top_summary.epoch != h) {
            return st.fail(h, block_path(h) + ":top_summary.epoch",
                           "embedded summary epoch differs from block height");
        }
        prev_height = h;
        first = false;
    }

    // Every block epoch needs summaries, archives, a snapshot, and a
    // backup assignment; every summary epoch needs a block.
    for (const auto& [h, b] : blocks) {
        if (!st.chain.snapshots.count(h)) {
            return st.fail(h, "archives/" + std::to_string(h) + "/hierarchy.json",
                           "missing hierarchy snapshot");
        }
        if (!st.chain.backups.count(h)) {
            return st.fail(h, "archives/" + std::to_string(h) + "/backups.json",
                           "missing cross-backup assignment");
        }
        if (!st.chain.summaries.count(h)) {
            return st.fail(h, "archives/" + std::to_string(h), "missing summaries for epoch");
        }
    }
    for (const auto& [e, per_group] : st.chain.summaries) {
        if (!blocks.count(e)) {
            return st.fail(e, "chain", "epoch has summaries but no block");
        }
    }
    return true;
}

bool check_summaries(verify_state& st) {
    for (const auto& [e, per_group] : st.chain.summaries) {
        const snapshot_info& snap = st.chain.snapshots.at(e);
        const digest& snap_digest = st.chain.snapshot_digests.at(e);
        const digest& backups_digest = st.chain.backup_digests.at(e);
        group_id top = snap.top();

        std::set<group_id> snap_groups;
        for (const auto& [gid, g] : snap.groups) snap_groups.insert(gid);
        std::set<group_id> summarized;
        for (const auto& [gid, s] : per_group) summarized.insert(gid);
        if (snap_groups != summarized) {
            return st.fail(e, "archives/" + std::to_string(e),
                           "summaries do not cover exactly the epoch's groups");
        }

        for (const auto& [g, s] : per_group) {
            std::string base = summary_path(e, g);
            if (s.group != g || s.epoch != e) {
                return st.fail(e, base, "summary group/epoch does not match its file");
            }
            digest recomputed = st.chain.summary_digests.at(e).at(g);
            if (s.declared_digest != recomputed) {
                return st.fail(e, base + ":summary_digest",
                               "declared digest does not match the content");
            }
            if (s.hierarchy_digest != snap_digest) {
                return st.fail(e, base + ":hierarchy_digest",
                               "summary does not bind the epoch's hierarchy snapshot");
            }
            digest want_backup = (g == top) ? backups_digest : zero_digest();
            if (s.backup_digest != want_backup) {
                return st.fail(e, base + ":backup_digest",
                               "summary does not bind the epoch's backup assignment");
            }

            const snap_group& sg = snap.groups.at(g);
            std::set<node_id> members(sg.members.begin(), sg.members.end());
            std::set<node_id> hashed;
            for (const auto& [n, d] : s.member_archive_hashes) hashed.insert(n);
            if (hashed != members) {
                return st.fail(e, base + ":member_archive_hashes",
                               "hashes do not cover exactly the group's members");
            }
            auto epoch_archives = st.chain.archive_digests.find(e);
            for (const auto& [n, d] : s.member_archive_hashes) {
                if (epoch_archives == st.chain.archive_digests.end() ||
                    !epoch_archives->second.count(n)) {
                    return st.fail(e, archive_path(e, n), "member archive file missing");
                }
                if (epoch_archives->second.at(n) != d) {
                    return st.fail(e, base + ":member_archive_hashes",
                                   "member archive digest mismatch for node " + std::to_string(n));
                }
            }

            std::set<group_id> children(sg.children.begin(), sg.children.end());
            std::set<group_id> committed;
            for (const auto& [c, d] : s.child_summary_hashes) committed.insert(c);
            if (children != committed) {
                return st.fail(e, base + ":child_summary_hashes",
                               "hashes do not cover exactly the subordinate groups");
            }
            for (const auto& [c, d] : s.child_summary_hashes) {
                if (st.chain.summary_digests.at(e).at(c) != d) {
                    return st.fail(e, base + ":child_summary_hashes",
                                   "child summary digest mismatch for group " + std::to_string(c));
                }
            }
        }

        // The block must embed exactly the exported top summary.
        const community_block& b = st.chain.blocks.at(e);
        if (b.top_summary.group != top) {
            return st.fail(e, block_path(e) + ":top_summary.group",
                           "block summary is not the top-level group's");
        }
        if (st.chain.block_summary_digests.at(e) != st.chain.summary_digests.at(e).at(top)) {
            return st.fail(e, block_path(e) + ":top_summary",
                           "block summary differs from the exported top summary");
        }
    }
    return true;
}

bool check_signatures(verify_state& st) {
    for (const auto& [e, per_group] : st.chain.summaries) {
        const snapshot_info& snap = st.chain.snapshots.at(e);
        for (const auto& [g, s] : per_group) {
            std::string base = summary_path(e, g);
            std::vector<node_id> signers = snap.signers_of(g);
            std::set<node_id> want(signers.begin(), signers.end());
            std::set<node_id> got;
            for (const auto& [n, sg] : s.core_signatures) got.insert(n);
            if (want != got) {
                return st.fail(e, base + ":core_signatures",
                               "signers are not exactly the group's leaders");
            }
            const digest& d = st.chain.summary_digests.at(e).at(g);
            for (const auto& [n, sg] : s.core_signatures) {
                auto nit = snap.nodes.find(n);
                if (nit == snap.nodes.end()) {
                    return st.fail(e, base + ":core_signatures", "signer unknown to the snapshot");
                }
                if (!st.ctx.check(nit->second.pk, dig_span(d), sg)) {
                    return st.fail(e, base + ":core_signatures",
                                   "core signature does not verify for node " + std::to_string(n));
                }
            }

            for (std::size_t i = 0; i < s.report.rejections_issued.size(); ++i) {
                const rejection_notice& n = s.report.rejections_issued[i];
                std::string where = base + ":rejections[" + std::to_string(i) + "]";
                if (n.reasons.empty()) return st.fail(e, where, "rejection without reasons");
                if (!snap.groups.count(n.from_group)) {
                    return st.fail(e, where, "rejecting group unknown to the snapshot");
                }
                node_id host = snap.signers_of(n.from_group).front();
                if (!st.ctx.check(snap.nodes.at(host).pk, n.signed_payload(), n.sig)) {
                    return st.fail(e, where, "rejection signature does not verify");
                }
            }
            for (std::size_t i = 0; i < s.report.rectifications.size(); ++i) {
                const rectification_record& r = s.report.rectifications[i];
                std::string where = base + ":rectifications[" + std::to_string(i) + "]";
                auto snap_it = st.chain.snapshots.find(r.epoch);
                if (snap_it == st.chain.snapshots.end()) {
                    return st.fail(e, where, "rectification epoch has no snapshot");
                }
                if (!snap_it->second.groups.count(r.group)) {
                    return st.fail(e, where, "rectifying group unknown at its epoch");
                }
                node_id host = snap_it->second.signers_of(r.group).front();
                if (!st.ctx.check(snap_it->second.nodes.at(host).pk, r.signed_payload(), r.sig)) {
                    return st.fail(e, where, "rectification signature does not verify");
                }
            }
            for (std::size_t i = 0; i < s.report.handovers.size(); ++i) {
                const handover_record& r = s.report.handovers[i];
                std::string where = base + ":handovers[" + std::to_string(i) + "]";
                std::set<node_id> parties(r.old_cores.begin(), r.old_cores.end());
                parties.insert(r.new_cores.begin(), r.new_cores.end());
                std::set<node_id> signed_by;
                for (const auto& [n, sg] : r.signatures) signed_by.insert(n);
                if (parties != signed_by) {
                    return st.fail(e, where, "handover not signed by both core sets");
                }
                bytes payload = r.signed_payload();
                for (const auto& [n, sg] : r.signatures) {
                    auto nit = snap.nodes.find(n);
                    if (nit == snap.nodes.end()) {
                        return st.fail(e, where, "handover signer unknown to the snapshot");
                    }
                    if (!st.ctx.check(nit->second.pk, payload, sg)) {
                        return st.fail(e, where, "handover signature does not verify");
                    }
                }
            }
        }

        const community_block& b = st.chain.blocks.at(e);
        std::vector<node_id> top_signers = snap.signers_of(snap.top());
        std::set<node_id> want(top_signers.begin(), top_signers.end());
        std::set<node_id> got;
        for (const auto& [n, sg] : b.top_signatures) got.insert(n);
        if (want != got) {
            return st.fail(e, block_path(e) + ":top_signatures",
                           "block signers are not exactly the top group's leaders");
        }
        bytes payload = b.signing_payload();
        for (const auto& [n, sg] : b.top_signatures) {
            if (!st.ctx.check(snap.nodes.at(n).pk, payload, sg)) {
                return st.fail(e, block_path(e) + ":top_signatures",
                               "block signature does not verify for node " + std::to_string(n));
            }
        }
    }
    return true;
}

bool check_archives(verify_state& st) {
    std::map<node_id, std::pair<epoch_t, digest>> last_seen; // node -> latest archive
    for (const auto& [e, per_node] : st.chain.archives) {
        auto snap_it = st.chain.snapshots.find(e);
        if (snap_it == st.chain.snapshots.end()) {
            return st.fail(e, "archives/" + std::to_string(e), "archives without a snapshot");
        }
        const snapshot_info& snap = snap_it->second;
        std::set<node_id> expected;
        for (const auto& [gid, g] : snap.groups) {
            expected.insert(g.members.begin(), g.members.end());
        }
        std::set<node_id> present;
        for (const auto& [n, a] : per_node) present.insert(n);
        if (expected != present) {
            return st.fail(e, "archives/" + std::to_string(e),
                           "archive files do not cover exactly the epoch's members");
        }

        for (const auto& [n, a] : per_node) {
            std::string base = archive_path(e, n);
            if (a.node != n || a.epoch != e) {
                return st.fail(e, base, "archive node/epoch does not match its file");
            }
            digest expect_prev = zero_digest();
            auto seen = last_seen.find(n);
            if (seen != last_seen.end()) expect_prev = seen->second.second;
            if (a.prev_digest != expect_prev) {
                return st.fail(e, base + ":prev_digest",
                               "archive does not extend the node's previous archive");
            }
            const digest& d = st.chain.archive_digests.at(e).at(n);
            auto nit = snap.nodes.find(n);
            if (nit == snap.nodes.end()) {
                return st.fail(e, base, "archiving node unknown to the snapshot");
            }
            if (!st.ctx.check(nit->second.pk, dig_span(d), a.sig)) {
                return st.fail(e, base + ":signature", "archive signature does not verify");
            }
            last_seen[n] = {e, d};
        }
    }
    return true;
}

bool check_finality(verify_state& st) {
    // Rejections are keyed by the epoch of the summary they reject; a
    // matching rectification (by notice digest) re-opens the path to
    // finality once it has aged a full window.
    std::map<epoch_t, std::vector<digest>> notices;
    std::map<digest, epoch_t> rectified;
    for (const auto& [e, per_group] : st.chain.summaries) {
        for (const auto& [g, s] : per_group) {
            for (const auto& n : s.report.rejections_issued) {
                notices[n.epoch].push_back(n.record_digest());
            }
            for (const auto& r : s.report.rectifications) {
                auto it = rectified.find(r.notice);
                if (it == rectified.end() || r.epoch < it->second) rectified[r.notice] = r.epoch;
            }
        }
    }

    std::uint64_t last = st.chain.blocks.rbegin()->first;
    for (const auto& [h, b] : st.chain.blocks) {
        epoch_t expected = h + st.cfg.finality_window;
        bool resolvable = true;
        auto it = notices.find(h);
        if (it != notices.end()) {
            for (const digest& nd : it->second) {
                auto rit = rectified.find(nd);
                if (rit == rectified.end()) {
                    resolvable = false;
                    break;
                }
                expected = std::max(expected, rit->second + st.cfg.finality_window);
            }
        }
        bool want_final = resolvable && expected <= last;
        if (b.finalized != want_final) {
            return st.fail(h, block_path(h) + ":finalized",
                           want_final ? "block should be finalized by the chain's own rules"
                                      : "block finalized despite an open rejection or window");
        }
        epoch_t want_epoch = want_final ? expected : 0;
        if (b.finalize_epoch != want_epoch) {
            return st.fail(h, block_path(h) + ":finalize_epoch",
                           "finalize epoch does not match the recomputed rule");
        }
    }
    return true;
}

bool check_rewards_and_backups(verify_state& st) {
    // A reward case must never change amount once confirmed, and a minted
    // or held grant needs a confirmation at or before its epoch.
    std::map<case_id, std::pair<epoch_t, econ::stater>> confirmed;
    for (const auto& [e, per_group] : st.chain.summaries) {
        for (const auto& [g, s] : per_group) {
            for (const auto& r : s.report.reward_cases) {
                auto status = static_cast<econ::case_status>(r.status);
                if (status == econ::case_status::confirmed) {
                    auto it = confirmed.find(r.rcase);
                    if (it != confirmed.end() && it->second.second != r.amount) {
                        return st.fail(e, summary_path(e, g) + ":reward_cases",
                                       "case " + std::to_string(r.rcase) +
                                           " confirmed with two different amounts");
                    }
                    if (it == confirmed.end()) confirmed[r.rcase] = {e, r.amount};
                } else if (status == econ::case_status::minted ||
                           status == econ::case_status::held) {
                    auto it = confirmed.find(r.rcase);
                    if (it == confirmed.end() || it->second.first > e ||
                        it->second.second != r.amount) {
                        return st.fail(e, summary_path(e, g) + ":reward_cases",
                                       "case " + std::to_string(r.rcase) +
                                           " granted without a matching confirmation");
                    }
                }
            }
        }
    }

    for (const auto& [e, assignment] : st.chain.backups) {
        auto snap_it = st.chain.snapshots.find(e);
        if (snap_it == st.chain.snapshots.end()) continue;
        for (const auto& [g, holders] : assignment) {
            for (group_id holder : holders) {
                if (holder == g) {
                    return st.fail(e, "archives/" + std::to_string(e) + "/backups.json",
                                   "group assigned as its own backup holder");
                }
                if (!snap_it->second.groups.count(holder)) {
                    return st.fail(e, "archives/" + std::to_string(e) + "/backups.json",
                                   "backup holder unknown to the snapshot");
                }
            }
        }
    }
    return true;
}

} // namespace

std::optional<chain_violation> verify_chain(const chain_bundle& chain, verify_context& ctx,
                                            const ledger_config& cfg) {
    verify_state st{chain, ctx, cfg, std::nullopt};
    check_linkage(st) && check_summaries(st) && check_signatures(st) && check_archives(st) &&
        check_finality(st) && check_rewards_and_backups(st);
    return st.violation;
}

} // namespace politeia::ledger
