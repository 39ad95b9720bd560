#include "politeia/org.hpp"

#include <algorithm>
#include <cassert>

namespace politeia::org {

namespace {

constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);

void insert_sorted(std::vector<group_id>& xs, group_id g) {
    auto it = std::lower_bound(xs.begin(), xs.end(), g);
    if (it == xs.end() || *it != g) xs.insert(it, g);
}

void erase_value(std::vector<group_id>& xs, group_id g) {
    xs.erase(std::remove(xs.begin(), xs.end(), g), xs.end());
}

void erase_node(std::vector<node_id>& xs, node_id n) {
    xs.erase(std::remove(xs.begin(), xs.end(), n), xs.end());
}

bool contains(const std::vector<node_id>& xs, node_id n) {
    return std::find(xs.begin(), xs.end(), n) != xs.end();
}

} // namespace

std::size_t required_core_count(std::size_t size) {
    if (size <= 2) return 0;
    if (size <= 10) return 1;
    if (size <= 18) return 2;
    if (size <= 25) return 3;
    throw protocol_error("group size above 25: split required before electing cores");
}

bool group::is_member(node_id n) const { return contains(members, n); }
bool group::is_core(node_id n) const { return contains(core_nodes, n); }

score_ratio composite_index::of(node_id n) const {
    auto it = scores_.find(n);
    if (it == scores_.end()) return score_ratio{5, 1}; // neutral prior
    return it->second;
}

const group& hierarchy::group_at(group_id g) const {
    auto it = groups_.find(g);
    if (it == groups_.end()) throw protocol_error("unknown group id " + std::to_string(g));
    return it->second;
}

group& hierarchy::mut(group_id g) {
    auto it = groups_.find(g);
    if (it == groups_.end()) throw protocol_error("unknown group id " + std::to_string(g));
    return it->second;
}

const node_identity& hierarchy::node_at(node_id n) const {
    auto it = nodes_.find(n);
    if (it == nodes_.end()) throw protocol_error("unknown node id " + std::to_string(n));
    return it->second;
}

node_identity& hierarchy::node_mut(node_id n) {
    auto it = nodes_.find(n);
    if (it == nodes_.end()) throw protocol_error("unknown node id " + std::to_string(n));
    return it->second;
}

group_id hierarchy::new_group(int level, std::optional<group_id> parent) {
    if (level > kMaxLevel) throw protocol_error("cannot create a group above level 10");
    group g;
    g.id = next_group_id_++;
    g.level = level;
    g.parent = parent;
    if (parent) insert_sorted(mut(*parent).children, g.id);
    groups_.emplace(g.id, std::move(g));
    return next_group_id_ - 1;
}

void hierarchy::drop_membership(node_id n, group_id g) {
    auto it = nodes_.find(n);
    if (it != nodes_.end()) erase_value(it->second.memberships, g);
}

void hierarchy::add_membership(node_id n, group_id g) {
    insert_sorted(node_mut(n).memberships, g);
}

std::size_t hierarchy::member_pos(const group& grp, node_id n) const {
    auto it = std::find(grp.members.begin(), grp.members.end(), n);
    if (it == grp.members.end()) throw protocol_error("node is not a member of the group");
    return static_cast<std::size_t>(it - grp.members.begin());
}

group_id hierarchy::admit_node(node_id id, const public_key& pk, epoch_t now) {
    if (nodes_.count(id)) throw protocol_error("duplicate node id " + std::to_string(id));
    node_identity ident;
    ident.id = id;
    ident.pk = pk;
    ident.join_epoch = now;
    nodes_.emplace(id, std::move(ident));
    group_id joined = admit_into_level1(id, nullptr);
    std::vector<org_event> events;
    sync_structure(events);
    return joined;
}

group_id hierarchy::admit_into_level1(node_id id, std::vector<org_event>* events) {
    // Smallest level-1 group with free capacity wins; ties go to the lower id.
    const group* best = nullptr;
    for (const auto& [gid, g] : groups_) {
        if (g.level != 1 || g.size() >= kMaxGroupSize) continue;
        if (!best || g.size() < best->size()) best = &g;
    }
    group_id target;
    if (best) {
        target = best->id;
    } else {
        // All level-1 groups are full (or none exist): open a new one. When
        // the tree already has upper levels, hang it under the level-2 group
        // with the fewest children; otherwise leave it parentless and let
        // root maintenance pick it up.
        std::optional<group_id> parent;
        const group* adoptive = nullptr;
        for (const auto& [gid, g] : groups_) {
            if (g.level != 2) continue;
            if (!adoptive || g.children.size() < adoptive->children.size()) adoptive = &g;
        }
        if (adoptive) parent = adoptive->id;
        target = new_group(1, parent);
    }
    group& grp = mut(target);
    grp.members.push_back(id);
    add_membership(id, target);
    grp.pending_merge = grp.size() < kMinGroupSize;
    if (events) events->push_back(readmit_event{id, target});
    return target;
}

std::vector<node_id> hierarchy::leaders(group_id g) const {
    const group& grp = group_at(g);
    if (!grp.core_nodes.empty()) return grp.core_nodes;
    if (grp.members.empty()) return {};
    return {acting_host(g)};
}

node_id hierarchy::acting_host(group_id g) const {
    const group& grp = group_at(g);
    const node_identity* best = nullptr;
    for (node_id m : grp.members) {
        const auto& n = node_at(m);
        if (!n.participates()) continue;
        if (!best || n.join_epoch < best->join_epoch ||
            (n.join_epoch == best->join_epoch && n.id < best->id)) {
            best = &n;
        }
    }
    if (!best) throw protocol_error("group has no member able to act as host");
    return best->id;
}

void hierarchy::fill_core_vacancy(group& grp, node_id departed, std::size_t departed_pos,
                                  std::vector<org_event>& events) {
    std::size_t required = grp.size() <= kMaxGroupSize ? required_core_count(grp.size())
                                                       : static_cast<std::size_t>(3);
    if (grp.core_nodes.size() >= required) return;
    // The next node in the sorting order takes the vacated seat: first
    // non-core member at or after the departed position, wrapping around.
    auto eligible = [&](node_id m) {
        return !grp.is_core(m) && node_at(m).participates();
    };
    std::optional<node_id> successor;
    for (std::size_t i = departed_pos; i < grp.members.size() && !successor; ++i) {
        if (eligible(grp.members[i])) successor = grp.members[i];
    }
    for (std::size_t i = 0; i < departed_pos && i < grp.members.size() && !successor; ++i) {
        if (eligible(grp.members[i])) successor = grp.members[i];
    }
    if (!successor) return;
    grp.core_nodes.push_back(*successor);
    events.push_back(succession_event{grp.id, departed, *successor});
}

std::vector<org_event> hierarchy::remove_node(node_id n) {
    node_identity& ident = node_mut(n);
    std::vector<org_event> events;
    auto memberships = ident.memberships;
    for (group_id gid : memberships) {
        group& grp = mut(gid);
        std::size_t pos = member_pos(grp, n);
        bool was_core = grp.is_core(n);
        grp.members.erase(grp.members.begin() + static_cast<std::ptrdiff_t>(pos));
        erase_node(grp.core_nodes, n);
        if (was_core) fill_core_vacancy(grp, n, pos, events);
    }
    ident.memberships.clear();
    ident.status = node_status::revoked;
    sync_structure(events);
    return events;
}

std::vector<org_event> hierarchy::rebalance() {
    std::vector<org_event> events;
    for (int round = 0; round < 1000; ++round) {
        sync_structure(events);
        bool changed = false;

        // Merges: undersized groups fold into the smallest same-parent,
        // same-level sibling that stays within capacity.
        std::vector<group_id> ids;
        for (const auto& [gid, g] : groups_) ids.push_back(gid);
        for (group_id gid : ids) {
            auto it = groups_.find(gid);
            if (it == groups_.end()) continue;
            group& g = it->second;
            if (g.size() >= kMinGroupSize || !g.parent) continue;
            const group* target = nullptr;
            for (group_id sid : group_at(*g.parent).children) {
                if (sid == gid) continue;
                const group& s = group_at(sid);
                if (s.level != g.level) continue;
                if (s.size() + g.size() > kMaxGroupSize) continue;
                if (!target || s.size() < target->size()) target = &s;
            }
            if (!target) continue;
            group_id tid = target->id;
            group& t = mut(tid);
            for (node_id m : g.members) {
                if (!t.is_member(m)) {
                    t.members.push_back(m);
                    add_membership(m, tid);
                }
                drop_membership(m, gid);
            }
            g.members.clear();
            g.core_nodes.clear();
            for (group_id cid : std::vector<group_id>(g.children)) {
                mut(cid).parent = tid;
                insert_sorted(t.children, cid);
            }
            g.children.clear();
            std::vector<org_event> scratch;
            erase_group(gid, scratch);
            t.needs_election = true;
            events.push_back(merge_event{gid, tid});
            changed = true;
        }

        // Splits: oversized groups break into an order-preserving high and
        // low half; groups with children partition on child boundaries so
        // every child keeps its leaders in one half.
        ids.clear();
        for (const auto& [gid, g] : groups_) ids.push_back(gid);
        for (group_id gid : ids) {
            auto it = groups_.find(gid);
            if (it == groups_.end()) continue;
            if (it->second.size() <= kMaxGroupSize) continue;
            group original = it->second;

            group_id low = new_group(original.level, original.parent);
            group_id high = new_group(original.level, original.parent);

            if (original.children.empty()) {
                std::size_t cut = (original.size() + 1) / 2;
                for (std::size_t i = 0; i < original.members.size(); ++i) {
                    group& half = mut(i < cut ? low : high);
                    half.members.push_back(original.members[i]);
                }
            } else {
                // Order children by their first leader's sorting position.
                std::vector<std::pair<std::size_t, group_id>> order;
                for (group_id cid : original.children) {
                    auto ls = leaders(cid);
                    std::size_t pos = original.members.size();
                    for (node_id l : ls) {
                        auto mit = std::find(original.members.begin(), original.members.end(), l);
                        if (mit != original.members.end()) {
                            pos = std::min(pos, static_cast<std::size_t>(mit - original.members.begin()));
                        }
                    }
                    order.emplace_back(pos, cid);
                }
                std::sort(order.begin(), order.end());
                std::size_t tally = 0;
                std::size_t half_target = (original.size() + 1) / 2;
                bool filling_low = true;
                for (auto [pos, cid] : order) {
                    std::size_t weight = leaders(cid).size();
                    if (filling_low && tally > 0 && tally + weight > half_target) {
                        filling_low = false;
                    }
                    group& half = mut(filling_low ? low : high);
                    mut(cid).parent = half.id;
                    insert_sorted(half.children, cid);
                    if (filling_low) tally += weight;
                }
                for (node_id m : original.members) {
                    bool placed = false;
                    for (group_id hid : {low, high}) {
                        for (group_id cid : group_at(hid).children) {
                            if (contains(leaders(cid), m)) {
                                group& half = mut(hid);
                                if (!half.is_member(m)) half.members.push_back(m);
                                placed = true;
                                break;
                            }
                        }
                        if (placed) break;
                    }
                    if (!placed) {
                        // Member justified only as the group's own core:
                        // keep it in the lighter half.
                        group& l = mut(low);
                        group& h = mut(high);
                        (l.size() <= h.size() ? l : h).members.push_back(m);
                    }
                }
            }
            original.children.clear();

            for (group_id hid : {low, high}) {
                group& half = mut(hid);
                for (node_id m : half.members) {
                    drop_membership(m, gid);
                    add_membership(m, hid);
                    if (original.is_core(m)) half.core_nodes.push_back(m);
                }
                half.needs_election = true;
            }
            group& doomed = mut(gid);
            doomed.members.clear();
            doomed.core_nodes.clear();
            doomed.children.clear();
            std::vector<org_event> scratch;
            erase_group(gid, scratch);
            events.push_back(split_event{gid, low, high});
            changed = true;
        }

        if (!changed) break;
    }
    sync_structure(events);
    return events;
}

void hierarchy::erase_group(group_id g, std::vector<org_event>& events) {
    auto it = groups_.find(g);
    if (it == groups_.end()) return;
    assert(it->second.children.empty());
    for (node_id m : it->second.members) drop_membership(m, g);
    if (it->second.parent) erase_value(mut(*it->second.parent).children, g);
    groups_.erase(it);
    events.push_back(dissolve_event{g});
}

void hierarchy::sync_structure(std::vector<org_event>& events) {
    for (int round = 0; round < 200; ++round) {
        bool stable = true;

        // Shed empty groups and childless upper-level shells.
        std::vector<group_id> ids;
        for (const auto& [gid, g] : groups_) ids.push_back(gid);
        for (group_id gid : ids) {
            auto it = groups_.find(gid);
            if (it == groups_.end()) continue;
            group& g = it->second;
            bool shell = g.level >= 2 && g.children.empty();
            if ((g.members.empty() && g.children.empty()) || shell) {
                erase_group(gid, events);
                stable = false;
            }
        }

        // Root maintenance: one parentless group, and a root with a single
        // child dissolves in favour of that child.
        std::vector<group_id> roots;
        for (const auto& [gid, g] : groups_) {
            if (!g.parent) roots.push_back(gid);
        }
        if (roots.size() == 1) {
            group& r = mut(roots[0]);
            if (r.children.size() == 1) {
                group_id child = r.children[0];
                mut(child).parent.reset();
                r.children.clear();
                erase_group(roots[0], events);
                stable = false;
            }
        } else if (roots.size() > 1) {
            int top = 0;
            for (group_id rid : roots) top = std::max(top, group_at(rid).level);
            bool attached = false;
            for (group_id rid : roots) {
                group& r = mut(rid);
                if (r.level == top) continue;
                // A lower-level stray attaches under the emptiest group one
                // level up.
                const group* adoptive = nullptr;
                for (const auto& [gid, g] : groups_) {
                    if (g.level != r.level + 1) continue;
                    if (!adoptive || g.children.size() < adoptive->children.size()) adoptive = &g;
                }
                if (adoptive) {
                    r.parent = adoptive->id;
                    insert_sorted(mut(adoptive->id).children, rid);
                    attached = true;
                }
            }
            if (!attached && top < kMaxLevel) {
                group_id root = new_group(top + 1, std::nullopt);
                for (group_id rid : roots) {
                    mut(rid).parent = root;
                    insert_sorted(mut(root).children, rid);
                }
                events.push_back(root_event{root, top + 1});
            }
            stable = false;
        }

        // Upper-level membership: exactly the children's leaders plus the
        // group's own cores, existing order preserved, newcomers appended.
        std::vector<std::pair<int, group_id>> by_level;
        for (const auto& [gid, g] : groups_) {
            if (!g.children.empty()) by_level.emplace_back(g.level, gid);
        }
        std::sort(by_level.begin(), by_level.end());
        for (auto [lvl, gid] : by_level) {
            auto it = groups_.find(gid);
            if (it == groups_.end()) continue;
            group& g = it->second;
            std::vector<node_id> justified;
            for (group_id cid : g.children) {
                for (node_id l : leaders(cid)) {
                    if (!contains(justified, l)) justified.push_back(l);
                }
            }
            for (node_id c : g.core_nodes) {
                if (!contains(justified, c)) justified.push_back(c);
            }
            std::vector<node_id> next;
            for (node_id m : g.members) {
                if (contains(justified, m)) next.push_back(m);
            }
            for (node_id j : justified) {
                if (!contains(next, j)) next.push_back(j);
            }
            if (next != g.members) {
                for (node_id m : g.members) {
                    if (!contains(next, m)) drop_membership(m, gid);
                }
                for (node_id m : next) {
                    if (!g.is_member(m)) add_membership(m, gid);
                }
                g.members = std::move(next);
                stable = false;
            }
        }

        // Promotion detachments: core at level i and i+1 with a level-(i+2)
        // membership leaves the level-i group; the seat passes down the
        // sorting order.
        for (auto& [nid, ident] : nodes_) {
            auto memberships = ident.memberships;
            for (group_id gid : memberships) {
                auto git = groups_.find(gid);
                if (git == groups_.end()) continue;
                group& c = git->second;
                if (!c.is_core(nid) || !c.parent) continue;
                const group& p = group_at(*c.parent);
                if (!p.is_core(nid) || !p.parent) continue;
                if (!group_at(*p.parent).is_member(nid)) continue;
                std::size_t pos = member_pos(c, nid);
                c.members.erase(c.members.begin() + static_cast<std::ptrdiff_t>(pos));
                erase_node(c.core_nodes, nid);
                drop_membership(nid, gid);
                std::size_t before = events.size();
                fill_core_vacancy(c, nid, pos, events);
                std::optional<node_id> successor;
                if (events.size() > before) {
                    successor = std::get<succession_event>(events.back()).successor;
                }
                events.push_back(detach_event{nid, gid, successor});
                stable = false;
            }
        }

        // Flags.
        for (auto& [gid, g] : groups_) {
            g.pending_merge = g.size() < kMinGroupSize;
            g.pending_split = g.size() > kMaxGroupSize;
            if (g.size() <= kMaxGroupSize) {
                std::size_t required = required_core_count(g.size());
                if (required == 0 && !g.core_nodes.empty()) {
                    g.core_nodes.clear();
                    stable = false;
                }
                g.needs_election = required > 0 && g.core_nodes.size() != required;
            } else {
                g.needs_election = true;
            }
        }

        // Active nodes stripped of every membership rejoin at level 1.
        std::vector<node_id> orphans;
        for (const auto& [nid, ident] : nodes_) {
            if (ident.participates() && ident.memberships.empty()) orphans.push_back(nid);
        }
        for (node_id n : orphans) {
            admit_into_level1(n, &events);
            stable = false;
        }

        if (stable) return;
    }
    throw protocol_error("hierarchy sync did not converge");
}

election_result hierarchy::run_election(group_id g, const std::vector<ballot>& ballots,
                                        const composite_index& reputation) const {
    const group& grp = group_at(g);
    std::size_t required = required_core_count(grp.size());
    if (required == 0) throw protocol_error("group is pending merge: no cores to elect");

    std::map<node_id, std::uint64_t> borda;
    std::set<node_id> seen_voters;
    for (const auto& b : ballots) {
        if (!grp.is_member(b.voter)) throw protocol_error("ballot from a non-member");
        if (!seen_voters.insert(b.voter).second) throw protocol_error("duplicate ballot");
        std::set<node_id> seen_cands;
        for (std::size_t i = 0; i < b.ranking.size(); ++i) {
            node_id cand = b.ranking[i];
            if (!grp.is_member(cand)) throw protocol_error("ballot ranks a non-member");
            if (!seen_cands.insert(cand).second) throw protocol_error("ballot ranks a candidate twice");
            borda[cand] += grp.size() - 1 - i;
        }
    }

    std::vector<node_id> candidates = grp.members;
    std::sort(candidates.begin(), candidates.end(), [&](node_id a, node_id b) {
        std::uint64_t sa = borda.count(a) ? borda.at(a) : 0;
        std::uint64_t sb = borda.count(b) ? borda.at(b) : 0;
        if (sa != sb) return sa > sb;
        score_ratio ra = reputation.of(a);
        score_ratio rb = reputation.of(b);
        if (!(ra == rb)) return rb < ra;
        const auto& na = node_at(a);
        const auto& nb = node_at(b);
        if (na.join_epoch != nb.join_epoch) return na.join_epoch < nb.join_epoch;
        return a < b;
    });

    election_result result;
    result.group = g;
    result.winners.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(required));
    result.host = grp.core_nodes.empty() ? acting_host(g) : grp.core_nodes.front();
    for (node_id v : seen_voters) result.voters.push_back(v);
    result.previous_cores = grp.core_nodes;
    return result;
}

std::vector<org_event> hierarchy::confirm_election(group_id g, const std::vector<node_id>& winners) {
    group& grp = mut(g);
    std::size_t required = required_core_count(grp.size());
    if (required == 0) throw protocol_error("group is pending merge: nothing to confirm");
    if (winners.size() != required) throw protocol_error("confirmed core count does not match group size");
    std::set<node_id> distinct(winners.begin(), winners.end());
    if (distinct.size() != winners.size()) throw protocol_error("duplicate winner");
    for (node_id w : winners) {
        if (!grp.is_member(w)) throw protocol_error("winner is not a group member");
    }
    grp.core_nodes = winners;
    grp.needs_election = false;
    std::vector<org_event> events;
    sync_structure(events);
    return events;
}

std::vector<org_event> hierarchy::transfer_node(group_id orderer, node_id n, group_id from,
                                                group_id to) {
    const group& ord = group_at(orderer);
    group& src = mut(from);
    group& dst = mut(to);
    if (from == to) throw protocol_error("transfer source and destination are the same group");
    if (src.level != dst.level) throw protocol_error("transfer must stay on one level");
    if (ord.level <= src.level) throw protocol_error("ordering group is not an upper-level group");
    if (!in_subtree(orderer, from) || !in_subtree(orderer, to)) {
        throw protocol_error("transfer outside the ordering group's jurisdiction");
    }
    if (!src.is_member(n)) throw protocol_error("node is not a member of the source group");
    if (dst.is_member(n)) throw protocol_error("node is already a member of the destination group");
    if (dst.size() + 1 > kMaxGroupSize) throw protocol_error("destination group is at capacity");

    std::vector<org_event> events;
    std::size_t pos = member_pos(src, n);
    bool was_core = src.is_core(n);
    src.members.erase(src.members.begin() + static_cast<std::ptrdiff_t>(pos));
    erase_node(src.core_nodes, n);
    drop_membership(n, from);
    if (was_core) fill_core_vacancy(src, n, pos, events);

    dst.members.push_back(n); // sorting priority: appended last
    add_membership(n, to);
    sync_structure(events);
    return events;
}

void hierarchy::set_sorting_priority(group_id g, const std::vector<node_id>& order,
                                     const std::vector<node_id>& callers) {
    group& grp = mut(g);
    std::set<node_id> caller_set(callers.begin(), callers.end());
    std::set<node_id> core_set(grp.core_nodes.begin(), grp.core_nodes.end());
    if (core_set.empty() || caller_set != core_set) {
        throw protocol_error("sorting priority may only be set by the full core set");
    }
    std::vector<node_id> a = order;
    std::vector<node_id> b = grp.members;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b || order.size() != grp.members.size()) {
        throw protocol_error("sorting order must be a permutation of the members");
    }
    grp.members = order;
}

group_id hierarchy::top_group() const {
    std::optional<group_id> root;
    for (const auto& [gid, g] : groups_) {
        if (!g.parent) {
            if (root) throw protocol_error("hierarchy has more than one root");
            root = gid;
        }
    }
    if (!root) throw protocol_error("hierarchy is empty");
    return *root;
}

std::optional<group_id> hierarchy::parent_of(group_id g) const { return group_at(g).parent; }

std::optional<group_id> hierarchy::lca(group_id a, group_id b) const {
    std::set<group_id> seen;
    std::optional<group_id> walk = a;
    while (walk) {
        seen.insert(*walk);
        walk = group_at(*walk).parent;
    }
    walk = b;
    while (walk) {
        if (seen.count(*walk)) return walk;
        walk = group_at(*walk).parent;
    }
    return std::nullopt;
}

bool hierarchy::in_subtree(group_id root, group_id g) const {
    std::optional<group_id> walk = g;
    while (walk) {
        if (*walk == root) return true;
        walk = group_at(*walk).parent;
    }
    return false;
}

group_id hierarchy::primary_group(node_id n) const {
    const auto& ident = node_at(n);
    if (ident.memberships.empty()) throw protocol_error("node has no memberships");
    const group* best = nullptr;
    for (group_id gid : ident.memberships) {
        const group& g = group_at(gid);
        if (!best || g.level < best->level || (g.level == best->level && g.id < best->id)) {
            best = &g;
        }
    }
    return best->id;
}

int hierarchy::level_of(node_id n) const {
    int level = 0;
    for (group_id gid : node_at(n).memberships) level = std::max(level, group_at(gid).level);
    return level;
}

std::size_t hierarchy::active_node_count() const {
    std::size_t count = 0;
    for (const auto& [nid, ident] : nodes_) {
        if (ident.participates() && !ident.memberships.empty()) ++count;
    }
    return count;
}

std::vector<group_id> hierarchy::groups_needing_election() const {
    std::vector<group_id> out;
    for (const auto& [gid, g] : groups_) {
        if (g.needs_election && g.size() >= kMinGroupSize && g.size() <= kMaxGroupSize) {
            out.push_back(gid);
        }
    }
    return out;
}

void hierarchy::clear_election_flag(group_id g) { mut(g).needs_election = false; }

void hierarchy::force_cores(group_id g, const std::vector<node_id>& cores) {
    mut(g).core_nodes = cores;
}

void hierarchy::validate() const {
    if (groups_.empty()) {
        for (const auto& [nid, ident] : nodes_) {
            if (!ident.memberships.empty()) throw protocol_error("membership into no group");
        }
        return;
    }
    std::size_t roots = 0;
    for (const auto& [gid, g] : groups_) {
        if (!g.parent) ++roots;
    }
    if (roots != 1) throw protocol_error("hierarchy must have exactly one top-level group");

    // Reachability from the root, cycle-free.
    group_id root = top_group();
    std::set<group_id> reached;
    std::vector<group_id> stack{root};
    while (!stack.empty()) {
        group_id gid = stack.back();
        stack.pop_back();
        if (!reached.insert(gid).second) throw protocol_error("cycle in the group tree");
        for (group_id c : group_at(gid).children) stack.push_back(c);
    }
    if (reached.size() != groups_.size()) throw protocol_error("unreachable group in the tree");

    for (const auto& [gid, g] : groups_) {
        if (g.level < 1 || g.level > kMaxLevel) throw protocol_error("group level out of range");
        if (g.parent) {
            const group& p = group_at(*g.parent);
            if (p.level != g.level + 1) throw protocol_error("parent level must be child level + 1");
            if (!std::count(p.children.begin(), p.children.end(), gid)) {
                throw protocol_error("parent does not list the child");
            }
        }
        for (group_id c : g.children) {
            if (group_at(c).parent != gid) throw protocol_error("child does not point at parent");
        }
        std::set<node_id> distinct(g.members.begin(), g.members.end());
        if (distinct.size() != g.members.size()) throw protocol_error("duplicate member");
        if (g.size() > kMaxGroupSize && !g.pending_split) {
            throw protocol_error("oversized group without a pending-split flag");
        }
        if (g.size() < kMinGroupSize && !g.pending_merge) {
            throw protocol_error("undersized group without a pending-merge flag");
        }
        std::set<node_id> core_set;
        for (node_id c : g.core_nodes) {
            if (!g.is_member(c)) throw protocol_error("core node is not a member");
            if (!core_set.insert(c).second) throw protocol_error("duplicate core node");
        }
        if (g.parent) {
            const group& p = group_at(*g.parent);
            for (node_id c : g.core_nodes) {
                if (!p.is_member(c)) throw protocol_error("core of a non-top group must sit in the parent");
            }
        }
        for (node_id m : g.members) {
            const auto& ident = node_at(m);
            if (!std::count(ident.memberships.begin(), ident.memberships.end(), gid)) {
                throw protocol_error("member does not record the membership");
            }
        }
    }

    for (const auto& [nid, ident] : nodes_) {
        std::map<int, std::size_t> per_level;
        for (group_id gid : ident.memberships) {
            const group& g = group_at(gid);
            if (!g.is_member(nid)) throw protocol_error("membership not mirrored by the group");
            if (++per_level[g.level] > kMaxMembershipsPerLevel) {
                throw protocol_error("more than two memberships on one level");
            }
        }
        if (ident.status == node_status::revoked && !ident.memberships.empty()) {
            throw protocol_error("revoked node still holds memberships");
        }
    }
}

bytes hierarchy::canonical_snapshot() const {
    byte_writer w;
    w.kind(record_kind::hierarchy_snapshot);
    w.u64(epoch_);
    w.u32(static_cast<std::uint32_t>(groups_.size()));
    for (const auto& [gid, g] : groups_) {
        w.u64(gid);
        w.u8(static_cast<std::uint8_t>(g.level));
        w.opt(g.parent, [](byte_writer& out, group_id p) { out.u64(p); });
        w.list(g.members, [](byte_writer& out, node_id n) { out.u64(n); });
        w.list(g.core_nodes, [](byte_writer& out, node_id n) { out.u64(n); });
        w.list(g.children, [](byte_writer& out, group_id c) { out.u64(c); });
        w.boolean(g.pending_merge);
        w.boolean(g.pending_split);
    }
    w.u32(static_cast<std::uint32_t>(nodes_.size()));
    for (const auto& [nid, ident] : nodes_) {
        w.u64(nid);
        w.key(ident.pk);
        w.u64(ident.join_epoch);
        w.u8(static_cast<std::uint8_t>(ident.status));
        w.u64(ident.restricted_until);
        w.list(ident.memberships, [](byte_writer& out, group_id g) { out.u64(g); });
    }
    return w.take();
}

} // namespace politeia::org
