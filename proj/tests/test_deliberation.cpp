#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "politeia/deliberation.hpp"

#include <algorithm>

using namespace politeia;
using namespace politeia::delib;

namespace {

key_pair kp_of(node_id id) {
    std::array<std::uint8_t, 32> seed{};
    for (int i = 0; i < 8; ++i) seed[i] = std::uint8_t(id >> (8 * i));
    return key_pair::from_seed(seed);
}

org::hierarchy build(std::size_t n, epoch_t epoch = 0) {
    org::hierarchy h;
    for (node_id id = 1; id <= n; ++id) h.admit_node(id, kp_of(id).pk, epoch);
    return h;
}

void elect_all(org::hierarchy& h) {
    org::composite_index neutral;
    for (int guard = 0; guard < 200; ++guard) {
        auto pending = h.groups_needing_election();
        if (pending.empty()) return;
        auto r = h.run_election(pending.front(), {}, neutral);
        h.confirm_election(pending.front(), r.winners);
    }
}

proposal make_proposal(node_id proposer, group_id group, epoch_t now, epoch_t deadline,
                       proposal_kind kind = proposal_kind::rule_making,
                       bytes payload = bytes{1, 2, 3}) {
    proposal p;
    p.kind = kind;
    p.proposer = proposer;
    p.group = group;
    p.payload = std::move(payload);
    p.submitted_epoch = now;
    p.deadline_epoch = deadline;
    p.sig = sign(kp_of(proposer), p.signed_payload());
    return p;
}

feedback make_feedback(proposal_id pid, node_id voter, std::uint8_t score, epoch_t now,
                       std::optional<std::uint64_t> amount = std::nullopt) {
    feedback f;
    f.proposal = pid;
    f.voter = voter;
    f.score = score;
    f.reasons = "because";
    f.proposed_amount = amount;
    f.epoch = now;
    f.sig = sign(kp_of(voter), f.signed_payload());
    return f;
}

} // namespace

TEST_CASE("proposal kinds round trip by name") {
    for (auto k : {proposal_kind::reward_evaluation, proposal_kind::rule_making,
                   proposal_kind::election}) {
        CHECK(kind_from_name(kind_name(k)) == k);
    }
    CHECK_THROWS_AS(kind_from_name("budget"), protocol_error);
}

TEST_CASE("submission assigns the highest-ranking core as host") {
    auto h = build(5);
    group_id g = h.top_group();
    h.confirm_election(g, {2});
    proposal_engine engine;

    auto r = engine.submit(h, make_proposal(4, g, 3, 5), kp_of(4).pk, 3);
    CHECK(r.host == 2);
    CHECK_FALSE(r.election_proposal.has_value());
    CHECK(engine.proposal_at(r.id).proposer == 4);
}

TEST_CASE("a core-less group opens an election first, chaired by tenure") {
    org::hierarchy h;
    h.admit_node(7, kp_of(7).pk, 2);
    h.admit_node(3, kp_of(3).pk, 1); // longest tenure
    h.admit_node(9, kp_of(9).pk, 2);
    group_id g = h.top_group();

    proposal_engine engine;
    auto r = engine.submit(h, make_proposal(9, g, 4, 6), kp_of(9).pk, 4);
    CHECK(r.host == 3);
    REQUIRE(r.election_proposal.has_value());
    const auto& ep = engine.proposal_at(*r.election_proposal);
    CHECK(ep.kind == proposal_kind::election);
    CHECK(ep.proposer == 3);
    CHECK(ep.system_generated);
    CHECK(ep.deadline_epoch == 4 + engine.config().deadline_epochs);
}

TEST_CASE("submission rejects outsiders, the restricted, and bad signatures") {
    auto h = build(5);
    group_id g = h.top_group();
    proposal_engine engine;

    CHECK_THROWS_AS(engine.submit(h, make_proposal(99, g, 0, 2), kp_of(99).pk, 0),
                    protocol_error);

    h.node_mut(2).status = org::node_status::restricted;
    CHECK_THROWS_AS(engine.submit(h, make_proposal(2, g, 0, 2), kp_of(2).pk, 0),
                    protocol_error);

    auto p = make_proposal(3, g, 0, 2);
    p.sig.v[0] ^= 1;
    CHECK_THROWS_AS(engine.submit(h, p, kp_of(3).pk, 0), protocol_error);

    CHECK_THROWS_AS(engine.submit(h, make_proposal(3, g, 0, 0), kp_of(3).pk, 0),
                    protocol_error); // deadline not after submission
    CHECK_THROWS_AS(engine.submit(h, make_proposal(3, g, 1, 3), kp_of(3).pk, 0),
                    protocol_error); // claimed submission epoch != now
}

TEST_CASE("feedback is recorded through the deadline and waived after") {
    auto h = build(5);
    group_id g = h.top_group();
    proposal_engine engine;
    auto r = engine.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);

    CHECK(engine.submit_feedback(h, make_feedback(r.id, 2, 7, 2), kp_of(2).pk, 2) ==
          feedback_status::recorded);
    CHECK(engine.submit_feedback(h, make_feedback(r.id, 3, 7, 3), kp_of(3).pk, 3) ==
          feedback_status::waived);
    CHECK(engine.feedbacks_of(r.id).size() == 1);
}

TEST_CASE("feedback rule violations are rejected") {
    auto h = build(5);
    group_id g = h.top_group();
    proposal_engine engine;
    auto r = engine.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);

    CHECK_THROWS_AS(
        engine.submit_feedback(h, make_feedback(r.id, 77, 5, 1), kp_of(77).pk, 1),
        protocol_error);
    CHECK_THROWS_AS(
        engine.submit_feedback(h, make_feedback(r.id, 2, 11, 1), kp_of(2).pk, 1),
        protocol_error);
    CHECK_THROWS_AS(
        engine.submit_feedback(h, make_feedback(r.id, 2, 5, 1), kp_of(2).pk, 0),
        protocol_error); // epoch mismatch

    auto f = make_feedback(r.id, 2, 5, 1);
    f.sig.v[3] ^= 1;
    CHECK_THROWS_AS(engine.submit_feedback(h, f, kp_of(2).pk, 1), protocol_error);

    engine.submit_feedback(h, make_feedback(r.id, 2, 5, 1), kp_of(2).pk, 1);
    CHECK_THROWS_AS(
        engine.submit_feedback(h, make_feedback(r.id, 2, 6, 1), kp_of(2).pk, 1),
        protocol_error); // one vote per member
}

TEST_CASE("tally applies the exact threshold and quorum") {
    auto h = build(5);
    group_id g = h.top_group();

    SUBCASE("mean exactly at the threshold adopts") {
        proposal_engine engine;
        auto r = engine.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);
        for (node_id v : {1, 2, 3}) {
            engine.submit_feedback(h, make_feedback(r.id, v, 6, 1), kp_of(v).pk, 1);
        }
        auto out = engine.tally(h, r.id, 3);
        CHECK(out.mean == score_ratio{6, 1});
        CHECK(out.adopted);
        CHECK_FALSE(out.quorum_failed);
        CHECK(out.voters == std::vector<node_id>{1, 2, 3});
        CHECK(out.waived == std::vector<node_id>{4, 5});
    }

    SUBCASE("a lone enthusiastic vote fails quorum") {
        proposal_engine engine;
        auto r = engine.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);
        engine.submit_feedback(h, make_feedback(r.id, 2, 10, 1), kp_of(2).pk, 1);
        auto out = engine.tally(h, r.id, 3);
        CHECK(out.quorum_failed);
        CHECK_FALSE(out.adopted);
        CHECK(out.mean == score_ratio{10, 1});
    }

    SUBCASE("no feedback rejects") {
        proposal_engine engine;
        auto r = engine.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);
        auto out = engine.tally(h, r.id, 3);
        CHECK(out.quorum_failed);
        CHECK_FALSE(out.adopted);
        CHECK(out.voters.empty());
        CHECK(out.waived.size() == 5);
    }

    SUBCASE("mean just below the threshold rejects") {
        proposal_engine engine;
        auto r = engine.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);
        // scores 6,6,5: mean 17/3 = 5.67 < 6.0
        engine.submit_feedback(h, make_feedback(r.id, 1, 6, 1), kp_of(1).pk, 1);
        engine.submit_feedback(h, make_feedback(r.id, 2, 6, 1), kp_of(2).pk, 1);
        engine.submit_feedback(h, make_feedback(r.id, 3, 5, 1), kp_of(3).pk, 1);
        auto out = engine.tally(h, r.id, 3);
        CHECK_FALSE(out.adopted);
        CHECK_FALSE(out.quorum_failed);
    }
}

TEST_CASE("tally order invariance and readiness rules") {
    auto h = build(4);
    group_id g = h.top_group();
    proposal_engine a, b;
    auto ra = a.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);
    auto rb = b.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);

    std::vector<std::pair<node_id, std::uint8_t>> votes{{1, 4}, {2, 9}, {3, 6}, {4, 7}};
    for (auto [v, s] : votes) {
        a.submit_feedback(h, make_feedback(ra.id, v, s, 1), kp_of(v).pk, 1);
    }
    std::reverse(votes.begin(), votes.end());
    for (auto [v, s] : votes) {
        b.submit_feedback(h, make_feedback(rb.id, v, s, 1), kp_of(v).pk, 1);
    }

    // All four members responded before the deadline: early close allowed.
    CHECK(a.ready_for_tally(h, ra.id, 1));
    auto oa = a.tally(h, ra.id, 1);
    auto ob = b.tally(h, rb.id, 1);
    CHECK(oa.mean == ob.mean);
    CHECK(oa.voters == ob.voters);
    CHECK(oa.adopted == ob.adopted);

    proposal_engine c;
    auto rc = c.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);
    c.submit_feedback(h, make_feedback(rc.id, 2, 8, 1), kp_of(2).pk, 1);
    CHECK_FALSE(c.ready_for_tally(h, rc.id, 1)); // deadline not reached
    CHECK_FALSE(c.ready_for_tally(h, rc.id, 2)); // boundary epoch still open
    CHECK(c.ready_for_tally(h, rc.id, 3));
    CHECK_THROWS_AS(c.tally(h, rc.id, 1), protocol_error);
}

TEST_CASE("routing escalates with an identical payload and fresh deadline") {
    auto h = build(28);
    elect_all(h);
    group_id root = h.top_group();
    REQUIRE(h.group_at(root).level == 2);
    group_id child = h.group_at(root).children.front();

    proposal_engine engine;
    auto r = engine.submit(h, make_proposal(h.group_at(child).members[1], child, 0, 2),
                           kp_of(h.group_at(child).members[1]).pk, 0);
    engine.tally(h, r.id, 3);

    auto opened = engine.route(h, r.id, routing_choice::escalate, 3);
    REQUIRE(opened.size() == 1);
    const auto& up = engine.proposal_at(opened[0]);
    CHECK(up.group == root);
    CHECK(up.payload_digest() == engine.proposal_at(r.id).payload_digest());
    CHECK(up.deadline_epoch == 3 + engine.config().deadline_epochs);
    CHECK(up.system_generated);
    CHECK(up.relation == proposal_relation::escalated_from);
    CHECK(up.origin == r.id);
    CHECK(engine.outcome_of(r.id).routing == routing_choice::escalate);
}

TEST_CASE("routing coercions at the edges of the tree") {
    auto h = build(5);
    group_id g = h.top_group();
    proposal_engine engine;
    auto r = engine.submit(h, make_proposal(1, g, 0, 2), kp_of(1).pk, 0);
    engine.tally(h, r.id, 3);

    // Top-level group: nowhere to escalate. Childless: nowhere to delegate.
    CHECK(engine.route(h, r.id, routing_choice::escalate, 3).empty());
    CHECK(engine.outcome_of(r.id).routing == routing_choice::finalize);

    auto r2 = engine.submit(h, make_proposal(2, g, 3, 5), kp_of(2).pk, 3);
    engine.tally(h, r2.id, 6);
    CHECK(engine.route(h, r2.id, routing_choice::delegate, 6).empty());
    CHECK(engine.outcome_of(r2.id).routing == routing_choice::finalize);

    CHECK_THROWS_AS(engine.route(h, 999, routing_choice::finalize, 6), protocol_error);
}

TEST_CASE("delegation mirrors the proposal and children report back as advice") {
    auto h = build(28);
    elect_all(h);
    group_id root = h.top_group();
    REQUIRE(h.group_at(root).children.size() == 2);
    node_id proposer = h.group_at(root).members.front();

    proposal_engine engine;
    auto r = engine.submit(h, make_proposal(proposer, root, 0, 2), kp_of(proposer).pk, 0);
    engine.tally(h, r.id, 3);
    auto opened = engine.route(h, r.id, routing_choice::delegate, 3);
    REQUIRE(opened.size() == 2);

    for (proposal_id pid : opened) {
        const auto& mirror = engine.proposal_at(pid);
        CHECK(mirror.relation == proposal_relation::delegated_from);
        CHECK(mirror.payload_digest() == engine.proposal_at(r.id).payload_digest());
        const auto& grp = h.group_at(mirror.group);
        for (node_id v : grp.members) {
            engine.submit_feedback(h, make_feedback(pid, v, 8, 4), kp_of(v).pk, 4);
        }
        engine.tally(h, pid, 4);
    }

    const auto& advice = engine.outcome_of(r.id).advisories;
    REQUIRE(advice.size() == 2);
    for (const auto& a : advice) {
        CHECK(a.mean == score_ratio{8, 1});
        CHECK(a.adopted);
    }
}

TEST_CASE("chat archive holders are the parties plus seeded third parties") {
    auto h = build(6);
    proposal_engine engine;
    auto rng1 = det_rng::from_seed(5).fork("chat");
    auto rec1 = engine.record_chat(h, 1, 2, bytes{9, 9}, std::nullopt, kp_of(1), rng1, 4);

    REQUIRE(rec1.archive_holders.size() == 5); // 2 parties + 3 third parties
    CHECK(rec1.archive_holders[0] == 1);
    CHECK(rec1.archive_holders[1] == 2);
    for (std::size_t i = 2; i < rec1.archive_holders.size(); ++i) {
        CHECK(rec1.archive_holders[i] != 1);
        CHECK(rec1.archive_holders[i] != 2);
    }
    CHECK(verify(kp_of(1).pk, rec1.signed_payload(), rec1.sig));

    auto rng2 = det_rng::from_seed(5).fork("chat");
    auto rec2 = engine.record_chat(h, 1, 2, bytes{9, 9}, std::nullopt, kp_of(1), rng2, 4);
    CHECK(rec1.archive_holders == rec2.archive_holders);
    CHECK(rec1.record_digest() == rec2.record_digest());
}

TEST_CASE("tiny communities fall back to the parties alone") {
    auto h = build(2);
    proposal_engine engine;
    auto rng = det_rng::from_seed(1);
    auto rec = engine.record_chat(h, 1, 2, bytes{}, std::nullopt, kp_of(1), rng, 0);
    CHECK(rec.archive_holders == std::vector<node_id>{1, 2});
}

TEST_CASE("chats with revoked nodes are rejected") {
    auto h = build(5);
    h.remove_node(4);
    proposal_engine engine;
    auto rng = det_rng::from_seed(1);
    CHECK_THROWS_AS(engine.record_chat(h, 1, 4, bytes{}, std::nullopt, kp_of(1), rng, 0),
                    protocol_error);
    CHECK_THROWS_AS(engine.record_chat(h, 1, 1, bytes{}, std::nullopt, kp_of(1), rng, 0),
                    protocol_error);
}

TEST_CASE("escalated proposals accept feedback in the parent group") {
    auto h = build(28);
    elect_all(h);
    group_id root = h.top_group();
    group_id child = h.group_at(root).children.front();
    proposal_engine engine;

    auto r = engine.submit(h, make_proposal(h.group_at(child).members[0], child, 0, 2),
                           kp_of(h.group_at(child).members[0]).pk, 0);
    engine.tally(h, r.id, 3);
    auto up = engine.route(h, r.id, routing_choice::escalate, 3).front();

    for (node_id v : h.group_at(root).members) {
        engine.submit_feedback(h, make_feedback(up, v, 7, 4), kp_of(v).pk, 4);
    }
    auto out = engine.tally(h, up, 4);
    CHECK(out.adopted);
    CHECK(out.voters.size() == h.group_at(root).size());
}
