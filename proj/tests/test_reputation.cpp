#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "politeia/reputation.hpp"

#include <vector>

using namespace politeia;
using namespace politeia::rep;

namespace {

key_pair kp_of(node_id id) {
    std::array<std::uint8_t, 32> seed{};
    for (int i = 0; i < 8; ++i) seed[i] = std::uint8_t(id >> (8 * i));
    return key_pair::from_seed(seed);
}

evaluation make_eval(node_id evaluator, node_id subject, epoch_t period,
                     std::map<dimension, std::uint8_t> scores) {
    evaluation e;
    e.evaluator = evaluator;
    e.subject = subject;
    e.period = period;
    e.scores = std::move(scores);
    e.sig = sign(kp_of(evaluator), e.signed_payload());
    return e;
}

digest submit(evaluation_store& store, const evaluation& e, bool co_member = true) {
    return store.submit(e, kp_of(e.evaluator).pk, co_member, e.period);
}

} // namespace

TEST_CASE("dimension names round trip and unknown names are rejected") {
    for (dimension d : kDimensions) {
        CHECK(dimension_from_name(dimension_name(d)) == d);
    }
    CHECK_THROWS_AS(dimension_from_name("charisma"), protocol_error);
}

TEST_CASE("no evaluations means the neutral prior") {
    evaluation_store store;
    auto view = store.aggregate(7, 3);
    CHECK(view.composite == score_ratio{5, 1});
    for (dimension d : kDimensions) {
        CHECK(view.per_dimension.at(d) == score_ratio{5, 1});
    }
    CHECK(view.evaluator_count == 0);
}

TEST_CASE("dimension means are arithmetic means over the window") {
    evaluation_store store;
    submit(store, make_eval(1, 3, 0, {{dimension::expertise, 4}}));
    submit(store, make_eval(2, 3, 0, {{dimension::expertise, 8}}));

    auto view = store.aggregate(3, 0);
    CHECK(view.per_dimension.at(dimension::expertise) == score_ratio{6, 1});
    // Four dimensions sit at the prior: composite = (6 + 5*4) / 5 = 26/5.
    CHECK(view.composite == score_ratio{26, 5});
    CHECK(view.evaluator_count == 2);
}

TEST_CASE("perfect scores from every peer give composite 10") {
    evaluation_store store;
    std::map<dimension, std::uint8_t> full;
    for (dimension d : kDimensions) full[d] = 10;
    submit(store, make_eval(1, 9, 2, full));
    submit(store, make_eval(2, 9, 2, full));
    submit(store, make_eval(3, 9, 2, full));
    CHECK(store.aggregate(9, 2).composite == score_ratio{10, 1});
}

TEST_CASE("evaluations age out of the window") {
    evaluation_store store;
    submit(store, make_eval(1, 5, 0, {{dimension::persona_trait, 0}}));

    // Composite with one zeroed dimension: (0 + 5*4) / 5 = 4.
    // Window is the last 6 periods: visible at now = 5, gone at now = 6.
    CHECK(store.aggregate(5, 0).composite == score_ratio{4, 1});
    CHECK(store.aggregate(5, 5).composite == score_ratio{4, 1});
    CHECK(store.aggregate(5, 6).composite == score_ratio{5, 1});
}

TEST_CASE("aggregation is permutation invariant and subject local") {
    auto e1 = make_eval(1, 4, 1, {{dimension::expertise, 2}, {dimension::persona_trait, 9}});
    auto e2 = make_eval(2, 4, 1, {{dimension::expertise, 7}});
    auto e3 = make_eval(3, 4, 1, {{dimension::research_contribution, 1}});

    evaluation_store a;
    submit(a, e1);
    submit(a, e2);
    submit(a, e3);
    evaluation_store b;
    submit(b, e3);
    submit(b, e1);
    submit(b, e2);

    auto va = a.aggregate(4, 1);
    auto vb = b.aggregate(4, 1);
    CHECK(va.composite == vb.composite);
    for (dimension d : kDimensions) {
        CHECK(va.per_dimension.at(d) == vb.per_dimension.at(d));
    }

    // An unrelated subject is untouched.
    auto before = a.aggregate(77, 1).composite;
    submit(a, make_eval(5, 4, 1, {{dimension::expertise, 10}}));
    CHECK(a.aggregate(77, 1).composite == before);
}

TEST_CASE("submit rejects rule violations") {
    evaluation_store store;
    CHECK_THROWS_AS(submit(store, make_eval(3, 3, 0, {{dimension::expertise, 5}})),
                    protocol_error);
    CHECK_THROWS_AS(submit(store, make_eval(1, 3, 0, {{dimension::expertise, 5}}), false),
                    protocol_error);
    CHECK_THROWS_AS(submit(store, make_eval(1, 3, 0, {{dimension::expertise, 11}})),
                    protocol_error);
    CHECK_THROWS_AS(submit(store, make_eval(1, 3, 0, {})), protocol_error);

    auto e = make_eval(1, 3, 4, {{dimension::expertise, 5}});
    CHECK_THROWS_AS(store.submit(e, kp_of(1).pk, true, 5), protocol_error); // stale period

    submit(store, e);
    CHECK_THROWS_AS(submit(store, e), protocol_error); // duplicate

    auto forged = make_eval(2, 3, 4, {{dimension::expertise, 5}});
    forged.sig.v[0] ^= 1;
    CHECK_THROWS_AS(store.submit(forged, kp_of(2).pk, true, 4), protocol_error);
    CHECK(store.evaluation_count() == 1);
}

TEST_CASE("distinct evaluations have distinct digests") {
    auto e1 = make_eval(1, 3, 0, {{dimension::expertise, 5}});
    auto e2 = make_eval(1, 3, 0, {{dimension::expertise, 6}});
    auto e3 = make_eval(1, 4, 0, {{dimension::expertise, 5}});
    CHECK(e1.id() != e2.id());
    CHECK(e1.id() != e3.id());
}

TEST_CASE("ranking follows composite then tenure then id") {
    evaluation_store store;
    submit(store, make_eval(9, 1, 0, {{dimension::expertise, 10}}));
    submit(store, make_eval(9, 2, 0, {{dimension::expertise, 2}}));

    // Node 1 scores above the prior, node 2 below it, node 3 is unrated.
    auto ranked = store.rank({{1, 5}, {2, 5}, {3, 5}}, 0);
    CHECK(ranked == std::vector<node_id>{1, 3, 2});

    // Equal composites: earlier join epoch first, then lower id.
    ranked = store.rank({{4, 3}, {5, 1}, {6, 3}}, 0);
    CHECK(ranked == std::vector<node_id>{5, 4, 6});

    ranked = store.rank({{8, 2}}, 0);
    CHECK(ranked == std::vector<node_id>{8});

    CHECK_THROWS_AS(store.rank({}, 0), protocol_error);
}

TEST_CASE("ranking is a total order") {
    evaluation_store store;
    submit(store, make_eval(1, 10, 0, {{dimension::expertise, 9}}));
    submit(store, make_eval(1, 11, 0, {{dimension::expertise, 9}}));
    submit(store, make_eval(2, 12, 0, {{dimension::persona_trait, 3}}));

    std::vector<candidate> cands{{10, 4}, {11, 2}, {12, 2}, {13, 2}, {14, 9}};
    auto ranked = store.rank(cands, 0);
    REQUIRE(ranked.size() == cands.size());

    // Any reordering of the input yields the same output.
    std::vector<candidate> shuffled{cands[3], cands[0], cands[4], cands[2], cands[1]};
    CHECK(store.rank(shuffled, 0) == ranked);
}
