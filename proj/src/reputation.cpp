#include "politeia/reputation.hpp"

#include <algorithm>
#include <set>

namespace politeia::rep {

namespace {

// Exact rational accumulator for the mean of dimension means. Reduced after
// every step, so the magnitudes stay tiny (numerators are bounded by
// score * window * group size).
struct ratio_sum {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    void add(std::uint64_t n, std::uint64_t d) {
        unsigned __int128 top =
            static_cast<unsigned __int128>(num) * d + static_cast<unsigned __int128>(n) * den;
        unsigned __int128 bottom = static_cast<unsigned __int128>(den) * d;
        unsigned __int128 a = top, b = bottom;
        while (b != 0) {
            unsigned __int128 t = a % b;
            a = b;
            b = t;
        }
        if (a == 0) a = 1;
        top /= a;
        bottom /= a;
        if (top > UINT64_MAX || bottom > UINT64_MAX) {
            throw protocol_error("reputation accumulator overflow");
        }
        num = static_cast<std::uint64_t>(top);
        den = static_cast<std::uint64_t>(bottom);
    }
};

} // namespace

std::string dimension_name(dimension d) {
    switch (d) {
        case dimension::persona_trait: return "persona-trait";
        case dimension::expertise: return "expertise";
        case dimension::proposal_reliability: return "proposal-reliability";
        case dimension::community_contribution: return "community-contribution";
        case dimension::research_contribution: return "research-contribution";
    }
    throw protocol_error("unknown reputation dimension");
}

dimension dimension_from_name(const std::string& name) {
    for (dimension d : kDimensions) {
        if (dimension_name(d) == name) return d;
    }
    throw protocol_error("unknown reputation dimension: " + name);
}

bytes evaluation::signed_payload() const {
    byte_writer w;
    w.kind(record_kind::evaluation);
    w.u64(evaluator);
    w.u64(subject);
    w.u64(period);
    w.map(scores, [](byte_writer& out, dimension d, std::uint8_t s) {
        out.u8(static_cast<std::uint8_t>(d));
        out.u8(s);
    });
    return w.take();
}

bytes evaluation::canonical_bytes() const {
    byte_writer w;
    w.raw(signed_payload());
    w.sig(sig);
    return w.take();
}

digest evaluation::id() const { return sha256(canonical_bytes()); }

digest evaluation_store::submit(const evaluation& e, const public_key& evaluator_pk,
                                bool co_member, epoch_t current_period) {
    if (e.evaluator == e.subject) throw protocol_error("self-evaluation is not allowed");
    if (!co_member) throw protocol_error("evaluator and subject share no group");
    if (e.period != current_period) throw protocol_error("evaluation period is not current");
    if (e.scores.empty()) throw protocol_error("evaluation carries no dimension scores");
    for (const auto& [d, s] : e.scores) {
        dimension_name(d); // rejects values outside the fixed set
        if (s > kMaxScore) throw protocol_error("evaluation score above 10");
    }
    if (!verify(evaluator_pk, e.signed_payload(), e.sig)) {
        throw protocol_error("evaluation signature does not verify");
    }
    auto& per_period = by_subject_[e.subject][e.period];
    if (per_period.count(e.evaluator)) {
        throw protocol_error("duplicate evaluation for (evaluator, subject, period)");
    }
    per_period.emplace(e.evaluator, e);
    ++count_;
    return e.id();
}

reputation_view evaluation_store::aggregate(node_id subject, epoch_t now) const {
    reputation_view view;
    view.subject = subject;
    view.window_end = now;
    view.window_begin = now >= kWindow - 1 ? now - (kWindow - 1) : 0;

    std::map<dimension, std::pair<std::uint64_t, std::uint64_t>> sums; // dim -> (sum, count)
    std::set<node_id> evaluators;
    auto sit = by_subject_.find(subject);
    if (sit != by_subject_.end()) {
        auto lo = sit->second.lower_bound(view.window_begin);
        auto hi = sit->second.upper_bound(view.window_end);
        for (auto it = lo; it != hi; ++it) {
            for (const auto& [who, e] : it->second) {
                evaluators.insert(who);
                for (const auto& [d, s] : e.scores) {
                    sums[d].first += s;
                    sums[d].second += 1;
                }
            }
        }
    }
    view.evaluator_count = evaluators.size();

    ratio_sum composite;
    for (dimension d : kDimensions) {
        auto it = sums.find(d);
        std::uint64_t num = 5, den = 1; // neutral prior when unscored
        if (it != sums.end() && it->second.second > 0) {
            num = it->second.first;
            den = it->second.second;
        }
        view.per_dimension[d] = score_ratio{num, den};
        composite.add(num, den);
    }
    view.composite = score_ratio{composite.num, composite.den * 5};
    return view;
}

std::vector<node_id> evaluation_store::rank(const std::vector<candidate>& candidates,
                                            epoch_t now) const {
    if (candidates.empty()) throw protocol_error("rank over an empty candidate list");
    std::vector<std::pair<candidate, score_ratio>> rows;
    rows.reserve(candidates.size());
    for (const candidate& c : candidates) {
        rows.emplace_back(c, aggregate(c.id, now).composite);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (!(a.second == b.second)) return b.second < a.second;
        if (a.first.join_epoch != b.first.join_epoch) return a.first.join_epoch < b.first.join_epoch;
        return a.first.id < b.first.id;
    });
    std::vector<node_id> out;
    out.reserve(rows.size());
    for (const auto& [c, r] : rows) out.push_back(c.id);
    return out;
}

} // namespace politeia::rep
