#pragma once

// Periodic signed peer evaluations and their aggregation into the
// per-node reputation used by elections and agent policies.
//
// Aggregation is exact: dimension means and the composite are kept as
// unreduced rationals, so rankings never depend on floating-point
// rounding. A dimension nobody scored inside the window falls back to
// the neutral prior 5.

#include "politeia/codec.hpp"
#include "politeia/crypto.hpp"
#include "politeia/types.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace politeia::rep {

inline constexpr epoch_t kWindow = 6;
inline constexpr int kMaxScore = 10;

enum class dimension : std::uint8_t {
    persona_trait = 0,
    expertise = 1,
    proposal_reliability = 2,
    community_contribution = 3,
    research_contribution = 4,
};
inline constexpr std::array<dimension, 5> kDimensions{
    dimension::persona_trait,       dimension::expertise,
    dimension::proposal_reliability, dimension::community_contribution,
    dimension::research_contribution,
};

std::string dimension_name(dimension d);
dimension dimension_from_name(const std::string& name);

struct evaluation {
    node_id evaluator = 0;
    node_id subject = 0;
    epoch_t period = 0;
    std::map<dimension, std::uint8_t> scores; // 0..=10, subset of the fixed set
    signature sig;

    // Canonical bytes the evaluator signs (everything but the signature).
    bytes signed_payload() const;
    bytes canonical_bytes() const;
    digest id() const;
};

struct reputation_view {
    node_id subject = 0;
    std::map<dimension, score_ratio> per_dimension; // all five keys present
    score_ratio composite{5, 1};
    std::size_t evaluator_count = 0; // distinct evaluators inside the window
    epoch_t window_begin = 0;
    epoch_t window_end = 0;
};

// Candidate row for ranking: join epoch settles composite ties.
struct candidate {
    node_id id = 0;
    epoch_t join_epoch = 0;
};

class evaluation_store {
public:
    // `co_member` is the caller's verdict on whether evaluator and subject
    // currently share a group; this module does not reach into org state.
    digest submit(const evaluation& e, const public_key& evaluator_pk, bool co_member,
                  epoch_t current_period);

    // Arithmetic means over the last kWindow periods ending at `now`.
    reputation_view aggregate(node_id subject, epoch_t now) const;

    // Descending (composite, earlier join, lower id). Total order for
    // distinct ids.
    std::vector<node_id> rank(const std::vector<candidate>& candidates, epoch_t now) const;

    std::size_t evaluation_count() const { return count_; }

private:
    // subject -> period -> evaluator -> evaluation
    std::map<node_id, std::map<epoch_t, std::map<node_id, evaluation>>> by_subject_;
    std::size_t count_ = 0;
};

} // namespace politeia::rep
