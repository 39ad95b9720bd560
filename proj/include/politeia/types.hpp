#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace politeia {

using node_id = std::uint64_t;
using group_id = std::uint64_t;
using proposal_id = std::uint64_t;
using case_id = std::uint64_t;
using transaction_id = std::uint64_t;
using epoch_t = std::uint64_t;

// Raised when an operation's precondition is violated (bad caller, stale
// record, capacity breach, ...). Deliberate rule outcomes such as a failed
// chain verification are return values, not exceptions.
struct protocol_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact mean of integer scores, kept as an unreduced ratio so comparisons
// never touch floating point.
struct score_ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double as_double() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
};

inline bool operator==(const score_ratio& a, const score_ratio& b) {
    return static_cast<unsigned __int128>(a.num) * b.den == static_cast<unsigned __int128>(b.num) * a.den;
}

inline bool operator<(const score_ratio& a, const score_ratio& b) {
    return static_cast<unsigned __int128>(a.num) * b.den < static_cast<unsigned __int128>(b.num) * a.den;
}

inline bool operator>(const score_ratio& a, const score_ratio& b) { return b < a; }

} // namespace politeia
