#pragma once

// Deterministic randomness: SHA-256 in counter mode over a derived key.
// Substreams are forked by hashing (parent key, label, index), so adding a
// consumer in one phase never perturbs the draws seen by another. This is
// what makes (seed, config) fully determine a run on every platform.

#include "politeia/crypto.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace politeia {

class det_rng {
public:
    explicit det_rng(const digest& key) : key_(key) {}

    static det_rng from_seed(std::uint64_t seed);

    det_rng fork(std::string_view label, std::uint64_t index = 0) const;

    std::uint64_t next_u64();

    // Uniform in [0, n); n == 0 is a caller bug and throws.
    std::uint64_t below(std::uint64_t n);

    // True with probability num/den.
    bool chance(std::uint32_t num, std::uint32_t den);

    bytes blob(std::size_t len);

    template <class T>
    void shuffle(std::vector<T>& xs) {
        if (xs.size() < 2) return;
        for (std::size_t i = xs.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(xs[i], xs[j]);
        }
    }

    template <class T>
    const T& pick(const std::vector<T>& xs) {
        return xs[static_cast<std::size_t>(below(xs.size()))];
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample(std::size_t n, std::size_t k);

private:
    std::uint8_t next_byte();

    digest key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint8_t, 32> block_{};
    std::size_t pos_ = 32;
};

} // namespace politeia
