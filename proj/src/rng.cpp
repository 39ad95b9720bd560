#include "politeia/rng.hpp"

#include "politeia/codec.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace politeia {

det_rng det_rng::from_seed(std::uint64_t seed) {
    byte_writer w;
    w.str("politeia-master-seed");
    w.u64(seed);
    return det_rng(sha256(w.data()));
}

det_rng det_rng::fork(std::string_view label, std::uint64_t index) const {
    byte_writer w;
    w.dig(key_);
    w.str(label);
    w.u64(index);
    return det_rng(sha256(w.data()));
}

std::uint8_t det_rng::next_byte() {
    if (pos_ >= block_.size()) {
        byte_writer w;
        w.dig(key_);
        w.u64(counter_++);
        block_ = sha256(w.data()).v;
        pos_ = 0;
    }
    return block_[pos_++];
}

std::uint64_t det_rng::next_u64() {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x = (x << 8) | next_byte();
    return x;
}

std::uint64_t det_rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("det_rng::below(0)");
    if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
    // Rejection sampling keeps the draw unbiased.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

bool det_rng::chance(std::uint32_t num, std::uint32_t den) {
    if (den == 0) throw std::invalid_argument("det_rng::chance with zero denominator");
    if (num >= den) return true;
    return below(den) < num;
}

bytes det_rng::blob(std::size_t len) {
    bytes out(len);
    for (auto& b : out) b = next_byte();
    return out;
}

std::vector<std::size_t> det_rng::sample(std::size_t n, std::size_t k) {
    k = std::min(k, n);
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = static_cast<std::size_t>(below(pool.size()));
        out.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return out;
}

} // namespace politeia
