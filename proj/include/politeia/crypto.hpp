#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace politeia {

using bytes = std::vector<std::uint8_t>;

// 32-byte content hash. Records are hashed over their canonical binary
// encoding, so equal records always produce equal digests.
struct digest {
    std::array<std::uint8_t, 32> v{};
    auto operator<=>(const digest&) const = default;
    bool is_zero() const;
};

struct public_key {
    std::array<std::uint8_t, 32> v{};
    auto operator<=>(const public_key&) const = default;
};

struct signature {
    std::array<std::uint8_t, 64> v{};
    auto operator<=>(const signature&) const = default;
};

// Ed25519 key pair. Derived from a 32-byte seed so that simulation runs
// are replayable from a single master seed.
struct key_pair {
    public_key pk;
    std::array<std::uint8_t, 64> sk{};

    static key_pair from_seed(const std::array<std::uint8_t, 32>& seed);
};

digest sha256(std::span<const std::uint8_t> data);
digest sha256(const bytes& data);
digest zero_digest();

signature sign(const key_pair& key, std::span<const std::uint8_t> msg);

// Returns false for any mismatched or malformed input; never throws.
bool verify(const public_key& pk, std::span<const std::uint8_t> msg, const signature& sig);

// Digests and signatures are rendered as lowercase hex everywhere.
std::string to_hex(std::span<const std::uint8_t> data);
std::string to_hex(const digest& d);

// Strict decoder: lowercase hex only, even length. Returns false otherwise.
bool from_hex(std::string_view text, bytes& out);
bool digest_from_hex(std::string_view text, digest& out);

} // namespace politeia
