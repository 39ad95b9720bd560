#include "politeia/crypto.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace politeia {

namespace {

void ensure_sodium() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialization failed");
        }
    });
}

} // namespace

bool digest::is_zero() const {
    for (auto b : v) {
        if (b != 0) return false;
    }
    return true;
}

key_pair key_pair::from_seed(const std::array<std::uint8_t, 32>& seed) {
    ensure_sodium();
    key_pair kp;
    crypto_sign_ed25519_seed_keypair(kp.pk.v.data(), kp.sk.data(), seed.data());
    return kp;
}

digest sha256(std::span<const std::uint8_t> data) {
    ensure_sodium();
    digest d;
    crypto_hash_sha256(d.v.data(), data.data(), data.size());
    return d;
}

digest sha256(const bytes& data) {
    return sha256(std::span<const std::uint8_t>(data.data(), data.size()));
}

digest zero_digest() {
    return digest{};
}

signature sign(const key_pair& key, std::span<const std::uint8_t> msg) {
    ensure_sodium();
    signature s;
    crypto_sign_ed25519_detached(s.v.data(), nullptr, msg.data(), msg.size(), key.sk.data());
    return s;
}

bool verify(const public_key& pk, std::span<const std::uint8_t> msg, const signature& sig) {
    ensure_sodium();
    return crypto_sign_ed25519_verify_detached(sig.v.data(), msg.data(), msg.size(), pk.v.data()) == 0;
}

std::string to_hex(std::span<const std::uint8_t> data) {
    static const char* alphabet = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(alphabet[b >> 4]);
        out.push_back(alphabet[b & 0x0f]);
    }
    return out;
}

std::string to_hex(const digest& d) {
    return to_hex(std::span<const std::uint8_t>(d.v.data(), d.v.size()));
}

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1; // uppercase is rejected on purpose
}

} // namespace

bool from_hex(std::string_view text, bytes& out) {
    if (text.size() % 2 != 0) return false;
    out.clear();
    out.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        int hi = hex_nibble(text[i]);
        int lo = hex_nibble(text[i + 1]);
        if (hi < 0 || lo < 0) return false;
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return true;
}

bool digest_from_hex(std::string_view text, digest& out) {
    bytes raw;
    if (!from_hex(text, raw) || raw.size() != 32) return false;
    std::copy(raw.begin(), raw.end(), out.v.begin());
    return true;
}

} // namespace politeia
