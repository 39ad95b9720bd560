#pragma once

// Canonical binary encoding shared by every record type. Digests and
// signatures are always computed over these bytes, never over a JSON
// rendering, so they stay bit-stable across exports and platforms.
//
// Schema rules: fixed field order, big-endian fixed-width integers,
// strings length-prefixed UTF-8, lists length-prefixed, optional fields
// presence-flagged. Every record starts with a one-byte kind tag.

#include "politeia/crypto.hpp"
#include "politeia/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace politeia {

struct decode_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One tag per record type keeps encodings of different records disjoint:
// two records of different kinds can never share canonical bytes.
enum class record_kind : std::uint8_t {
    hierarchy_snapshot = 0x01,
    evaluation = 0x10,
    chat = 0x20,
    proposal = 0x21,
    feedback = 0x22,
    tally = 0x23,
    transaction = 0x30,
    reward_grant = 0x31,
    confirmation = 0x32,
    invalidation = 0x33,
    announcement = 0x34,
    node_archive = 0x40,
    group_summary = 0x41,
    block = 0x42,
    rejection = 0x43,
    rectification = 0x44,
    signed_vote = 0x45,
    backup_assignment = 0x46,
    handover = 0x47,
};

class byte_writer {
public:
    void u8(std::uint8_t x) { buf_.push_back(x); }
    void kind(record_kind k) { u8(static_cast<std::uint8_t>(k)); }

    void u32(std::uint32_t x) {
        for (int shift = 24; shift >= 0; shift -= 8) {
            buf_.push_back(static_cast<std::uint8_t>(x >> shift));
        }
    }

    void u64(std::uint64_t x) {
        for (int shift = 56; shift >= 0; shift -= 8) {
            buf_.push_back(static_cast<std::uint8_t>(x >> shift));
        }
    }

    void boolean(bool b) { u8(b ? 1 : 0); }

    void raw(std::span<const std::uint8_t> data) {
        buf_.insert(buf_.end(), data.begin(), data.end());
    }

    void blob(std::span<const std::uint8_t> data) {
        u32(static_cast<std::uint32_t>(data.size()));
        raw(data);
    }

    void blob(const bytes& data) { blob(std::span<const std::uint8_t>(data.data(), data.size())); }

    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    void dig(const digest& d) { raw(std::span<const std::uint8_t>(d.v.data(), d.v.size())); }
    void key(const public_key& k) { raw(std::span<const std::uint8_t>(k.v.data(), k.v.size())); }
    void sig(const signature& s) { raw(std::span<const std::uint8_t>(s.v.data(), s.v.size())); }

    template <class T, class Fn>
    void list(const std::vector<T>& xs, Fn&& encode_item) {
        u32(static_cast<std::uint32_t>(xs.size()));
        for (const auto& x : xs) encode_item(*this, x);
    }

    template <class K, class V, class Fn>
    void map(const std::map<K, V>& xs, Fn&& encode_entry) {
        u32(static_cast<std::uint32_t>(xs.size()));
        for (const auto& [k, v] : xs) encode_entry(*this, k, v);
    }

    template <class T, class Fn>
    void opt(const std::optional<T>& x, Fn&& encode_item) {
        boolean(x.has_value());
        if (x) encode_item(*this, *x);
    }

    const bytes& data() const { return buf_; }
    bytes take() { return std::move(buf_); }

private:
    bytes buf_;
};

class byte_reader {
public:
    explicit byte_reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i) x = (x << 8) | data_[pos_++];
        return x;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i) x = (x << 8) | data_[pos_++];
        return x;
    }

    bool boolean() {
        auto b = u8();
        if (b > 1) throw decode_error("boolean byte out of range");
        return b == 1;
    }

    bytes blob() {
        auto n = u32();
        need(n);
        bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    std::string str() {
        auto n = u32();
        need(n);
        std::string out(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return out;
    }

    digest dig() {
        need(32);
        digest d;
        std::copy(data_.begin() + pos_, data_.begin() + pos_ + 32, d.v.begin());
        pos_ += 32;
        return d;
    }

    public_key key() {
        need(32);
        public_key k;
        std::copy(data_.begin() + pos_, data_.begin() + pos_ + 32, k.v.begin());
        pos_ += 32;
        return k;
    }

    signature sig() {
        need(64);
        signature s;
        std::copy(data_.begin() + pos_, data_.begin() + pos_ + 64, s.v.begin());
        pos_ += 64;
        return s;
    }

    std::uint32_t list_len() { return u32(); }

    bool opt_flag() { return boolean(); }

    bool at_end() const { return pos_ == data_.size(); }

    void expect_end() const {
        if (!at_end()) throw decode_error("trailing bytes after record");
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw decode_error("record truncated");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace politeia
