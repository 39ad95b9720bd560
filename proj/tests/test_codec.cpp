#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "politeia/codec.hpp"
#include "politeia/crypto.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

using namespace politeia;

TEST_CASE("integers encode big endian with fixed width") {
    byte_writer w;
    w.u8(0xab);
    w.u32(0x01020304);
    w.u64(0x0102030405060708ull);
    bytes expect{0xab, 0x01, 0x02, 0x03, 0x04, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08};
    CHECK(w.data() == expect);
}

TEST_CASE("scalar fields round trip") {
    byte_writer w;
    w.u8(200);
    w.u32(0);
    w.u64(std::uint64_t(-1));
    w.boolean(true);
    w.boolean(false);
    w.str("héllo");
    w.blob(bytes{1, 2, 3});

    byte_reader r(w.data());
    CHECK(r.u8() == 200);
    CHECK(r.u32() == 0);
    CHECK(r.u64() == std::uint64_t(-1));
    CHECK(r.boolean());
    CHECK_FALSE(r.boolean());
    CHECK(r.str() == "héllo");
    CHECK(r.blob() == bytes{1, 2, 3});
    CHECK(r.at_end());
}

TEST_CASE("lists maps and optionals round trip") {
    byte_writer w;
    w.list(std::vector<std::uint64_t>{5, 6, 7},
           [](byte_writer& out, std::uint64_t x) { out.u64(x); });
    w.map(std::map<std::uint64_t, std::string>{{1, "a"}, {2, "b"}},
          [](byte_writer& out, std::uint64_t k, const std::string& v) {
              out.u64(k);
              out.str(v);
          });
    w.opt(std::optional<std::uint32_t>{9},
          [](byte_writer& out, std::uint32_t x) { out.u32(x); });
    w.opt(std::optional<std::uint32_t>{},
          [](byte_writer& out, std::uint32_t x) { out.u32(x); });

    byte_reader r(w.data());
    std::uint32_t n = r.list_len();
    REQUIRE(n == 3);
    CHECK(r.u64() == 5);
    CHECK(r.u64() == 6);
    CHECK(r.u64() == 7);
    n = r.list_len();
    REQUIRE(n == 2);
    CHECK(r.u64() == 1);
    CHECK(r.str() == "a");
    CHECK(r.u64() == 2);
    CHECK(r.str() == "b");
    REQUIRE(r.opt_flag());
    CHECK(r.u32() == 9);
    CHECK_FALSE(r.opt_flag());
    r.expect_end();
}

TEST_CASE("digest key and signature fields round trip") {
    digest d = sha256(bytes{0x42});
    byte_writer w;
    w.dig(d);

    byte_reader r(w.data());
    CHECK(r.dig() == d);
    CHECK(r.at_end());
}

TEST_CASE("truncated input is rejected") {
    byte_writer w;
    w.u64(12345);
    bytes buf = w.take();
    buf.pop_back();

    byte_reader r(buf);
    CHECK_THROWS_AS(r.u64(), decode_error);
}

TEST_CASE("trailing bytes are rejected") {
    byte_writer w;
    w.u32(1);
    bytes buf = w.take();
    buf.push_back(0);

    byte_reader r(buf);
    r.u32();
    CHECK_FALSE(r.at_end());
    CHECK_THROWS_AS(r.expect_end(), decode_error);
}

TEST_CASE("boolean bytes other than 0 and 1 are rejected") {
    bytes buf{2};
    byte_reader r(buf);
    CHECK_THROWS_AS(r.boolean(), decode_error);
}

TEST_CASE("encoding is injective over field boundaries") {
    // "ab" + "c" and "a" + "bc" must not collide: lengths are part of the
    // encoding, so moving a byte across a boundary changes the output.
    byte_writer w1;
    w1.str("ab");
    w1.str("c");
    byte_writer w2;
    w2.str("a");
    w2.str("bc");
    CHECK(w1.data() != w2.data());

    byte_writer w3;
    w3.blob(bytes{});
    w3.blob(bytes{7});
    byte_writer w4;
    w4.blob(bytes{7});
    w4.blob(bytes{});
    CHECK(w3.data() != w4.data());
}

TEST_CASE("distinct values never share an encoding") {
    // Sample a pile of (u64, string) records and check pairwise digests
    // differ; a collision would break every hash commitment downstream.
    std::map<bytes, std::pair<std::uint64_t, std::string>> seen;
    for (std::uint64_t i = 0; i < 200; ++i) {
        std::string s(i % 7, char('a' + i % 26));
        byte_writer w;
        w.u64(i / 7);
        w.str(s);
        auto [it, fresh] = seen.emplace(w.take(), std::make_pair(i / 7, s));
        if (!fresh) {
            CHECK(it->second == std::make_pair(i / 7, s));
        }
    }
}
