#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "politeia/chain_io.hpp"

#include <cstdio>
#include <filesystem>
#include <map>

using namespace politeia;
using namespace politeia::ledger;
namespace io = politeia::chain_io;

namespace {

key_pair kp_of(node_id id) {
    std::array<std::uint8_t, 32> seed{};
    for (int i = 0; i < 8; ++i) seed[i] = std::uint8_t(id >> (8 * i));
    return key_pair::from_seed(seed);
}

const key_pair& key_lookup(node_id id) {
    static std::map<node_id, key_pair> cache;
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, kp_of(id)).first;
    return it->second;
}

org::hierarchy build(std::size_t n) {
    org::hierarchy h;
    for (node_id id = 1; id <= n; ++id) h.admit_node(id, kp_of(id).pk, 0);
    h.rebalance();
    for (int round = 0; round < 50; ++round) {
        auto pending = h.groups_needing_election();
        if (pending.empty()) break;
        for (group_id g : pending) {
            auto result = h.run_election(g, {}, org::composite_index{});
            h.confirm_election(g, result.winners);
        }
    }
    return h;
}

digest dig_of(std::uint8_t fill) {
    digest d;
    d.v.fill(fill);
    return d;
}

// Exercises every array of the report schema at once.
group_report rich_report() {
    group_report r;
    r.outcomes.push_back({dig_of(0x11), 0x21, true, 37, 5, 1});
    r.elections.push_back({4, 12, {5, 9}, 5});
    r.confirmed_transactions.push_back({77, 450, 9, dig_of(0x22)});
    r.reward_cases.push_back({3, 14, 600, 2});
    econ::invalidation_record inv;
    inv.tx = 77;
    inv.offenders = {9, 14};
    inv.epoch = 6;
    inv.restricted_until = 16;
    inv.reason = "misreported amount";
    r.announcements.push_back(inv);
    r.rejections_issued.push_back(make_rejection(1, 4, 5, "election sized wrong",
                                                 {rectify_action::re_elect}, kp_of(2)));
    rectification_record rect;
    rect.group = 4;
    rect.epoch = 6;
    rect.notice = dig_of(0x33);
    rect.actions = {rectify_action::re_elect, rectify_action::other};
    rect.note = "held replacement election";
    rect.result_digests = {dig_of(0x44)};
    auto payload = rect.signed_payload();
    rect.sig = sign(kp_of(5), std::span<const std::uint8_t>(payload.data(), payload.size()));
    r.rectifications.push_back(std::move(rect));
    r.handovers.push_back(build_core_handover(4, 6, {dig_of(0x55)}, {dig_of(0x55)}, {5, 9},
                                              {9, 13}, key_lookup));
    return r;
}

// Minimal single-group chain with empty reports, same construction as the
// harness would produce.
struct mini_chain {
    org::hierarchy h;
    chain_bundle chain;
    group_id top;
    std::map<node_id, digest> prev;

    explicit mini_chain(std::size_t members) : h(build(members)) { top = h.top_group(); }

    void add_epoch(epoch_t e, group_report report = {}) {
        h.set_epoch(e);
        snapshot_info snap = snapshot_from(h);
        digest snap_digest = sha256(snap.canonical_bytes());

        auto rng = det_rng::from_seed(9).fork("epoch", e);
        std::vector<group_id> gids;
        for (const auto& [gid, g] : h.groups()) gids.push_back(gid);
        auto backups = assign_cross_backups(gids, 2, rng);
        digest backup_digest = sha256(backup_canonical_bytes(e, backups));

        std::map<node_id, node_archive> archives;
        std::map<node_id, public_key> pks;
        for (node_id n : h.group_at(top).members) {
            digest p = prev.count(n) ? prev[n] : zero_digest();
            archives[n] = build_node_archive(n, e, p, {}, key_lookup(n));
            prev[n] = archives[n].archive_digest();
            pks[n] = h.node_at(n).pk;
        }

        auto summary = build_group_summary(top, e, 0, snap_digest, backup_digest,
                                           std::move(report), archives, {}, pks, {},
                                           h.leaders(top), key_lookup);

        digest prev_hash = e == 0 ? zero_digest() : chain.block_summary_digests.at(e - 1);
        auto block = assemble_block(e, prev_hash, summary, h.leaders(top), key_lookup);

        chain.snapshots[e] = std::move(snap);
        chain.backups[e] = std::move(backups);
        chain.summaries[e][top] = std::move(summary);
        for (auto& [n, a] : archives) chain.archives[e][n] = std::move(a);
        chain.blocks[e] = std::move(block);
        chain.index_all();
    }

    void settle_finality() {
        std::uint64_t last = chain.blocks.rbegin()->first;
        for (auto& [hh, b] : chain.blocks) {
            b.finalized = hh + 1 <= last;
            b.finalize_epoch = b.finalized ? hh + 1 : 0;
        }
    }
};

mini_chain exported_chain() {
    mini_chain mc(4);
    for (epoch_t e = 0; e < 3; ++e) mc.add_epoch(e);
    mc.settle_finality();
    return mc;
}

// Replaces the first occurrence of `from` and expects the parse to fail.
void expect_reject(const std::string& text, const std::string& from, const std::string& to,
                   const std::string& path, auto parse) {
    std::string doctored = text;
    auto pos = doctored.find(from);
    REQUIRE(pos != std::string::npos);
    doctored.replace(pos, from.size(), to);
    CHECK_THROWS_AS(parse(doctored, path), io::chain_parse_error);
}

} // namespace

TEST_CASE("summaries with fully populated reports survive a render round trip") {
    auto mc = exported_chain();
    auto s = mc.chain.summaries.at(1).at(mc.top);
    s.report = rich_report();

    std::string text = io::render_summary(s);
    auto parsed = io::parse_summary(text, "t");
    CHECK(io::render_summary(parsed) == text);
    CHECK(sha256(parsed.canonical_bytes()) == sha256(s.canonical_bytes()));
    CHECK(parsed.declared_digest == s.declared_digest);
    CHECK(parsed.core_signatures == s.core_signatures);

    auto& notice = parsed.report.rejections_issued.at(0);
    CHECK(notice.record_digest() == s.report.rejections_issued.at(0).record_digest());
    CHECK(parsed.report.handovers.at(0).record_digest() ==
          s.report.handovers.at(0).record_digest());
}

TEST_CASE("blocks, archives, snapshots, and backups round trip byte for byte") {
    auto mc = exported_chain();

    std::string bt = io::render_block(mc.chain.blocks.at(1));
    auto block = io::parse_block(bt, "t");
    CHECK(io::render_block(block) == bt);
    CHECK(block_chain_hash(block) == block_chain_hash(mc.chain.blocks.at(1)));

    auto& archive0 = mc.chain.archives.at(1).begin()->second;
    std::string at = io::render_archive(archive0);
    auto archive = io::parse_archive(at, "t");
    CHECK(io::render_archive(archive) == at);
    CHECK(archive.archive_digest() == archive0.archive_digest());

    std::string st = io::render_snapshot(mc.chain.snapshots.at(1));
    auto snap = io::parse_snapshot(st, "t");
    CHECK(io::render_snapshot(snap) == st);
    CHECK(sha256(snap.canonical_bytes()) ==
          sha256(mc.chain.snapshots.at(1).canonical_bytes()));

    // Multi-group snapshot covers parents and children.
    auto big = build(30);
    auto big_snap = snapshot_from(big);
    auto big_rt = io::parse_snapshot(io::render_snapshot(big_snap), "t");
    CHECK(sha256(big_rt.canonical_bytes()) == sha256(big_snap.canonical_bytes()));

    std::map<group_id, std::vector<group_id>> assignment{{1, {2, 3}}, {2, {1, 3}}, {3, {1, 2}}};
    std::string kt = io::render_backups(7, assignment);
    epoch_t e = 0;
    auto back = io::parse_backups(kt, "t", e);
    CHECK(e == 7);
    CHECK(back == assignment);
    CHECK(sha256(backup_canonical_bytes(e, back)) ==
          sha256(backup_canonical_bytes(7, assignment)));
}

TEST_CASE("export produces the documented layout and reloads verbatim") {
    auto mc = exported_chain();
    auto files = io::export_chain(mc.chain);

    CHECK(files.count("chain/0.block.json"));
    CHECK(files.count("chain/2.block.json"));
    CHECK(files.count("archives/1/hierarchy.json"));
    CHECK(files.count("archives/1/backups.json"));
    CHECK(files.count(io::summary_path(1, mc.top)));
    CHECK(files.count(io::archive_path(1, 1)));
    // 3 epochs x (block + summary + hierarchy + backups + 4 archives)
    CHECK(files.size() == 3 * 8);

    auto loaded = io::load_bundle(files);
    CHECK(io::export_chain(loaded) == files);

    verify_context ctx;
    auto violation = verify_chain(loaded, ctx);
    CHECK(!violation.has_value());
}

TEST_CASE("strict parsing rejects malformed inputs") {
    auto mc = exported_chain();
    std::string block = io::render_block(mc.chain.blocks.at(0));
    std::string archive = io::render_archive(mc.chain.archives.at(1).at(1));
    std::string snap = io::render_snapshot(mc.chain.snapshots.at(1));
    auto pb = [](const std::string& t, const std::string& p) { return io::parse_block(t, p); };
    auto pa = [](const std::string& t, const std::string& p) { return io::parse_archive(t, p); };
    auto ps = [](const std::string& t, const std::string& p) { return io::parse_snapshot(t, p); };

    SUBCASE("broken json") { CHECK_THROWS_AS(io::parse_block("{", "t"), io::chain_parse_error); }
    SUBCASE("extra key") { expect_reject(block, "{\"finalize_epoch\"", "{\"zz\":1,\"finalize_epoch\"", "t", pb); }
    SUBCASE("missing key") { expect_reject(block, "\"finalized\":true,", "", "t", pb); }
    SUBCASE("float where integer expected") { expect_reject(block, "\"height\":0", "\"height\":0.0", "t", pb); }
    SUBCASE("negative integer") { expect_reject(block, "\"height\":0", "\"height\":-1", "t", pb); }
    SUBCASE("string where integer expected") { expect_reject(archive, "\"epoch\":1", "\"epoch\":\"1\"", "t", pa); }
    SUBCASE("uppercase hex") {
        std::string doctored = archive;
        auto pos = doctored.find("\"prev_digest\":\"");
        REQUIRE(pos != std::string::npos);
        doctored[pos + 15] = 'A';
        CHECK_THROWS_AS(io::parse_archive(doctored, "t"), io::chain_parse_error);
    }
    SUBCASE("truncated hex") { expect_reject(archive, "\"signature\":\"", "\"signature\":\"ab", "t", pa); }
    SUBCASE("non-canonical map key") { expect_reject(snap, "\"1\":{\"", "\"01\":{\"", "t", ps); }
    SUBCASE("boolean as number") { expect_reject(block, "\"finalized\":true", "\"finalized\":1", "t", pb); }
    SUBCASE("unknown rectification tag") {
        auto s = mc.chain.summaries.at(1).at(mc.top);
        s.report = rich_report();
        expect_reject(io::render_summary(s), "\"re-elect\"", "\"re-paint\"", "t",
                      [](const std::string& t, const std::string& p) {
                          return io::parse_summary(t, p);
                      });
    }
}

TEST_CASE("loading checks path and content agreement") {
    auto mc = exported_chain();
    auto files = io::export_chain(mc.chain);

    SUBCASE("unknown file name") {
        files["notes.txt"] = "{}";
        CHECK_THROWS_AS(io::load_bundle(files), io::chain_parse_error);
    }
    SUBCASE("non-canonical height in path") {
        files["chain/01.block.json"] = files.at("chain/1.block.json");
        CHECK_THROWS_AS(io::load_bundle(files), io::chain_parse_error);
    }
    SUBCASE("block stored under the wrong height") {
        files["chain/5.block.json"] = files.at("chain/1.block.json");
        CHECK_THROWS_AS(io::load_bundle(files), io::chain_parse_error);
    }
    SUBCASE("archive stored under the wrong epoch") {
        files[io::archive_path(2, 99)] = files.at(io::archive_path(2, 1));
        CHECK_THROWS_AS(io::load_bundle(files), io::chain_parse_error);
    }
    SUBCASE("summary moved to another epoch directory") {
        auto text = files.at(io::summary_path(1, mc.top));
        files[io::summary_path(0, mc.top)] = text;
        CHECK_THROWS_AS(io::load_bundle(files), io::chain_parse_error);
    }
}

TEST_CASE("apply_file refreshes digests so tampering stays visible") {
    auto mc = exported_chain();
    auto files = io::export_chain(mc.chain);
    auto loaded = io::load_bundle(files);
    verify_context ctx;
    REQUIRE(!verify_chain(loaded, ctx).has_value());

    std::string path = io::archive_path(1, 2);
    std::string original = files.at(path);

    // Flip one hex digit of the archive's previous-digest link. The JSON
    // stays well formed, so detection must come from verification.
    std::string doctored = original;
    auto pos = doctored.find("\"prev_digest\":\"");
    REQUIRE(pos != std::string::npos);
    doctored[pos + 15] = doctored[pos + 15] == 'a' ? 'b' : 'a';

    io::apply_file(loaded, path, doctored);
    auto violation = verify_chain(loaded, ctx);
    REQUIRE(violation.has_value());

    io::apply_file(loaded, path, original);
    CHECK(!verify_chain(loaded, ctx).has_value());

    CHECK_THROWS_AS(io::apply_file(loaded, path, "not json"), io::chain_parse_error);
    CHECK_THROWS_AS(io::apply_file(loaded, "stray.json", original), io::chain_parse_error);
}

TEST_CASE("directory writer and reader reproduce the in-memory image") {
    auto mc = exported_chain();
    auto files = io::export_chain(mc.chain);

    auto root = std::filesystem::temp_directory_path() /
                ("politeia_io_test_" + std::to_string(::getpid()));
    std::filesystem::remove_all(root);
    io::write_dir(files, root);
    auto reread = io::read_dir(root);
    CHECK(reread == files);

    auto loaded = io::load_bundle(reread);
    verify_context ctx;
    CHECK(!verify_chain(loaded, ctx).has_value());
    std::filesystem::remove_all(root);

    CHECK_THROWS_AS(io::read_dir(root / "missing"), config_error);
}
