#include "politeia/chain_io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>

namespace politeia::chain_io {

using nlohmann::json;
using namespace politeia::ledger;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw chain_parse_error(path, what);
}

// Canonical decimal: digits only, no leading zeros, fits in 64 bits.
std::uint64_t strict_u64(const std::string& text, const std::string& path) {
    if (text.empty()) bad(path, "empty numeric token");
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        bad(path, "malformed numeric token '" + text + "'");
    }
    if (text != std::to_string(value)) bad(path, "non-canonical number '" + text + "'");
    return value;
}

void expect_keys(const json& o, std::initializer_list<const char*> keys,
                 const std::string& path) {
    if (!o.is_object()) bad(path, "expected an object");
    if (o.size() != keys.size()) bad(path, "unexpected key set");
    for (const char* k : keys) {
        if (!o.contains(k)) bad(path, std::string("missing key '") + k + "'");
    }
}

std::uint64_t get_u64(const json& o, const char* k, const std::string& path) {
    const json& v = o.at(k);
    if (!v.is_number_unsigned()) bad(path, std::string("field '") + k + "' is not unsigned");
    return v.get<std::uint64_t>();
}

std::uint32_t get_u32(const json& o, const char* k, const std::string& path) {
    std::uint64_t v = get_u64(o, k, path);
    if (v > UINT32_MAX) bad(path, std::string("field '") + k + "' out of range");
    return static_cast<std::uint32_t>(v);
}

std::uint8_t get_u8(const json& o, const char* k, const std::string& path) {
    std::uint64_t v = get_u64(o, k, path);
    if (v > UINT8_MAX) bad(path, std::string("field '") + k + "' out of range");
    return static_cast<std::uint8_t>(v);
}

bool get_bool(const json& o, const char* k, const std::string& path) {
    const json& v = o.at(k);
    if (!v.is_boolean()) bad(path, std::string("field '") + k + "' is not a boolean");
    return v.get<bool>();
}

std::string get_str(const json& o, const char* k, const std::string& path) {
    const json& v = o.at(k);
    if (!v.is_string()) bad(path, std::string("field '") + k + "' is not a string");
    return v.get<std::string>();
}

digest get_digest(const json& o, const char* k, const std::string& path) {
    digest d;
    if (!digest_from_hex(get_str(o, k, path), d)) {
        bad(path, std::string("field '") + k + "' is not a 32-byte lowercase hex digest");
    }
    return d;
}

signature sig_from_hex(const std::string& text, const std::string& path) {
    bytes raw;
    if (!from_hex(text, raw) || raw.size() != 64) {
        bad(path, "signature is not 64 bytes of lowercase hex");
    }
    signature s;
    std::copy(raw.begin(), raw.end(), s.v.begin());
    return s;
}

public_key pk_from_hex(const std::string& text, const std::string& path) {
    bytes raw;
    if (!from_hex(text, raw) || raw.size() != 32) {
        bad(path, "public key is not 32 bytes of lowercase hex");
    }
    public_key k;
    std::copy(raw.begin(), raw.end(), k.v.begin());
    return k;
}

std::vector<std::uint64_t> get_u64_list(const json& o, const char* k, const std::string& path) {
    const json& v = o.at(k);
    if (!v.is_array()) bad(path, std::string("field '") + k + "' is not an array");
    std::vector<std::uint64_t> out;
    out.reserve(v.size());
    for (const json& item : v) {
        if (!item.is_number_unsigned()) bad(path, std::string("entry in '") + k + "' not unsigned");
        out.push_back(item.get<std::uint64_t>());
    }
    return out;
}

std::vector<digest> get_digest_list(const json& o, const char* k, const std::string& path) {
    const json& v = o.at(k);
    if (!v.is_array()) bad(path, std::string("field '") + k + "' is not an array");
    std::vector<digest> out;
    out.reserve(v.size());
    for (const json& item : v) {
        if (!item.is_string()) bad(path, std::string("entry in '") + k + "' not a string");
        digest d;
        if (!digest_from_hex(item.get<std::string>(), d)) {
            bad(path, std::string("entry in '") + k + "' is not a hex digest");
        }
        out.push_back(d);
    }
    return out;
}

// {"<id>": "<hex digest>"} with strict canonical integer keys.
std::map<std::uint64_t, digest> get_digest_map(const json& o, const char* k,
                                               const std::string& path) {
    const json& v = o.at(k);
    if (!v.is_object()) bad(path, std::string("field '") + k + "' is not an object");
    std::map<std::uint64_t, digest> out;
    for (const auto& [key, val] : v.items()) {
        if (!val.is_string()) bad(path, std::string("value in '") + k + "' not a string");
        digest d;
        if (!digest_from_hex(val.get<std::string>(), d)) {
            bad(path, std::string("value in '") + k + "' is not a hex digest");
        }
        out[strict_u64(key, path)] = d;
    }
    if (out.size() != v.size()) bad(path, std::string("duplicate keys in '") + k + "'");
    return out;
}

std::map<std::uint64_t, signature> get_sig_map(const json& o, const char* k,
                                               const std::string& path) {
    const json& v = o.at(k);
    if (!v.is_object()) bad(path, std::string("field '") + k + "' is not an object");
    std::map<std::uint64_t, signature> out;
    for (const auto& [key, val] : v.items()) {
        if (!val.is_string()) bad(path, std::string("value in '") + k + "' not a string");
        out[strict_u64(key, path)] = sig_from_hex(val.get<std::string>(), path);
    }
    if (out.size() != v.size()) bad(path, std::string("duplicate keys in '") + k + "'");
    return out;
}

std::string hex_of_sig(const signature& s) {
    return to_hex(std::span<const std::uint8_t>(s.v.data(), s.v.size()));
}
std::string hex_of_pk(const public_key& k) {
    return to_hex(std::span<const std::uint8_t>(k.v.data(), k.v.size()));
}

json digest_map_json(const std::map<std::uint64_t, digest>& m) {
    json o = json::object();
    for (const auto& [k, d] : m) o[std::to_string(k)] = to_hex(d);
    return o;
}

json sig_map_json(const std::map<std::uint64_t, signature>& m) {
    json o = json::object();
    for (const auto& [k, s] : m) o[std::to_string(k)] = hex_of_sig(s);
    return o;
}

json u64_array(const std::vector<std::uint64_t>& xs) {
    json a = json::array();
    for (auto x : xs) a.push_back(x);
    return a;
}

json digest_array(const std::vector<digest>& xs) {
    json a = json::array();
    for (const auto& d : xs) a.push_back(to_hex(d));
    return a;
}

// ------------------------------------------------------------------
// Report rendering and parsing

json report_json(const group_report& r) {
    json o = json::object();
    o["outcomes"] = json::array();
    for (const auto& x : r.outcomes) {
        o["outcomes"].push_back({{"proposal", to_hex(x.proposal)},
                                 {"kind", x.kind},
                                 {"adopted", x.adopted},
                                 {"mean_num", x.mean_num},
                                 {"mean_den", x.mean_den},
                                 {"routing", x.routing}});
    }
    o["elections"] = json::array();
    for (const auto& x : r.elections) {
        o["elections"].push_back({{"group", x.group},
                                  {"declared_size", x.declared_size},
                                  {"winners", u64_array(x.winners)},
                                  {"host", x.host}});
    }
    o["confirmed_transactions"] = json::array();
    for (const auto& x : r.confirmed_transactions) {
        o["confirmed_transactions"].push_back({{"tx", x.tx},
                                               {"amount", x.amount},
                                               {"confirmer", x.confirmer},
                                               {"archive_hash", to_hex(x.archive_hash)}});
    }
    o["reward_cases"] = json::array();
    for (const auto& x : r.reward_cases) {
        o["reward_cases"].push_back({{"case", x.rcase},
                                     {"beneficiary", x.beneficiary},
                                     {"amount", x.amount},
                                     {"status", x.status}});
    }
    o["announcements"] = json::array();
    for (const auto& x : r.announcements) {
        o["announcements"].push_back({{"tx", x.tx},
                                      {"offenders", u64_array(x.offenders)},
                                      {"epoch", x.epoch},
                                      {"restricted_until", x.restricted_until},
                                      {"reason", x.reason}});
    }
    o["rejections"] = json::array();
    for (const auto& x : r.rejections_issued) {
        json tags = json::array();
        for (auto a : x.required_rectifications) tags.push_back(action_name(a));
        o["rejections"].push_back({{"from_group", x.from_group},
                                   {"to_group", x.to_group},
                                   {"epoch", x.epoch},
                                   {"reasons", x.reasons},
                                   {"required_rectifications", tags},
                                   {"signature", hex_of_sig(x.sig)}});
    }
    o["rectifications"] = json::array();
    for (const auto& x : r.rectifications) {
        json tags = json::array();
        for (auto a : x.actions) tags.push_back(action_name(a));
        o["rectifications"].push_back({{"group", x.group},
                                       {"epoch", x.epoch},
                                       {"notice", to_hex(x.notice)},
                                       {"actions", tags},
                                       {"note", x.note},
                                       {"result_digests", digest_array(x.result_digests)},
                                       {"signature", hex_of_sig(x.sig)}});
    }
    o["handovers"] = json::array();
    for (const auto& x : r.handovers) {
        o["handovers"].push_back({{"group", x.group},
                                  {"epoch", x.epoch},
                                  {"inventory", digest_array(x.inventory)},
                                  {"old_cores", u64_array(x.old_cores)},
                                  {"new_cores", u64_array(x.new_cores)},
                                  {"signatures", sig_map_json(x.signatures)}});
    }
    return o;
}

std::vector<rectify_action> parse_actions(const json& o, const char* k,
                                          const std::string& path) {
    const json& v = o.at(k);
    if (!v.is_array()) bad(path, std::string("field '") + k + "' is not an array");
    std::vector<rectify_action> out;
    for (const json& item : v) {
        if (!item.is_string()) bad(path, "rectification tag is not a string");
        try {
            out.push_back(action_from_name(item.get<std::string>()));
        } catch (const protocol_error& e) {
            bad(path, e.what());
        }
    }
    return out;
}

group_report parse_report(const json& o, const std::string& path) {
    expect_keys(o,
                {"outcomes", "elections", "confirmed_transactions", "reward_cases",
                 "announcements", "rejections", "rectifications", "handovers"},
                path);
    group_report r;
    for (const json& x : o.at("outcomes")) {
        expect_keys(x, {"proposal", "kind", "adopted", "mean_num", "mean_den", "routing"}, path);
        outcome_record rec;
        rec.proposal = get_digest(x, "proposal", path);
        rec.kind = get_u8(x, "kind", path);
        rec.adopted = get_bool(x, "adopted", path);
        rec.mean_num = get_u64(x, "mean_num", path);
        rec.mean_den = get_u64(x, "mean_den", path);
        rec.routing = get_u8(x, "routing", path);
        r.outcomes.push_back(rec);
    }
    for (const json& x : o.at("elections")) {
        expect_keys(x, {"group", "declared_size", "winners", "host"}, path);
        election_record rec;
        rec.group = get_u64(x, "group", path);
        rec.declared_size = get_u32(x, "declared_size", path);
        rec.winners = get_u64_list(x, "winners", path);
        rec.host = get_u64(x, "host", path);
        r.elections.push_back(std::move(rec));
    }
    for (const json& x : o.at("confirmed_transactions")) {
        expect_keys(x, {"tx", "amount", "confirmer", "archive_hash"}, path);
        tx_record rec;
        rec.tx = get_u64(x, "tx", path);
        rec.amount = get_u64(x, "amount", path);
        rec.confirmer = get_u64(x, "confirmer", path);
        rec.archive_hash = get_digest(x, "archive_hash", path);
        r.confirmed_transactions.push_back(rec);
    }
    for (const json& x : o.at("reward_cases")) {
        expect_keys(x, {"case", "beneficiary", "amount", "status"}, path);
        reward_record rec;
        rec.rcase = get_u64(x, "case", path);
        rec.beneficiary = get_u64(x, "beneficiary", path);
        rec.amount = get_u64(x, "amount", path);
        rec.status = get_u8(x, "status", path);
        r.reward_cases.push_back(rec);
    }
    for (const json& x : o.at("announcements")) {
        expect_keys(x, {"tx", "offenders", "epoch", "restricted_until", "reason"}, path);
        econ::invalidation_record rec;
        rec.tx = get_u64(x, "tx", path);
        rec.offenders = get_u64_list(x, "offenders", path);
        rec.epoch = get_u64(x, "epoch", path);
        rec.restricted_until = get_u64(x, "restricted_until", path);
        rec.reason = get_str(x, "reason", path);
        r.announcements.push_back(std::move(rec));
    }
    for (const json& x : o.at("rejections")) {
        expect_keys(x, {"from_group", "to_group", "epoch", "reasons",
                        "required_rectifications", "signature"},
                    path);
        rejection_notice rec;
        rec.from_group = get_u64(x, "from_group", path);
        rec.to_group = get_u64(x, "to_group", path);
        rec.epoch = get_u64(x, "epoch", path);
        rec.reasons = get_str(x, "reasons", path);
        rec.required_rectifications = parse_actions(x, "required_rectifications", path);
        rec.sig = sig_from_hex(get_str(x, "signature", path), path);
        r.rejections_issued.push_back(std::move(rec));
    }
    for (const json& x : o.at("rectifications")) {
        expect_keys(x, {"group", "epoch", "notice", "actions", "note", "result_digests",
                        "signature"},
                    path);
        rectification_record rec;
        rec.group = get_u64(x, "group", path);
        rec.epoch = get_u64(x, "epoch", path);
        rec.notice = get_digest(x, "notice", path);
        rec.actions = parse_actions(x, "actions", path);
        rec.note = get_str(x, "note", path);
        rec.result_digests = get_digest_list(x, "result_digests", path);
        rec.sig = sig_from_hex(get_str(x, "signature", path), path);
        r.rectifications.push_back(std::move(rec));
    }
    for (const json& x : o.at("handovers")) {
        expect_keys(x, {"group", "epoch", "inventory", "old_cores", "new_cores", "signatures"},
                    path);
        handover_record rec;
        rec.group = get_u64(x, "group", path);
        rec.epoch = get_u64(x, "epoch", path);
        rec.inventory = get_digest_list(x, "inventory", path);
        rec.old_cores = get_u64_list(x, "old_cores", path);
        rec.new_cores = get_u64_list(x, "new_cores", path);
        rec.signatures = get_sig_map(x, "signatures", path);
        r.handovers.push_back(std::move(rec));
    }
    return r;
}

// ------------------------------------------------------------------
// Summaries, blocks, archives, snapshots

json summary_json(const group_summary& s) {
    return {{"group", s.group},
            {"epoch", s.epoch},
            {"revision", s.revision},
            {"hierarchy_digest", to_hex(s.hierarchy_digest)},
            {"backup_digest", to_hex(s.backup_digest)},
            {"summary_digest", to_hex(s.declared_digest)},
            {"report", report_json(s.report)},
            {"member_archive_hashes", digest_map_json(s.member_archive_hashes)},
            {"child_summary_hashes", digest_map_json(s.child_summary_hashes)},
            {"core_signatures", sig_map_json(s.core_signatures)}};
}

group_summary parse_summary_json(const json& o, const std::string& path) {
    expect_keys(o,
                {"group", "epoch", "revision", "hierarchy_digest", "backup_digest",
                 "summary_digest", "report", "member_archive_hashes", "child_summary_hashes",
                 "core_signatures"},
                path);
    group_summary s;
    s.group = get_u64(o, "group", path);
    s.epoch = get_u64(o, "epoch", path);
    s.revision = get_u32(o, "revision", path);
    s.hierarchy_digest = get_digest(o, "hierarchy_digest", path);
    s.backup_digest = get_digest(o, "backup_digest", path);
    s.declared_digest = get_digest(o, "summary_digest", path);
    s.report = parse_report(o.at("report"), path);
    s.member_archive_hashes = get_digest_map(o, "member_archive_hashes", path);
    s.child_summary_hashes = get_digest_map(o, "child_summary_hashes", path);
    s.core_signatures = get_sig_map(o, "core_signatures", path);
    return s;
}

json parse_text(const std::string& text, const std::string& path) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        bad(path, e.what());
    }
}

} // namespace

std::string render_block(const community_block& b) {
    json o = {{"height", b.height},
              {"prev_hash", to_hex(b.prev_hash)},
              {"summary_hash", to_hex(b.summary_hash)},
              {"finalized", b.finalized},
              {"finalize_epoch", b.finalize_epoch},
              {"top_summary", summary_json(b.top_summary)},
              {"top_signatures", sig_map_json(b.top_signatures)}};
    return o.dump();
}

std::string render_summary(const group_summary& s) { return summary_json(s).dump(); }

std::string render_archive(const node_archive& a) {
    json o = {{"node", a.node},
              {"epoch", a.epoch},
              {"prev_digest", to_hex(a.prev_digest)},
              {"record_digests", digest_array(a.record_digests)},
              {"signature", hex_of_sig(a.sig)}};
    return o.dump();
}

std::string render_snapshot(const snapshot_info& snap) {
    json groups = json::object();
    for (const auto& [gid, g] : snap.groups) {
        json go = {{"level", g.level},
                   {"members", u64_array(g.members)},
                   {"cores", u64_array(g.cores)},
                   {"children", u64_array(g.children)},
                   {"pending_merge", g.pending_merge},
                   {"pending_split", g.pending_split}};
        go["parent"] = g.parent ? json(*g.parent) : json(nullptr);
        groups[std::to_string(gid)] = std::move(go);
    }
    json nodes = json::object();
    for (const auto& [nid, n] : snap.nodes) {
        nodes[std::to_string(nid)] = {{"pk", hex_of_pk(n.pk)},
                                      {"join_epoch", n.join_epoch},
                                      {"status", n.status},
                                      {"restricted_until", n.restricted_until},
                                      {"memberships", u64_array(n.memberships)}};
    }
    json o = {{"epoch", snap.epoch}, {"groups", std::move(groups)}, {"nodes", std::move(nodes)}};
    return o.dump();
}

std::string render_backups(epoch_t epoch,
                           const std::map<group_id, std::vector<group_id>>& assignment) {
    json a = json::object();
    for (const auto& [g, holders] : assignment) a[std::to_string(g)] = u64_array(holders);
    json o = {{"epoch", epoch}, {"assignments", std::move(a)}};
    return o.dump();
}

community_block parse_block(const std::string& text, const std::string& path) {
    json o = parse_text(text, path);
    expect_keys(o,
                {"height", "prev_hash", "summary_hash", "finalized", "finalize_epoch",
                 "top_summary", "top_signatures"},
                path);
    community_block b;
    b.height = get_u64(o, "height", path);
    b.prev_hash = get_digest(o, "prev_hash", path);
    b.summary_hash = get_digest(o, "summary_hash", path);
    b.finalized = get_bool(o, "finalized", path);
    b.finalize_epoch = get_u64(o, "finalize_epoch", path);
    b.top_summary = parse_summary_json(o.at("top_summary"), path);
    b.top_signatures = get_sig_map(o, "top_signatures", path);
    return b;
}

group_summary parse_summary(const std::string& text, const std::string& path) {
    return parse_summary_json(parse_text(text, path), path);
}

node_archive parse_archive(const std::string& text, const std::string& path) {
    json o = parse_text(text, path);
    expect_keys(o, {"node", "epoch", "prev_digest", "record_digests", "signature"}, path);
    node_archive a;
    a.node = get_u64(o, "node", path);
    a.epoch = get_u64(o, "epoch", path);
    a.prev_digest = get_digest(o, "prev_digest", path);
    a.record_digests = get_digest_list(o, "record_digests", path);
    a.sig = sig_from_hex(get_str(o, "signature", path), path);
    return a;
}

snapshot_info parse_snapshot(const std::string& text, const std::string& path) {
    json o = parse_text(text, path);
    expect_keys(o, {"epoch", "groups", "nodes"}, path);
    snapshot_info snap;
    snap.epoch = get_u64(o, "epoch", path);
    const json& groups = o.at("groups");
    if (!groups.is_object()) bad(path, "'groups' is not an object");
    for (const auto& [key, v] : groups.items()) {
        expect_keys(v, {"level", "parent", "members", "cores", "children", "pending_merge",
                        "pending_split"},
                    path);
        snap_group g;
        std::uint64_t level = get_u64(v, "level", path);
        if (level == 0 || level > 16) bad(path, "group level out of range");
        g.level = static_cast<int>(level);
        if (!v.at("parent").is_null()) {
            if (!v.at("parent").is_number_unsigned()) bad(path, "'parent' is not unsigned");
            g.parent = v.at("parent").get<std::uint64_t>();
        }
        g.members = get_u64_list(v, "members", path);
        g.cores = get_u64_list(v, "cores", path);
        g.children = get_u64_list(v, "children", path);
        g.pending_merge = get_bool(v, "pending_merge", path);
        g.pending_split = get_bool(v, "pending_split", path);
        snap.groups[strict_u64(key, path)] = std::move(g);
    }
    if (snap.groups.size() != groups.size()) bad(path, "duplicate group keys");
    const json& nodes = o.at("nodes");
    if (!nodes.is_object()) bad(path, "'nodes' is not an object");
    for (const auto& [key, v] : nodes.items()) {
        expect_keys(v, {"pk", "join_epoch", "status", "restricted_until", "memberships"}, path);
        snap_node n;
        n.pk = pk_from_hex(get_str(v, "pk", path), path);
        n.join_epoch = get_u64(v, "join_epoch", path);
        n.status = get_u8(v, "status", path);
        if (n.status > 2) bad(path, "node status out of range");
        n.restricted_until = get_u64(v, "restricted_until", path);
        n.memberships = get_u64_list(v, "memberships", path);
        snap.nodes[strict_u64(key, path)] = std::move(n);
    }
    if (snap.nodes.size() != nodes.size()) bad(path, "duplicate node keys");
    return snap;
}

std::map<group_id, std::vector<group_id>> parse_backups(const std::string& text,
                                                        const std::string& path,
                                                        epoch_t& epoch_out) {
    json o = parse_text(text, path);
    expect_keys(o, {"epoch", "assignments"}, path);
    epoch_out = get_u64(o, "epoch", path);
    const json& a = o.at("assignments");
    if (!a.is_object()) bad(path, "'assignments' is not an object");
    std::map<group_id, std::vector<group_id>> out;
    for (const auto& [key, v] : a.items()) {
        if (!v.is_array()) bad(path, "assignment entry is not an array");
        std::vector<group_id> holders;
        for (const json& item : v) {
            if (!item.is_number_unsigned()) bad(path, "backup holder is not unsigned");
            holders.push_back(item.get<std::uint64_t>());
        }
        out[strict_u64(key, path)] = std::move(holders);
    }
    if (out.size() != a.size()) bad(path, "duplicate assignment keys");
    return out;
}

std::string block_path(std::uint64_t height) {
    return "chain/" + std::to_string(height) + ".block.json";
}
std::string summary_path(epoch_t epoch, group_id group) {
    return "archives/" + std::to_string(epoch) + "/" + std::to_string(group) + ".summary.json";
}
std::string archive_path(epoch_t epoch, node_id node) {
    return "archives/" + std::to_string(epoch) + "/" + std::to_string(node) + ".archive.json";
}
std::string snapshot_path(epoch_t epoch) {
    return "archives/" + std::to_string(epoch) + "/hierarchy.json";
}
std::string backups_path(epoch_t epoch) {
    return "archives/" + std::to_string(epoch) + "/backups.json";
}

file_map export_chain(const chain_bundle& chain) {
    file_map files;
    for (const auto& [h, b] : chain.blocks) files[block_path(h)] = render_block(b);
    for (const auto& [e, per_group] : chain.summaries) {
        for (const auto& [g, s] : per_group) files[summary_path(e, g)] = render_summary(s);
    }
    for (const auto& [e, per_node] : chain.archives) {
        for (const auto& [n, a] : per_node) files[archive_path(e, n)] = render_archive(a);
    }
    for (const auto& [e, snap] : chain.snapshots) files[snapshot_path(e)] = render_snapshot(snap);
    for (const auto& [e, a] : chain.backups) files[backups_path(e)] = render_backups(e, a);
    return files;
}

namespace {

struct path_parts {
    enum kind_t { block, summary, archive, snapshot, backups } kind;
    std::uint64_t epoch = 0; // or height
    std::uint64_t id = 0;    // group or node
};

path_parts classify(const std::string& path) {
    auto ends_with = [&](const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(),
                                                      suffix.size(), suffix) == 0;
    };
    path_parts out{};
    if (path.rfind("chain/", 0) == 0 && ends_with(path, ".block.json")) {
        std::string mid = path.substr(6, path.size() - 6 - 11);
        out.kind = path_parts::block;
        out.epoch = strict_u64(mid, path);
        return out;
    }
    if (path.rfind("archives/", 0) == 0) {
        std::size_t slash = path.find('/', 9);
        if (slash != std::string::npos) {
            out.epoch = strict_u64(path.substr(9, slash - 9), path);
            std::string rest = path.substr(slash + 1);
            if (rest == "hierarchy.json") {
                out.kind = path_parts::snapshot;
                return out;
            }
            if (rest == "backups.json") {
                out.kind = path_parts::backups;
                return out;
            }
            if (ends_with(rest, ".summary.json")) {
                out.kind = path_parts::summary;
                out.id = strict_u64(rest.substr(0, rest.size() - 13), path);
                return out;
            }
            if (ends_with(rest, ".archive.json")) {
                out.kind = path_parts::archive;
                out.id = strict_u64(rest.substr(0, rest.size() - 13), path);
                return out;
            }
        }
    }
    bad(path, "file does not belong to the chain layout");
}

} // namespace

void apply_file(chain_bundle& chain, const std::string& path, const std::string& text) {
    path_parts p = classify(path);
    switch (p.kind) {
    case path_parts::block: {
        auto b = parse_block(text, path);
        if (b.height != p.epoch) bad(path, "block height does not match its path");
        chain.blocks[p.epoch] = std::move(b);
        chain.index_block(p.epoch);
        break;
    }
    case path_parts::summary: {
        auto s = parse_summary(text, path);
        if (s.epoch != p.epoch || s.group != p.id) {
            bad(path, "summary group/epoch does not match its path");
        }
        chain.summaries[p.epoch][p.id] = std::move(s);
        chain.index_summary(p.epoch, p.id);
        break;
    }
    case path_parts::archive: {
        auto a = parse_archive(text, path);
        if (a.epoch != p.epoch || a.node != p.id) {
            bad(path, "archive node/epoch does not match its path");
        }
        chain.archives[p.epoch][p.id] = std::move(a);
        chain.index_archive(p.epoch, p.id);
        break;
    }
    case path_parts::snapshot: {
        auto snap = parse_snapshot(text, path);
        if (snap.epoch != p.epoch) bad(path, "snapshot epoch does not match its path");
        chain.snapshots[p.epoch] = std::move(snap);
        chain.index_snapshot(p.epoch);
        break;
    }
    case path_parts::backups: {
        epoch_t e = 0;
        auto a = parse_backups(text, path, e);
        if (e != p.epoch) bad(path, "backup epoch does not match its path");
        chain.backups[p.epoch] = std::move(a);
        chain.index_backups(p.epoch);
        break;
    }
    }
}

chain_bundle load_bundle(const file_map& files) {
    chain_bundle chain;
    for (const auto& [path, text] : files) apply_file(chain, path, text);
    return chain;
}

void write_dir(const file_map& files, const std::filesystem::path& root) {
    for (const auto& [rel, text] : files) {
        std::filesystem::path target = root / rel;
        std::filesystem::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) throw config_error("cannot write " + target.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
}

file_map read_dir(const std::filesystem::path& root) {
    file_map files;
    if (!std::filesystem::is_directory(root)) {
        throw config_error("chain directory not found: " + root.string());
    }
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::filesystem::path rel = std::filesystem::relative(entry.path(), root);
        std::ifstream in(entry.path(), std::ios::binary);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        files[rel.generic_string()] = std::move(text);
    }
    return files;
}

} // namespace politeia::chain_io
