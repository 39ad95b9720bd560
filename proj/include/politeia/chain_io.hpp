#pragma once

// JSON export and import of the chain directory layout:
//   chain/<height>.block.json
//   archives/<epoch>/<group>.summary.json
//   archives/<epoch>/<node>.archive.json
//   archives/<epoch>/hierarchy.json
//   archives/<epoch>/backups.json
//
// The JSON files are renderings only. Digests and signatures are always
// recomputed from the canonical binary encoding of the parsed content, so
// the importer is strict: exact key sets, unsigned integers, lowercase
// hex, and path-content agreement. Anything else is a parse failure, which
// a verifier treats the same as a broken digest.

#include "politeia/ledger.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace politeia::chain_io {

// Import failure carrying the offending file path.
struct chain_parse_error : std::runtime_error {
    std::string path;

    chain_parse_error(std::string p, const std::string& what)
        : std::runtime_error(p + ": " + what), path(std::move(p)) {}
};

// Relative path -> file bytes. The unit tests and the tamper harness work
// on this in-memory form; the CLI maps it to a real directory.
using file_map = std::map<std::string, std::string>;

std::string render_block(const ledger::community_block& b);
std::string render_summary(const ledger::group_summary& s);
std::string render_archive(const ledger::node_archive& a);
std::string render_snapshot(const ledger::snapshot_info& snap);
std::string render_backups(epoch_t epoch,
                           const std::map<group_id, std::vector<group_id>>& assignment);

ledger::community_block parse_block(const std::string& text, const std::string& path);
ledger::group_summary parse_summary(const std::string& text, const std::string& path);
ledger::node_archive parse_archive(const std::string& text, const std::string& path);
ledger::snapshot_info parse_snapshot(const std::string& text, const std::string& path);
std::map<group_id, std::vector<group_id>> parse_backups(const std::string& text,
                                                        const std::string& path,
                                                        epoch_t& epoch_out);

std::string block_path(std::uint64_t height);
std::string summary_path(epoch_t epoch, group_id group);
std::string archive_path(epoch_t epoch, node_id node);
std::string snapshot_path(epoch_t epoch);
std::string backups_path(epoch_t epoch);

// Renders every entry of the bundle into its layout path.
file_map export_chain(const ledger::chain_bundle& chain);

// Parses a whole exported directory image. Throws chain_parse_error on the
// first malformed file. The resulting bundle has all digests indexed.
ledger::chain_bundle load_bundle(const file_map& files);

// Re-parses a single file into an existing bundle, refreshing only the
// digests that file feeds. Lets a tamper harness re-verify a 200-epoch
// chain per mutation without re-parsing thousands of files.
void apply_file(ledger::chain_bundle& chain, const std::string& path, const std::string& text);

void write_dir(const file_map& files, const std::filesystem::path& root);
file_map read_dir(const std::filesystem::path& root);

} // namespace politeia::chain_io
