#include "politeia/chain_io.hpp"
#include "politeia/harness.hpp"
#include "politeia/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace politeia;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kVerifyError = 2;
constexpr int kScenarioError = 3;

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot write " + path.string());
    out << text;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    auto cfg = sim::config_from_json(slurp(config_path));
    auto result = sim::run_scenario(cfg);

    std::filesystem::path root(out_dir);
    std::filesystem::create_directories(root);
    spill(root / "events.jsonl", result.event_log);
    chain_io::write_dir(chain_io::export_chain(result.chain), root);
    spill(root / "report.json", sim::report_json(sim::report_from_log(result.event_log)));

    std::cout << "run complete: " << cfg.epochs << " epochs, " << result.block_digests.size()
              << " blocks, " << result.total_minted << " staters minted\n";
    if (!result.verify_ok) {
        std::cerr << "chain verification failed: " << result.verify_detail << '\n';
        return kVerifyError;
    }
    std::cout << "chain verification: ok\n";
    return kOk;
}

// A run directory holds events.jsonl and report.json next to the chain
// layout; only chain/ and archives/ carry verifiable content.
chain_io::file_map chain_files(chain_io::file_map files) {
    chain_io::file_map out;
    for (auto& [path, text] : files) {
        if (path.starts_with("chain/") || path.starts_with("archives/")) {
            out.emplace(path, std::move(text));
        }
    }
    return out;
}

int cmd_verify(const std::string& chain_dir, const ledger::ledger_config& lcfg) {
    auto bundle = chain_io::load_bundle(chain_files(chain_io::read_dir(chain_dir)));
    auto violation = ledger::verify_chain(bundle, lcfg);
    if (violation) {
        std::cout << violation->to_string() << '\n';
        return kVerifyError;
    }
    std::cout << "ok\n";
    return kOk;
}

int cmd_report(const std::string& log_path, bool csv) {
    auto report = sim::report_from_log(slurp(log_path));
    std::cout << (csv ? sim::report_csv(report) : sim::report_json(report));
    return kOk;
}

int cmd_inspect(const std::string& chain_dir, epoch_t epoch) {
    auto bundle = chain_io::load_bundle(chain_files(chain_io::read_dir(chain_dir)));
    auto bit = bundle.blocks.find(epoch);
    if (bit == bundle.blocks.end()) {
        std::cerr << "no block at height " << epoch << '\n';
        return kConfigError;
    }
    const auto& block = bit->second;
    std::cout << "block " << epoch << '\n'
              << "  prev_hash      " << to_hex(block.prev_hash) << '\n'
              << "  summary_hash   " << to_hex(block.summary_hash) << '\n'
              << "  finalized      " << (block.finalized ? "yes" : "no");
    if (block.finalized) std::cout << " (epoch " << block.finalize_epoch << ")";
    std::cout << '\n'
              << "  top group      " << block.top_summary.group << ", "
              << block.top_signatures.size() << " signature(s)\n";

    const auto& snap = bundle.snapshots.at(epoch);
    std::cout << "  nodes          " << snap.nodes.size() << '\n';
    for (const auto& [g, summary] : bundle.summaries.at(epoch)) {
        const auto& sg = snap.groups.at(g);
        const auto& rep = summary.report;
        std::cout << "  group " << g << " (level " << sg.level << ", rev " << summary.revision
                  << "): " << sg.members.size() << " members, " << sg.children.size()
                  << " children";
        if (!rep.elections.empty()) std::cout << ", " << rep.elections.size() << " election(s)";
        if (!rep.outcomes.empty()) std::cout << ", " << rep.outcomes.size() << " outcome(s)";
        if (!rep.confirmed_transactions.empty()) {
            std::cout << ", " << rep.confirmed_transactions.size() << " tx";
        }
        if (!rep.reward_cases.empty()) std::cout << ", " << rep.reward_cases.size() << " reward(s)";
        if (!rep.rejections_issued.empty()) {
            std::cout << ", " << rep.rejections_issued.size() << " rejection(s)";
        }
        if (!rep.rectifications.empty()) {
            std::cout << ", " << rep.rectifications.size() << " rectification(s)";
        }
        std::cout << '\n';
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bit-politeia community protocol simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "execute a scenario and export its chain");
    run->add_option("--config", config_path, "scenario config JSON")->required();
    run->add_option("--out", out_dir, "output directory")->required();

    std::string chain_dir;
    ledger::ledger_config lcfg;
    auto* verify = app.add_subcommand("verify", "verify an exported chain directory");
    verify->add_option("--chain", chain_dir, "chain directory")->required();
    verify->add_option("--finality-window", lcfg.finality_window, "expected finality window");
    verify->add_option("--backup-count", lcfg.backup_count, "expected cross-backup count");
    verify->add_option("--max-retry", lcfg.max_retry, "rectification retry bound");

    std::string log_path;
    bool as_csv = false;
    bool as_json = false;
    auto* report = app.add_subcommand("report", "summarize an event log");
    report->add_option("--log", log_path, "events.jsonl path")->required();
    auto* csv_flag = report->add_flag("--csv", as_csv, "render CSV tables");
    report->add_flag("--json", as_json, "render JSON (default)")->excludes(csv_flag);

    std::string inspect_dir;
    epoch_t inspect_epoch = 0;
    auto* inspect = app.add_subcommand("inspect", "show one epoch of an exported chain");
    inspect->add_option("--chain", inspect_dir, "chain directory")->required();
    inspect->add_option("--epoch", inspect_epoch, "epoch / block height")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, out_dir);
        if (verify->parsed()) return cmd_verify(chain_dir, lcfg);
        if (report->parsed()) return cmd_report(log_path, as_csv);
        if (inspect->parsed()) return cmd_inspect(inspect_dir, inspect_epoch);
        return kConfigError;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    } catch (const chain_io::chain_parse_error& e) {
        std::cerr << "chain parse error: " << e.what() << '\n';
        return kVerifyError;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const sim::scenario_error& e) {
        std::cerr << "scenario error: " << e.what() << '\n';
        return kScenarioError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kScenarioError;
    }
}
