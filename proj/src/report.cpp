#include "politeia/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace politeia::sim {

using nlohmann::json;

std::uint64_t gini_milli(std::vector<std::uint64_t> holdings) {
    std::sort(holdings.begin(), holdings.end());
    unsigned __int128 total = 0;
    unsigned __int128 weighted = 0;
    for (std::size_t i = 0; i < holdings.size(); ++i) {
        total += holdings[i];
        weighted += static_cast<unsigned __int128>(i + 1) * holdings[i];
    }
    if (total == 0) return 0;
    unsigned __int128 n = holdings.size();
    unsigned __int128 numer = (2 * weighted - (n + 1) * total) * 1000;
    return static_cast<std::uint64_t>(numer / (n * total));
}

namespace {

[[noreturn]] void log_fail(std::size_t line_no, const std::string& what) {
    throw config_error("event log line " + std::to_string(line_no) + ": " + what);
}

std::uint64_t milli(std::pair<std::uint64_t, std::uint64_t> ratio) {
    if (ratio.second == 0) return 0;
    return static_cast<std::uint64_t>(
        static_cast<unsigned __int128>(ratio.first) * 1000 / ratio.second);
}

} // namespace

run_report report_from_log(const std::string& jsonl) {
    run_report rep;
    std::map<epoch_t, epoch_metrics> per_epoch;
    std::map<node_id, epoch_t> first_fraud;

    std::istringstream in(jsonl);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            log_fail(line_no, std::string("not valid JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
            log_fail(line_no, "missing event kind");
        }
        const std::string kind = j.at("kind").get<std::string>();
        try {
            epoch_t e = j.value("epoch", epoch_t{0});
            epoch_metrics& m = per_epoch[e];
            m.epoch = e;
            if (kind == "epoch-end") {
                m.nodes = j.at("nodes").get<std::uint64_t>();
                for (const auto& [lv, cnt] : j.at("groups").items()) {
                    m.groups_by_level[std::stoi(lv)] = cnt.get<std::uint64_t>();
                }
                rep.total_minted = j.at("total_minted").get<std::uint64_t>();
                std::map<node_id, holding_row> rows;
                for (const auto& [n, v] : j.at("balances").items()) {
                    node_id id = std::stoull(n);
                    rows[id].balance = v.get<std::uint64_t>();
                }
                for (const auto& [n, v] : j.at("held").items()) {
                    node_id id = std::stoull(n);
                    rows[id].held = v.get<std::uint64_t>();
                }
                std::vector<std::uint64_t> spread;
                for (auto& [id, row] : rows) {
                    row.epoch = e;
                    row.node = id;
                    if (id != 0) spread.push_back(row.balance + row.held);
                    rep.holdings.push_back(row);
                }
                m.gini_milli = gini_milli(std::move(spread));
            } else if (kind == "tally") {
                if (j.at("adopted").get<bool>()) {
                    ++m.proposals_adopted;
                } else {
                    ++m.proposals_rejected;
                }
            } else if (kind == "reward-minted") {
                std::uint64_t amount = j.at("amount").get<std::uint64_t>();
                m.staters_minted += amount;
                rep.field_mints[j.at("field").get<std::string>()] += amount;
            } else if (kind == "achievement") {
                if (j.at("fraudulent").get<bool>()) {
                    ++m.fraud_attempts;
                    ++rep.fraud_attempts;
                    node_id n = j.at("node").get<std::uint64_t>();
                    if (!first_fraud.count(n)) first_fraud[n] = e;
                }
            } else if (kind == "verification-failed") {
                ++m.fraud_detections;
                ++rep.fraud_detections;
                node_id n = j.at("node").get<std::uint64_t>();
                auto it = first_fraud.find(n);
                if (it != first_fraud.end() && e >= it->second) {
                    rep.latency_epoch_sum += e - it->second;
                    ++rep.latency_count;
                }
            } else if (kind == "rejection") {
                ++m.rejections;
            } else if (kind == "rectification") {
                ++m.rectifications;
            } else if (kind == "reputation") {
                reputation_row row;
                row.epoch = e;
                row.node = j.at("node").get<std::uint64_t>();
                row.composite = {j.at("composite_num").get<std::uint64_t>(),
                                 j.at("composite_den").get<std::uint64_t>()};
                for (const auto& [name, ratio] : j.at("means").items()) {
                    row.means[name] = {ratio.at(0).get<std::uint64_t>(),
                                       ratio.at(1).get<std::uint64_t>()};
                }
                rep.reputation.push_back(std::move(row));
            } else if (kind == "verify-result") {
                rep.verify_ok = j.at("ok").get<bool>();
                rep.verify_detail = j.at("detail").get<std::string>();
                per_epoch.erase(e); // terminal marker, not a simulated epoch
            }
        } catch (const json::exception& e) {
            log_fail(line_no, std::string("unexpected shape: ") + e.what());
        }
    }
    for (auto& [e, m] : per_epoch) rep.epochs.push_back(std::move(m));
    return rep;
}

std::string report_json(const run_report& r) {
    json epochs = json::array();
    for (const auto& m : r.epochs) {
        json levels = json::object();
        for (const auto& [lv, cnt] : m.groups_by_level) levels[std::to_string(lv)] = cnt;
        epochs.push_back({{"epoch", m.epoch},
                          {"nodes", m.nodes},
                          {"groups_by_level", std::move(levels)},
                          {"proposals_adopted", m.proposals_adopted},
                          {"proposals_rejected", m.proposals_rejected},
                          {"staters_minted", m.staters_minted},
                          {"gini_milli", m.gini_milli},
                          {"fraud_attempts", m.fraud_attempts},
                          {"fraud_detections", m.fraud_detections},
                          {"rejections", m.rejections},
                          {"rectifications", m.rectifications}});
    }
    json fields = json::object();
    for (const auto& [f, v] : r.field_mints) fields[f] = v;
    json reputation = json::array();
    for (const auto& row : r.reputation) {
        json means = json::object();
        for (const auto& [name, ratio] : row.means) {
            means[name] = json::array({ratio.first, ratio.second});
        }
        reputation.push_back({{"epoch", row.epoch},
                              {"node", row.node},
                              {"means", std::move(means)},
                              {"composite", json::array({row.composite.first,
                                                         row.composite.second})}});
    }
    json holdings = json::array();
    for (const auto& row : r.holdings) {
        holdings.push_back({{"epoch", row.epoch}, {"node", row.node},
                            {"balance", row.balance}, {"held", row.held}});
    }
    std::uint64_t latency_mean_milli =
        r.latency_count == 0 ? 0 : r.latency_epoch_sum * 1000 / r.latency_count;
    json out{{"epochs", std::move(epochs)},
             {"field_mints", std::move(fields)},
             {"fraud", {{"attempts", r.fraud_attempts},
                        {"detections", r.fraud_detections},
                        {"latency_mean_milli", latency_mean_milli}}},
             {"reputation", std::move(reputation)},
             {"holdings", std::move(holdings)},
             {"total_minted", r.total_minted},
             {"verify", {{"ok", r.verify_ok}, {"detail", r.verify_detail}}}};
    return out.dump(2) + "\n";
}

std::string report_csv(const run_report& r) {
    std::ostringstream out;
    out << "# epochs\n"
        << "epoch,nodes,proposals_adopted,proposals_rejected,staters_minted,"
           "gini_milli,fraud_attempts,fraud_detections,rejections,rectifications\n";
    for (const auto& m : r.epochs) {
        out << m.epoch << ',' << m.nodes << ',' << m.proposals_adopted << ','
            << m.proposals_rejected << ',' << m.staters_minted << ',' << m.gini_milli << ','
            << m.fraud_attempts << ',' << m.fraud_detections << ',' << m.rejections << ','
            << m.rectifications << '\n';
    }
    out << "# groups\nepoch,level,count\n";
    for (const auto& m : r.epochs) {
        for (const auto& [lv, cnt] : m.groups_by_level) {
            out << m.epoch << ',' << lv << ',' << cnt << '\n';
        }
    }
    out << "# reputation\nepoch,node";
    std::vector<std::string> dims;
    if (!r.reputation.empty()) {
        for (const auto& [name, ratio] : r.reputation.front().means) dims.push_back(name);
    }
    for (const auto& d : dims) out << ',' << d << "_milli";
    out << ",composite_milli\n";
    for (const auto& row : r.reputation) {
        out << row.epoch << ',' << row.node;
        for (const auto& d : dims) {
            auto it = row.means.find(d);
            out << ',' << (it == row.means.end() ? 0 : milli(it->second));
        }
        out << ',' << milli(row.composite) << '\n';
    }
    out << "# holdings\nepoch,node,balance,held\n";
    for (const auto& row : r.holdings) {
        out << row.epoch << ',' << row.node << ',' << row.balance << ',' << row.held << '\n';
    }
    out << "# field_mints\nfield,minted\n";
    for (const auto& [f, v] : r.field_mints) out << f << ',' << v << '\n';
    std::uint64_t latency_mean_milli =
        r.latency_count == 0 ? 0 : r.latency_epoch_sum * 1000 / r.latency_count;
    out << "# summary\ntotal_minted,fraud_attempts,fraud_detections,latency_mean_milli,"
           "verify_ok\n"
        << r.total_minted << ',' << r.fraud_attempts << ',' << r.fraud_detections << ','
        << latency_mean_milli << ',' << (r.verify_ok ? "true" : "false") << '\n';
    return out.str();
}

} // namespace politeia::sim
