#pragma once

// Post-run analytics over the JSONL event log. Everything here is
// recomputable from the log alone: the simulator never feeds the report
// state the log does not carry.

#include "politeia/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace politeia::sim {

struct epoch_metrics {
    epoch_t epoch = 0;
    std::uint64_t nodes = 0;
    std::map<int, std::uint64_t> groups_by_level;
    std::uint64_t proposals_adopted = 0;
    std::uint64_t proposals_rejected = 0;
    std::uint64_t staters_minted = 0;
    std::uint64_t gini_milli = 0; // holdings inequality, treasury excluded
    std::uint64_t fraud_attempts = 0;
    std::uint64_t fraud_detections = 0;
    std::uint64_t rejections = 0;
    std::uint64_t rectifications = 0;
};

// Exact per-dimension means straight from the log; renderers round.
struct reputation_row {
    epoch_t epoch = 0;
    node_id node = 0;
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> means;
    std::pair<std::uint64_t, std::uint64_t> composite{5, 1};
};

struct holding_row {
    epoch_t epoch = 0;
    node_id node = 0;
    std::uint64_t balance = 0;
    std::uint64_t held = 0;
};

struct run_report {
    std::vector<epoch_metrics> epochs;
    std::map<std::string, std::uint64_t> field_mints;
    std::uint64_t total_minted = 0;
    std::uint64_t fraud_attempts = 0;
    std::uint64_t fraud_detections = 0;
    std::uint64_t latency_epoch_sum = 0; // publication to exposure, summed
    std::uint64_t latency_count = 0;
    bool verify_ok = false;
    std::string verify_detail;
    std::vector<reputation_row> reputation;
    std::vector<holding_row> holdings;
};

// Gini coefficient in per-mille, computed exactly and rounded down.
// An empty or all-zero distribution scores 0.
std::uint64_t gini_milli(std::vector<std::uint64_t> holdings);

// Throws config_error on malformed log lines.
run_report report_from_log(const std::string& jsonl);

std::string report_json(const run_report& r);
std::string report_csv(const run_report& r);

} // namespace politeia::sim
