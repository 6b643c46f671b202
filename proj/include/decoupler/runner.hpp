// runner.hpp - batch experiment tasks driven by ExperimentConfig
//
// Each run writes into one output directory:
//   config.resolved.json   the configuration with defaults filled in
//   *.csv                  plot-ready curves and tables
//   summary.json           fitted and derived quantities

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "decoupler/config.hpp"

namespace decoupler::cli {

struct RunOptions {
    std::filesystem::path out_dir;
    unsigned threads = 1;
};

struct RunReport {
    io::json summary;
    bool numerical_failure = false;  // e.g. a fit did not converge
    std::vector<std::string> warnings;
};

RunReport run_decay(const ExperimentConfig& cfg, const RunOptions& opts);
RunReport run_compare(const ExperimentConfig& cfg, const RunOptions& opts);
RunReport run_qpt(const ExperimentConfig& cfg, const RunOptions& opts);
RunReport run_scaling(const ExperimentConfig& cfg, const RunOptions& opts);

// Dispatches on cfg.task and writes config.resolved.json and summary.json.
RunReport run(const ExperimentConfig& cfg, const RunOptions& opts);

// Product of the ideal pulse rotations of `seq`.
Eigen::Matrix2cd ideal_unitary(const sequences::PulseSequence& seq);

} // namespace decoupler::cli
