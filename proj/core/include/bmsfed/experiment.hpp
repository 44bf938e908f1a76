#pragma once

#include <string>
#include <vector>

#include "bmsfed/config.hpp"
#include "bmsfed/federation.hpp"

namespace bmsfed {

struct RunResult {
  ExperimentConfig config;
  std::vector<RoundMetrics> rounds;

  const RoundMetrics& final_round() const { return rounds.back(); }
};

/// Executes the bootstrap plus rounds-1 selection rounds. Pure given the
/// config: all randomness flows from the seed through named streams.
RunResult run_experiment(const ExperimentConfig& cfg);

/// One row per round, 6-decimal fixed formatting, locale independent.
std::string metrics_csv(const RunResult& result);

/// Flat JSON with final-round and best-round metrics.
std::string summary_json(const RunResult& result);

/// Writes metrics.csv and summary.json under out_dir (created if needed).
void write_run_outputs(const RunResult& result, const std::string& out_dir);

struct MethodSummary {
  std::string method;
  double acc_multi_median{0.0};
  double acc_multi_iqr{0.0};
  double acc_uni_a_median{0.0};
  double acc_uni_a_iqr{0.0};
  double acc_uni_i_median{0.0};
  double acc_uni_i_iqr{0.0};
};

/// Runs every config across every seed and summarizes final-round accuracies
/// with medians and interquartile ranges. Configs must agree on everything
/// but the method and its method-specific keys.
std::vector<MethodSummary> compare_methods(
    const std::vector<ExperimentConfig>& configs,
    const std::vector<std::uint64_t>& seeds);

std::string comparison_csv(const std::vector<MethodSummary>& rows);

/// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace bmsfed
