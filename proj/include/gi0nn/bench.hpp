#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gi0nn/estimators.hpp"
#include "gi0nn/types.hpp"

namespace gi0nn {

struct EstimatorSpec {
  enum class Kind { Lcum, MlePaper, MleRobust, Nn };
  Kind kind = Kind::Lcum;
  std::string label;       // name used in exported tables
  std::string model_path;  // Nn only

  // Parses "lcum", "mle-paper", "mle-robust" or "nn:<model path>".
  static EstimatorSpec parse(const std::string& token);
};

// Monte Carlo comparison grid; defaults reproduce the evaluation setup.
struct BenchConfig {
  std::vector<double> alphas{-1.5, -7.0, -15.0};
  std::vector<int> looks{1, 3, 8};
  std::vector<Index> sizes{9, 25, 49, 121, 1000};
  int trials = 1000;
  std::uint64_t seed = 1;
  std::vector<EstimatorSpec> estimators;
};

struct CellStats {
  std::optional<double> mse;  // over successful trials; absent if none
  double failure_rate_percent = 0.0;
  double mean_elapsed_seconds = 0.0;
  int trials = 0;
  int successes = 0;
  int out_of_range = 0;
  int no_convergence = 0;
  int degenerate_input = 0;
};

struct BenchRow {
  std::string estimator;
  double alpha = 0.0;
  int looks = 1;
  Index size = 0;
  CellStats stats;
};

struct BenchResult {
  std::vector<BenchRow> rows;
};

// Runs the full grid. Within a trial every estimator sees the same draw;
// cells use split streams so results are independent of scheduling.
BenchResult run_bench(const BenchConfig& config);

// mse.csv, failure_rates.csv, timing.csv (header `estimator,alpha,L,n,value`,
// absent MSE written as an empty field) plus status_counts.csv so results
// round-trip losslessly.
void export_tables(const BenchResult& result, const std::filesystem::path& dir);
BenchResult import_tables(const std::filesystem::path& dir);

// Human-readable summary grouped by (alpha, L, n).
std::string summarize(const BenchResult& result);

}  // namespace gi0nn
