#include "gi0nn/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "gi0nn/errors.hpp"

namespace gi0nn {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Cell {
  double alpha;
  int looks;
  Index size;
};

EstimationOutcome run_estimator(const EstimatorSpec& spec, const MlpModel* model,
                                const Array& sample, int looks) {
  switch (spec.kind) {
    case EstimatorSpec::Kind::Lcum:
      return estimate_lcum(sample, looks);
    case EstimatorSpec::Kind::MlePaper:
      return estimate_mle(sample, looks, MleMode::PaperFaithful);
    case EstimatorSpec::Kind::MleRobust:
      return estimate_mle(sample, looks, MleMode::Robust);
    case EstimatorSpec::Kind::Nn:
      return estimate_nn(*model, sample);
  }
  throw std::logic_error("run_estimator: unknown estimator kind");
}

}  // namespace

EstimatorSpec EstimatorSpec::parse(const std::string& token) {
  EstimatorSpec spec;
  spec.label = token;
  if (token == "lcum") {
    spec.kind = Kind::Lcum;
  } else if (token == "mle-paper") {
    spec.kind = Kind::MlePaper;
  } else if (token == "mle-robust") {
    spec.kind = Kind::MleRobust;
  } else if (token.rfind("nn:", 0) == 0 && token.size() > 3) {
    spec.kind = Kind::Nn;
    spec.model_path = token.substr(3);
  } else {
    throw std::invalid_argument(
        "unknown estimator '" + token +
        "' (expected lcum | mle-paper | mle-robust | nn:<model>)");
  }
  return spec;
}

BenchResult run_bench(const BenchConfig& config) {
  if (config.trials < 1) throw std::invalid_argument("run_bench: trials must be >= 1");
  for (double alpha : config.alphas) {
    if (!(alpha >= kAlphaMin && alpha <= kAlphaGenCeiling)) {
      throw std::invalid_argument("run_bench: alpha outside generation bounds");
    }
  }

  // Surface model problems before any trial runs.
  std::vector<MlpModel> models(config.estimators.size());
  for (std::size_t e = 0; e < config.estimators.size(); ++e) {
    if (config.estimators[e].kind == EstimatorSpec::Kind::Nn) {
      models[e] = load_model(config.estimators[e].model_path);
    }
  }

  std::vector<Cell> cells;
  for (double alpha : config.alphas) {
    for (int looks : config.looks) {
      for (Index size : config.sizes) {
        cells.push_back(Cell{alpha, looks, size});
      }
    }
  }

  const RngStream root(config.seed);
  const std::size_t n_estimators = config.estimators.size();
  // stats[cell][estimator]
  std::vector<std::vector<CellStats>> stats(cells.size(),
                                            std::vector<CellStats>(n_estimators));
  std::vector<std::vector<double>> sse(cells.size(), std::vector<double>(n_estimators, 0.0));
  std::vector<std::vector<double>> elapsed(cells.size(),
                                           std::vector<double>(n_estimators, 0.0));

  auto run_cell = [&](std::size_t ci) {
    const Cell& cell = cells[ci];
    const Gi0Params law{cell.alpha, tie_gamma(cell.alpha), cell.looks};
    RngStream cell_stream = root.split(ci);
    // Every estimator sees the exact same draws; one pass per estimator
    // keeps the per-estimate timings in steady state instead of charging
    // whoever runs first with the trial's cache and allocator faults.
    std::vector<Array> samples;
    samples.reserve(config.trials);
    for (int trial = 0; trial < config.trials; ++trial) {
      RngStream trial_stream = cell_stream.split(static_cast<std::uint64_t>(trial));
      samples.push_back(gi0_sample(trial_stream, law, cell.size).values);
    }
    for (std::size_t e = 0; e < n_estimators; ++e) {
      (void)run_estimator(config.estimators[e], &models[e], samples[0], cell.looks);
      for (int trial = 0; trial < config.trials; ++trial) {
        const EstimationOutcome outcome = run_estimator(config.estimators[e], &models[e],
                                                        samples[trial], cell.looks);
        CellStats& s = stats[ci][e];
        s.trials += 1;
        elapsed[ci][e] += outcome.elapsed_seconds;
        switch (outcome.status) {
          case EstimateStatus::Success:
            s.successes += 1;
            sse[ci][e] += (*outcome.alpha_hat - cell.alpha) * (*outcome.alpha_hat - cell.alpha);
            break;
          case EstimateStatus::OutOfRange:
            s.out_of_range += 1;
            break;
          case EstimateStatus::NoConvergence:
            s.no_convergence += 1;
            break;
          case EstimateStatus::DegenerateInput:
            s.degenerate_input += 1;
            break;
        }
      }
    }
  };

  // Cells are independent; split streams make the outcome identical
  // whatever the thread layout.
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers = std::min<std::size_t>(hw, cells.size());
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t ci = w; ci < cells.size(); ci += n_workers) run_cell(ci);
    });
  }
  for (std::thread& t : workers) t.join();

  BenchResult result;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    for (std::size_t e = 0; e < n_estimators; ++e) {
      BenchRow row;
      row.estimator = config.estimators[e].label;
      row.alpha = cells[ci].alpha;
      row.looks = cells[ci].looks;
      row.size = cells[ci].size;
      row.stats = stats[ci][e];
      if (row.stats.successes > 0) {
        row.stats.mse = sse[ci][e] / static_cast<double>(row.stats.successes);
      }
      row.stats.failure_rate_percent =
          100.0 * static_cast<double>(row.stats.trials - row.stats.successes) /
          static_cast<double>(row.stats.trials);
      row.stats.mean_elapsed_seconds = elapsed[ci][e] / static_cast<double>(row.stats.trials);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

namespace {

void write_metric_csv(const BenchResult& result, const std::filesystem::path& path,
                      double (*metric)(const CellStats&), bool skip_absent_mse) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "estimator,alpha,L,n,value\n";
  for (const BenchRow& row : result.rows) {
    out << row.estimator << ',' << format_double(row.alpha) << ',' << row.looks << ','
        << row.size << ',';
    if (skip_absent_mse && !row.stats.mse.has_value()) {
      out << '\n';
    } else {
      out << format_double(metric(row.stats)) << '\n';
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

struct CsvRow {
  std::string estimator;
  double alpha;
  int looks;
  Index size;
  std::optional<double> value;
};

std::vector<CsvRow> read_metric_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "estimator,alpha,L,n,value") {
    throw FormatError(path.string() + ": bad header");
  }
  std::vector<CsvRow> rows;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 5) {
      throw FormatError(path.string() + " line " + std::to_string(line_number) +
                        ": expected 5 fields");
    }
    CsvRow row;
    row.estimator = fields[0];
    row.alpha = std::stod(fields[1]);
    row.looks = std::stoi(fields[2]);
    row.size = std::stoll(fields[3]);
    if (!fields[4].empty()) row.value = std::stod(fields[4]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void export_tables(const BenchResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_metric_csv(result, dir / "mse.csv",
                   [](const CellStats& s) { return s.mse.value_or(0.0); }, true);
  write_metric_csv(result, dir / "failure_rates.csv",
                   [](const CellStats& s) { return s.failure_rate_percent; }, false);
  write_metric_csv(result, dir / "timing.csv",
                   [](const CellStats& s) { return s.mean_elapsed_seconds; }, false);

  std::ofstream counts(dir / "status_counts.csv", std::ios::binary);
  if (!counts) throw FormatError("cannot open status_counts.csv for writing");
  counts << "estimator,alpha,L,n,success,out_of_range,no_convergence,degenerate_input\n";
  for (const BenchRow& row : result.rows) {
    counts << row.estimator << ',' << format_double(row.alpha) << ',' << row.looks << ','
           << row.size << ',' << row.stats.successes << ',' << row.stats.out_of_range
           << ',' << row.stats.no_convergence << ',' << row.stats.degenerate_input
           << '\n';
  }
  if (!counts) throw FormatError("write failed for status_counts.csv");
}

BenchResult import_tables(const std::filesystem::path& dir) {
  const auto mse = read_metric_csv(dir / "mse.csv");
  const auto failures = read_metric_csv(dir / "failure_rates.csv");
  const auto timing = read_metric_csv(dir / "timing.csv");
  if (mse.size() != failures.size() || mse.size() != timing.size()) {
    throw FormatError("bench tables disagree on row count");
  }

  std::ifstream counts_file(dir / "status_counts.csv", std::ios::binary);
  if (!counts_file) throw FormatError("cannot open status_counts.csv");
  std::string line;
  std::getline(counts_file, line);
  if (line != "estimator,alpha,L,n,success,out_of_range,no_convergence,degenerate_input") {
    throw FormatError("status_counts.csv: bad header");
  }

  BenchResult result;
  for (std::size_t i = 0; i < mse.size(); ++i) {
    BenchRow row;
    row.estimator = mse[i].estimator;
    row.alpha = mse[i].alpha;
    row.looks = mse[i].looks;
    row.size = mse[i].size;
    row.stats.mse = mse[i].value;
    row.stats.failure_rate_percent = failures[i].value.value_or(0.0);
    row.stats.mean_elapsed_seconds = timing[i].value.value_or(0.0);
    if (!std::getline(counts_file, line)) {
      throw FormatError("status_counts.csv: truncated");
    }
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) throw FormatError("status_counts.csv: expected 8 fields");
    row.stats.successes = std::stoi(fields[4]);
    row.stats.out_of_range = std::stoi(fields[5]);
    row.stats.no_convergence = std::stoi(fields[6]);
    row.stats.degenerate_input = std::stoi(fields[7]);
    row.stats.trials = row.stats.successes + row.stats.out_of_range +
                       row.stats.no_convergence + row.stats.degenerate_input;
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string summarize(const BenchResult& result) {
  std::ostringstream out;
  out << "estimator            alpha    L      n        mse   fail%   mean_ms\n";
  for (const BenchRow& row : result.rows) {
    char mse_text[24];
    if (row.stats.mse) {
      std::snprintf(mse_text, sizeof(mse_text), "%10.4g", *row.stats.mse);
    } else {
      std::snprintf(mse_text, sizeof(mse_text), "%10s", "-");
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-20s %6.2f %4d %6lld %s %7.2f %9.4f\n",
                  row.estimator.c_str(), row.alpha, row.looks,
                  static_cast<long long>(row.size), mse_text,
                  row.stats.failure_rate_percent,
                  row.stats.mean_elapsed_seconds * 1e3);
    out << buf;
  }
  return out.str();
}

}  // namespace gi0nn
