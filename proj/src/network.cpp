#include "gi0nn/network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gi0nn/crc32.hpp"
#include "gi0nn/errors.hpp"
#include "gi0nn/special_functions.hpp"

namespace gi0nn {

namespace {

constexpr Index kConvChunk = 1 << 16;  // columns per inference block

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double xavier_limit(Index fan_in, Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void check_consistent(const MlpModel& model) {
  if (model.weights.empty() || model.weights.size() != model.biases.size()) {
    throw std::invalid_argument("MlpModel: weight/bias layer count mismatch");
  }
  for (std::size_t q = 0; q < model.weights.size(); ++q) {
    if (model.biases[q].size() != model.weights[q].rows()) {
      throw std::invalid_argument("MlpModel: bias length mismatch at layer " +
                                  std::to_string(q));
    }
    if (q + 1 < model.weights.size() &&
        model.weights[q + 1].cols() != model.weights[q].rows()) {
      throw std::invalid_argument("MlpModel: layer size mismatch at layer " +
                                  std::to_string(q));
    }
  }
}

struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = inputs
};

RowVector forward_with_cache(const MlpModel& model, const Matrix& inputs,
                             ForwardCache* cache) {
  const std::size_t layers = model.weights.size();
  Matrix current = inputs;
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(current);
  }
  for (std::size_t q = 0; q < layers; ++q) {
    Matrix z = model.weights[q] * current;
    z.colwise() += model.biases[q];
    if (q + 1 < layers) {
      current = z.array().tanh().matrix();
      if (cache) cache->activations.push_back(current);
    } else {
      current = std::move(z);
    }
  }
  return current.row(0);
}

void shuffle_indices(RngStream& stream, std::vector<Index>& order) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[stream.next_below(i)]);
  }
}

}  // namespace

std::vector<Index> MlpModel::layer_sizes() const {
  std::vector<Index> sizes;
  if (weights.empty()) return sizes;
  sizes.push_back(weights.front().cols());
  for (const Matrix& w : weights) sizes.push_back(w.rows());
  return sizes;
}

Index MlpModel::parameter_count() const {
  Index n = 0;
  for (const Matrix& w : weights) n += w.size();
  for (const Vector& b : biases) n += b.size();
  return n;
}

MlpModel make_mlp(int input_moments, RngStream& stream) {
  if (input_moments < 1) throw std::invalid_argument("make_mlp: input_moments < 1");
  const std::vector<Index> sizes = {input_moments, 8, 4, 1};
  MlpModel model;
  model.meta.input_moments = input_moments;
  for (std::size_t q = 0; q + 1 < sizes.size(); ++q) {
    const Index fan_in = sizes[q];
    const Index fan_out = sizes[q + 1];
    const double limit = xavier_limit(fan_in, fan_out);
    Matrix w(fan_out, fan_in);
    for (Index r = 0; r < fan_out; ++r) {
      for (Index c = 0; c < fan_in; ++c) {
        w(r, c) = (2.0 * stream.next_double() - 1.0) * limit;
      }
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(fan_out));
  }
  return model;
}

double mlp_forward(const MlpModel& model, const Vector& input) {
  check_consistent(model);
  if (input.size() != model.input_size()) {
    throw std::invalid_argument("mlp_forward: input length mismatch");
  }
  Vector current = input;
  const std::size_t layers = model.weights.size();
  for (std::size_t q = 0; q < layers; ++q) {
    Vector z = model.weights[q] * current + model.biases[q];
    current = (q + 1 < layers) ? Vector(z.array().tanh()) : std::move(z);
  }
  return current[0];
}

RowVector mlp_forward_batch(const MlpModel& model, const Matrix& inputs) {
  check_consistent(model);
  if (inputs.rows() != model.input_size()) {
    throw std::invalid_argument("mlp_forward_batch: input row count mismatch");
  }
  return forward_with_cache(model, inputs, nullptr);
}

std::pair<double, MlpGradients> mlp_backward(const MlpModel& model,
                                             const Matrix& inputs,
                                             const RowVector& targets) {
  check_consistent(model);
  if (inputs.cols() == 0) throw std::invalid_argument("mlp_backward: empty batch");
  if (inputs.rows() != model.input_size() || targets.size() != inputs.cols()) {
    throw std::invalid_argument("mlp_backward: batch dimension mismatch");
  }
  const std::size_t layers = model.weights.size();
  const double n = static_cast<double>(inputs.cols());

  ForwardCache cache;
  const RowVector outputs = forward_with_cache(model, inputs, &cache);
  const RowVector residual = outputs - targets;
  const double loss = residual.squaredNorm() / n;

  MlpGradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  // Output head is linear; deltas propagate back through the tanh layers.
  Matrix delta = (2.0 / n) * residual;
  for (std::size_t q = layers; q-- > 0;) {
    grads.weights[q] = delta * cache.activations[q].transpose();
    grads.biases[q] = delta.rowwise().sum();
    if (q > 0) {
      const Matrix& act = cache.activations[q];
      delta = ((model.weights[q].transpose() * delta).array() *
               (1.0 - act.array().square()))
                  .matrix();
    }
  }
  return {loss, std::move(grads)};
}

AdamState make_adam_state(const MlpModel& model, const AdamParams& params) {
  AdamState state;
  state.params = params;
  for (const Matrix& w : model.weights) {
    state.first_moment.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    state.second_moment.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  }
  for (const Vector& b : model.biases) {
    state.first_moment.biases.push_back(Vector::Zero(b.size()));
    state.second_moment.biases.push_back(Vector::Zero(b.size()));
  }
  return state;
}

void adam_step(MlpModel& model, const MlpGradients& grads, AdamState& state) {
  const AdamParams& p = state.params;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(state.step));
  for (std::size_t q = 0; q < model.weights.size(); ++q) {
    auto& mw = state.first_moment.weights[q];
    auto& vw = state.second_moment.weights[q];
    mw = p.beta1 * mw + (1.0 - p.beta1) * grads.weights[q];
    vw = p.beta2 * vw + (1.0 - p.beta2) * grads.weights[q].cwiseAbs2();
    model.weights[q].array() -=
        p.learning_rate * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + p.epsilon);

    auto& mb = state.first_moment.biases[q];
    auto& vb = state.second_moment.biases[q];
    mb = p.beta1 * mb + (1.0 - p.beta1) * grads.biases[q];
    vb = p.beta2 * vb + (1.0 - p.beta2) * grads.biases[q].cwiseAbs2();
    model.biases[q].array() -=
        p.learning_rate * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + p.epsilon);
  }
}

namespace {

// Shared mini-batch loop. Groups are blocks of `group_size` consecutive
// columns sharing one target (1 for sample mode, w*h for image mode).
TrainReport run_training(MlpModel& model, RngStream& stream, const Matrix& inputs,
                         const RowVector& targets, Index group_size, int epochs,
                         int batch_groups, const AdamParams& adam) {
  const Index n_groups = inputs.cols() / group_size;
  AdamState state = make_adam_state(model, adam);
  TrainReport report;
  report.dataset_size = n_groups;

  std::vector<Index> order(n_groups);
  std::iota(order.begin(), order.end(), Index{0});
  Matrix batch_inputs(inputs.rows(), static_cast<Index>(batch_groups) * group_size);
  RowVector batch_targets(static_cast<Index>(batch_groups) * group_size);

  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle_indices(stream, order);
    double epoch_sse = 0.0;
    Index seen = 0;
    int batch_index = 0;
    for (Index g0 = 0; g0 < n_groups; g0 += batch_groups, ++batch_index) {
      const Index groups = std::min<Index>(batch_groups, n_groups - g0);
      const Index cols = groups * group_size;
      for (Index g = 0; g < groups; ++g) {
        const Index src = order[g0 + g] * group_size;
        batch_inputs.middleCols(g * group_size, group_size) =
            inputs.middleCols(src, group_size);
        batch_targets.segment(g * group_size, group_size) =
            targets.segment(src, group_size);
      }
      const auto [loss, grads] =
          mlp_backward(model, batch_inputs.leftCols(cols), batch_targets.head(cols));
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch, batch_index);
      adam_step(model, grads, state);
      epoch_sse += loss * static_cast<double>(cols);
      seen += cols;
    }
    report.epoch_mse.push_back(epoch_sse / static_cast<double>(seen));
    report.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

std::pair<MlpModel, TrainReport> train_sample_estimator(
    RngStream stream, const Matrix& inputs, const RowVector& targets,
    const SampleTrainOptions& options) {
  if (inputs.cols() == 0) {
    throw std::invalid_argument("train_sample_estimator: empty dataset");
  }
  if (targets.size() != inputs.cols()) {
    throw std::invalid_argument("train_sample_estimator: target count mismatch");
  }
  if ((targets.array() < kAlphaMin).any() || (targets.array() > kAlphaGenCeiling).any()) {
    throw std::invalid_argument("train_sample_estimator: target alpha out of bounds");
  }
  RngStream init_stream = stream.split(0);
  RngStream epoch_stream = stream.split(1);
  MlpModel model = make_mlp(static_cast<int>(inputs.rows()), init_stream);
  // Start the linear head at the target mean; the tanh stack then learns
  // deviations instead of pushing its pre-activations into saturation to
  // reach the offset.
  model.biases.back()[0] = targets.mean();
  model.meta.looks = options.looks;
  model.meta.seed = options.seed;
  model.meta.alpha_min = targets.minCoeff();
  model.meta.alpha_max = targets.maxCoeff();
  TrainReport report = run_training(model, epoch_stream, inputs, targets, 1,
                                    options.epochs, options.batch_size, options.adam);
  report.model_crc = crc32(serialize_model(model));
  return {std::move(model), std::move(report)};
}

RoughnessMap conv_forward(const MlpModel& model, const MomentTensor& tensor) {
  check_consistent(model);
  if (tensor.order() != model.input_size()) {
    throw std::invalid_argument("conv_forward: tensor channel count mismatch");
  }
  const Index pixels = tensor.data.cols();
  RowVector flat(pixels);
  for (Index c0 = 0; c0 < pixels; c0 += kConvChunk) {
    const Index cols = std::min(kConvChunk, pixels - c0);
    flat.segment(c0, cols) = mlp_forward_batch(model, tensor.data.middleCols(c0, cols));
  }
  RoughnessMap map(tensor.height, tensor.width);
  for (Index r = 0; r < tensor.height; ++r) {
    for (Index c = 0; c < tensor.width; ++c) {
      map(r, c) = flat[r * tensor.width + c];
    }
  }
  return map;
}

std::pair<MlpModel, TrainReport> train_map_estimator(RngStream stream,
                                                     const MapTrainConfig& config) {
  if (config.alphas.empty() || config.kernels.empty()) {
    throw std::invalid_argument("train_map_estimator: empty alpha or kernel grid");
  }
  if (config.width < 1 || config.height < 1 || config.repeats < 1) {
    throw std::invalid_argument("train_map_estimator: bad raster grid");
  }
  const Index wh = config.width * config.height;
  const Index n_rasters = static_cast<Index>(config.alphas.size()) *
                          static_cast<Index>(config.kernels.size()) * config.repeats;

  Matrix inputs(config.input_moments, n_rasters * wh);
  RowVector targets(n_rasters * wh);
  RngStream data_stream = stream.split(2);
  std::uint64_t item = 0;
  Index col = 0;
  for (double alpha : config.alphas) {
    const Gi0Params law{alpha, tie_gamma(alpha), config.looks};
    for (int kernel : config.kernels) {
      for (int r = 0; r < config.repeats; ++r) {
        RngStream child = data_stream.split(item++);
        const SampleSet flat = gi0_sample(child, law, wh);
        Raster raster(config.height, config.width);
        for (Index i = 0; i < wh; ++i) {
          raster(i / config.width, i % config.width) = flat.values[i];
        }
        const MomentTensor tensor = pooled_moment_tensor(
            raster, config.input_moments, kernel, SyntheticPad{law, child});
        inputs.middleCols(col, wh) = tensor.data;
        targets.segment(col, wh).setConstant(alpha);
        col += wh;
      }
    }
  }

  RngStream init_stream = stream.split(0);
  RngStream epoch_stream = stream.split(1);
  MlpModel model = make_mlp(config.input_moments, init_stream);
  model.biases.back()[0] = targets.mean();
  model.meta.looks = config.looks;
  model.meta.seed = config.seed;
  model.meta.trained_kernels = config.kernels;
  model.meta.trained_width = config.width;
  model.meta.trained_height = config.height;
  model.meta.alpha_min = *std::min_element(config.alphas.begin(), config.alphas.end());
  model.meta.alpha_max = *std::max_element(config.alphas.begin(), config.alphas.end());
  TrainReport report = run_training(model, epoch_stream, inputs, targets, wh,
                                    config.epochs, config.batch_rasters, config.adam);
  report.model_crc = crc32(serialize_model(model));
  return {std::move(model), std::move(report)};
}

std::string serialize_model(const MlpModel& model) {
  check_consistent(model);
  std::ostringstream out;
  out << "GI0NN 1\n";
  out << "layers";
  for (Index s : model.layer_sizes()) out << ' ' << s;
  out << '\n';
  out << "act";
  for (std::size_t q = 0; q < model.weights.size(); ++q) {
    out << ' ' << (q + 1 < model.weights.size() ? "tanh" : "id");
  }
  out << '\n';
  out << "meta nm=" << model.meta.input_moments << " looks=" << model.meta.looks
      << " amin=" << format_double(model.meta.alpha_min)
      << " amax=" << format_double(model.meta.alpha_max) << " kernels=";
  for (std::size_t i = 0; i < model.meta.trained_kernels.size(); ++i) {
    if (i) out << ',';
    out << model.meta.trained_kernels[i];
  }
  out << " seed=" << model.meta.seed << '\n';
  for (std::size_t q = 0; q < model.weights.size(); ++q) {
    const Matrix& w = model.weights[q];
    out << "W " << w.rows() << ' ' << w.cols() << '\n';
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(w(r, c));
      }
      out << '\n';
    }
    const Vector& b = model.biases[q];
    out << "b " << b.size() << '\n';
    for (Index i = 0; i < b.size(); ++i) {
      if (i) out << ' ';
      out << format_double(b[i]);
    }
    out << '\n';
  }
  const std::string body = out.str();
  char crc[16];
  std::snprintf(crc, sizeof(crc), "%08x", crc32(body));
  return body + "crc32 " + crc + "\n";
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("save_model: cannot open " + path.string());
  out << serialize_model(model);
  if (!out) throw FormatError("save_model: write failed for " + path.string());
}

namespace {

struct LineReader {
  std::istringstream in;
  int number = 0;
  std::string current;

  explicit LineReader(std::string text) : in(std::move(text)) {}

  std::string& next(const char* what) {
    if (!std::getline(in, current)) {
      throw FormatError("model file truncated, expected " + std::string(what) +
                        " after line " + std::to_string(number));
    }
    ++number;
    return current;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError("model file line " + std::to_string(number) + ": " + why);
  }
};

std::vector<double> parse_doubles(LineReader& reader, Index expected) {
  std::istringstream ss(reader.current);
  std::vector<double> values;
  double v;
  while (ss >> v) values.push_back(v);
  if (static_cast<Index>(values.size()) != expected) {
    reader.fail("expected " + std::to_string(expected) + " numbers, found " +
                std::to_string(values.size()));
  }
  return values;
}

}  // namespace

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw FormatError("load_model: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  const std::string text = buffer.str();

  // Verify the checksum over everything preceding the crc line.
  const auto crc_pos = text.rfind("crc32 ");
  if (crc_pos == std::string::npos) throw FormatError("model file: missing crc32 line");
  const std::string body = text.substr(0, crc_pos);
  const std::string crc_line = text.substr(crc_pos);
  std::uint32_t stored = 0;
  if (std::sscanf(crc_line.c_str(), "crc32 %x", &stored) != 1) {
    throw FormatError("model file: malformed crc32 line");
  }
  if (stored != crc32(body)) {
    throw FormatError("model file: checksum mismatch (file corrupted?)");
  }

  LineReader reader(body);
  {
    std::istringstream ss(reader.next("header"));
    std::string magic;
    int version = -1;
    ss >> magic >> version;
    if (magic != "GI0NN") reader.fail("bad magic, expected GI0NN");
    if (version != 1) reader.fail("unsupported version " + std::to_string(version));
  }
  std::vector<Index> sizes;
  {
    std::istringstream ss(reader.next("layers"));
    std::string tag;
    ss >> tag;
    if (tag != "layers") reader.fail("expected layers line");
    Index s;
    while (ss >> s) sizes.push_back(s);
    if (sizes.size() < 2) reader.fail("need at least two layer sizes");
    for (Index v : sizes) {
      if (v < 1) reader.fail("layer sizes must be positive");
    }
  }
  {
    std::istringstream ss(reader.next("act"));
    std::string tag;
    ss >> tag;
    if (tag != "act") reader.fail("expected act line");
    std::vector<std::string> acts;
    std::string a;
    while (ss >> a) acts.push_back(a);
    if (acts.size() != sizes.size() - 1) reader.fail("activation count mismatch");
    for (std::size_t i = 0; i + 1 < acts.size(); ++i) {
      if (acts[i] != "tanh") reader.fail("unsupported hidden activation " + acts[i]);
    }
    if (acts.back() != "id") reader.fail("unsupported output activation " + acts.back());
  }
  MlpModel model;
  {
    std::istringstream ss(reader.next("meta"));
    std::string tag;
    ss >> tag;
    if (tag != "meta") reader.fail("expected meta line");
    std::string field;
    while (ss >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) reader.fail("malformed meta field " + field);
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      try {
        if (key == "nm") {
          model.meta.input_moments = std::stoi(value);
        } else if (key == "looks") {
          model.meta.looks = std::stoi(value);
        } else if (key == "amin") {
          model.meta.alpha_min = std::stod(value);
        } else if (key == "amax") {
          model.meta.alpha_max = std::stod(value);
        } else if (key == "kernels") {
          std::istringstream ks(value);
          std::string item;
          while (std::getline(ks, item, ',')) {
            if (!item.empty()) model.meta.trained_kernels.push_back(std::stoi(item));
          }
        } else if (key == "seed") {
          model.meta.seed = std::stoull(value);
        } else {
          reader.fail("unknown meta key " + key);
        }
      } catch (const std::invalid_argument&) {
        reader.fail("malformed meta value for " + key);
      } catch (const std::out_of_range&) {
        reader.fail("meta value out of range for " + key);
      }
    }
  }
  if (model.meta.input_moments != sizes.front()) {
    reader.fail("meta nm disagrees with input layer size");
  }
  for (std::size_t q = 0; q + 1 < sizes.size(); ++q) {
    {
      std::istringstream ss(reader.next("W"));
      std::string tag;
      Index rows = -1, cols = -1;
      ss >> tag >> rows >> cols;
      if (tag != "W" || rows != sizes[q + 1] || cols != sizes[q]) {
        reader.fail("expected 'W " + std::to_string(sizes[q + 1]) + " " +
                    std::to_string(sizes[q]) + "'");
      }
    }
    Matrix w(sizes[q + 1], sizes[q]);
    for (Index r = 0; r < w.rows(); ++r) {
      reader.next("weight row");
      const std::vector<double> row = parse_doubles(reader, w.cols());
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = row[c];
    }
    {
      std::istringstream ss(reader.next("b"));
      std::string tag;
      Index len = -1;
      ss >> tag >> len;
      if (tag != "b" || len != sizes[q + 1]) {
        reader.fail("expected 'b " + std::to_string(sizes[q + 1]) + "'");
      }
    }
    reader.next("bias row");
    const std::vector<double> bias = parse_doubles(reader, sizes[q + 1]);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::Map<const Vector>(bias.data(), bias.size()));
  }
  std::string trailing;
  while (std::getline(reader.in, trailing)) {
    ++reader.number;
    if (!trailing.empty()) reader.fail("unexpected trailing content");
  }
  check_consistent(model);
  return model;
}

}  // namespace gi0nn
