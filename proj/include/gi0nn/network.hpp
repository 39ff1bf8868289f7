#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "gi0nn/moments.hpp"
#include "gi0nn/rng.hpp"
#include "gi0nn/types.hpp"

namespace gi0nn {

// Provenance carried with a model so inference can validate its inputs.
// trained_width/height describe the image-mode training rasters; they are
// informational and not part of the serialized format.
struct ModelMetadata {
  int input_moments = 2;  // N_m
  int looks = 1;
  double alpha_min = kAlphaMin;
  double alpha_max = kAlphaMax;
  std::vector<int> trained_kernels;  // empty for sample-trained models
  std::uint64_t seed = 0;
  Index trained_width = 0;
  Index trained_height = 0;
};

// Tiny regression MLP: tanh hidden layers, identity output head. The same
// weights serve vector inference and 1x1-convolutional image inference.
struct MlpModel {
  std::vector<Matrix> weights;  // W_q: layer_sizes[q+1] x layer_sizes[q]
  std::vector<Vector> biases;
  ModelMetadata meta;

  Index input_size() const { return weights.empty() ? 0 : weights.front().cols(); }
  Index output_size() const { return weights.empty() ? 0 : weights.back().rows(); }
  std::vector<Index> layer_sizes() const;
  Index parameter_count() const;
};

// Gradients (or any other per-parameter quantity) in model shape.
struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

struct AdamParams {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  MlpGradients first_moment;
  MlpGradients second_moment;
  long step = 0;
  AdamParams params;
};

struct TrainReport {
  std::vector<double> epoch_mse;
  std::vector<double> epoch_seconds;  // elapsed since training start
  double seconds = 0.0;
  std::uint32_t model_crc = 0;
  Index dataset_size = 0;
};

// Thrown when the training loss turns non-finite.
struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch_, int batch_)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch_) + ", batch " + std::to_string(batch_)),
        epoch(epoch_),
        batch(batch_) {}
  int epoch;
  int batch;
};

// Fresh [input_moments, 8, 4, 1] model, Xavier-uniform weights.
MlpModel make_mlp(int input_moments, RngStream& stream);

// Hidden layers tanh, identity head.
double mlp_forward(const MlpModel& model, const Vector& input);

// Column-wise forward over a batch of inputs (input_size x n).
RowVector mlp_forward_batch(const MlpModel& model, const Matrix& inputs);

// Mean-squared-error loss over the batch and its exact gradients.
// `targets` pairs one value with each input column.
std::pair<double, MlpGradients> mlp_backward(const MlpModel& model,
                                             const Matrix& inputs,
                                             const RowVector& targets);

AdamState make_adam_state(const MlpModel& model, const AdamParams& params = {});

// Bias-corrected ADAM update, in place.
void adam_step(MlpModel& model, const MlpGradients& grads, AdamState& state);

struct SampleTrainOptions {
  int epochs = 300;
  int batch_size = 32;
  AdamParams adam;
  // Metadata passthrough so the trained model is self-describing.
  int looks = 1;
  std::uint64_t seed = 0;
};

// Shuffled mini-batch ADAM on (moment vector, alpha) pairs; deterministic
// given the stream.
std::pair<MlpModel, TrainReport> train_sample_estimator(
    RngStream stream, const Matrix& inputs, const RowVector& targets,
    const SampleTrainOptions& options = {});

// Applies the MLP to every transversal tube of the tensor.
RoughnessMap conv_forward(const MlpModel& model, const MomentTensor& tensor);

struct MapTrainConfig {
  std::vector<double> alphas;   // training roughness grid
  std::vector<int> kernels;     // pooling kernel sizes K
  Index width = 10;
  Index height = 10;
  int repeats = 1000;           // rasters per (alpha, kernel)
  int looks = 1;
  int input_moments = 2;        // N_m
  int epochs = 300;
  int batch_rasters = 32;
  AdamParams adam;
  std::uint64_t seed = 0;
};

// Synthetic single-law rasters with G_I^0 padding, pooled moment tensors,
// constant target planes; mini-batch ADAM over whole rasters.
std::pair<MlpModel, TrainReport> train_map_estimator(RngStream stream,
                                                     const MapTrainConfig& config);

// Versioned line-oriented text format with trailing crc32; round-trips
// bit-exactly.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

// The serialized form, shared by save_model and checksum reporting.
std::string serialize_model(const MlpModel& model);

}  // namespace gi0nn
