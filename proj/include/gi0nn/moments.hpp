#pragma once

#include <variant>

#include "gi0nn/gi0.hpp"
#include "gi0nn/rng.hpp"
#include "gi0nn/types.hpp"

namespace gi0nn {

// Log-moment channels of a raster. Channel m-1 holds the k x k windowed
// mean of (log I)^m; data is order x (width*height), pixel p = row*width + col.
struct MomentTensor {
  Matrix data;
  Index width = 0;
  Index height = 0;

  Index order() const { return data.rows(); }
  double at(Index channel, Index row, Index col) const {
    return data(channel, row * width + col);
  }
};

// Border handling for pooled moments. Synthetic padding draws fresh
// G_I^0 values (training); Reflect is the inference default.
struct ReflectPad {};
struct ReplicatePad {};
struct SyntheticPad {
  Gi0Params params;
  RngStream stream;
};
using PaddingPolicy = std::variant<ReflectPad, ReplicatePad, SyntheticPad>;

// Sample log-moments mu_m = mean((log z)^m), m = 1..order.
Vector compute_moments(const Array& values, Index order);
Vector compute_moments(const SampleSet& sample, Index order);

// Raster extended by `pad` cells on every side according to the policy.
Array2D pad_raster(const Raster& raster, Index pad, PaddingPolicy policy);

// Windowed log-moments for every pixel via per-channel integral images;
// O(order * width * height) regardless of kernel size. Even kernels anchor
// the window top-left at (row - k/2, col - k/2).
MomentTensor pooled_moment_tensor(const Raster& raster, Index order, Index kernel,
                                  PaddingPolicy policy);

// Replaces z <= 0 by the smallest positive normal float before log;
// returns how many pixels were clamped.
Index clamp_nonpositive(Raster& raster);

// Moment-vector training set over the (alphas x sizes x repeats) grid with
// gamma tied. Columns follow the same split-stream indexing and shuffle as
// generate_sample_dataset, without materializing the raw draws.
std::pair<Matrix, RowVector> sample_moment_dataset(RngStream stream,
                                                   const std::vector<double>& alphas,
                                                   const std::vector<Index>& sizes,
                                                   int repeats, int looks, Index order);

}  // namespace gi0nn
