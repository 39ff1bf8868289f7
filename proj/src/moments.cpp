#include "gi0nn/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gi0nn {

namespace {

constexpr Index kMaxKernel = 10000;

// Symmetric (edge-repeating) reflection folded into [0, n); handles pads
// wider than the raster itself.
Index reflect_index(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * n;
  Index m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

Index clamp_index(Index i, Index n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// In-place 2D prefix sums with Kahan compensation per running sum; the
// two-pass form avoids the cancellation of the four-corner recurrence.
void integral_image_inplace(Array2D& a) {
  for (Index r = 0; r < a.rows(); ++r) {
    double sum = 0.0, comp = 0.0;
    for (Index c = 0; c < a.cols(); ++c) {
      const double y = a(r, c) - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      a(r, c) = sum;
    }
  }
  for (Index c = 0; c < a.cols(); ++c) {
    double sum = 0.0, comp = 0.0;
    for (Index r = 0; r < a.rows(); ++r) {
      const double y = a(r, c) - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      a(r, c) = sum;
    }
  }
}

// Window sum over rows [r0, r1] x cols [c0, c1] of the source array,
// from its integral image.
double window_sum(const Array2D& sat, Index r0, Index c0, Index r1, Index c1) {
  double s = sat(r1, c1);
  if (r0 > 0) s -= sat(r0 - 1, c1);
  if (c0 > 0) s -= sat(r1, c0 - 1);
  if (r0 > 0 && c0 > 0) s += sat(r0 - 1, c0 - 1);
  return s;
}

}  // namespace

Vector compute_moments(const Array& values, Index order) {
  if (values.size() == 0) throw std::domain_error("compute_moments: empty sample");
  if (order < 1) throw std::invalid_argument("compute_moments: order must be >= 1");
  if ((values <= 0.0).any() || !values.isFinite().all()) {
    throw std::domain_error("compute_moments: all values must be positive and finite");
  }
  // Sorting fixes the summation order, making the moments bit-identical
  // under any permutation of the sample.
  Array logs = values.log();
  std::sort(logs.data(), logs.data() + logs.size());
  Vector moments(order);
  Array power = logs;
  moments[0] = power.mean();
  for (Index m = 1; m < order; ++m) {
    power *= logs;
    moments[m] = power.mean();
  }
  return moments;
}

Vector compute_moments(const SampleSet& sample, Index order) {
  return compute_moments(sample.values, order);
}

Array2D pad_raster(const Raster& raster, Index pad, PaddingPolicy policy) {
  const Index h = raster.rows();
  const Index w = raster.cols();
  if (h < 1 || w < 1) throw std::invalid_argument("pad_raster: empty raster");
  if (pad < 0) throw std::invalid_argument("pad_raster: negative pad");
  Array2D out(h + 2 * pad, w + 2 * pad);
  out.block(pad, pad, h, w) = raster;
  if (pad == 0) return out;

  if (std::holds_alternative<SyntheticPad>(policy)) {
    auto& syn = std::get<SyntheticPad>(policy);
    const Index total = out.size() - raster.size();
    const SampleSet ring = gi0_sample(syn.stream, syn.params, total);
    Index k = 0;
    for (Index r = 0; r < out.rows(); ++r) {
      for (Index c = 0; c < out.cols(); ++c) {
        const bool interior = r >= pad && r < pad + h && c >= pad && c < pad + w;
        if (!interior) out(r, c) = ring.values[k++];
      }
    }
    return out;
  }

  const bool reflect = std::holds_alternative<ReflectPad>(policy);
  for (Index r = 0; r < out.rows(); ++r) {
    const Index sr = reflect ? reflect_index(r - pad, h) : clamp_index(r - pad, h);
    for (Index c = 0; c < out.cols(); ++c) {
      const bool interior = r >= pad && r < pad + h && c >= pad && c < pad + w;
      if (!interior) {
        const Index sc = reflect ? reflect_index(c - pad, w) : clamp_index(c - pad, w);
        out(r, c) = raster(sr, sc);
      }
    }
  }
  return out;
}

MomentTensor pooled_moment_tensor(const Raster& raster, Index order, Index kernel,
                                  PaddingPolicy policy) {
  const Index h = raster.rows();
  const Index w = raster.cols();
  if (h < 1 || w < 1) throw std::invalid_argument("pooled_moment_tensor: empty raster");
  if (order < 1) throw std::invalid_argument("pooled_moment_tensor: order must be >= 1");
  if (kernel < 1 || kernel > kMaxKernel) {
    throw std::invalid_argument("pooled_moment_tensor: kernel out of range");
  }
  if ((raster <= 0.0).any()) {
    throw std::domain_error("pooled_moment_tensor: raster must be positive");
  }

  const Index pad = (kernel + 1) / 2;
  const Array2D padded = pad_raster(raster, pad, std::move(policy));
  const Array2D logs = padded.log();
  const double inv_area = 1.0 / static_cast<double>(kernel * kernel);
  // Window for pixel (r, c) spans padded rows [r + pad - k/2, ... + k - 1].
  const Index off = pad - kernel / 2;

  MomentTensor tensor;
  tensor.width = w;
  tensor.height = h;
  tensor.data.resize(order, w * h);

  Array2D power;
  Array2D sat;
  for (Index m = 0; m < order; ++m) {
    if (m == 0) {
      power = logs;
    } else {
      power *= logs;
    }
    sat = power;
    integral_image_inplace(sat);
    for (Index r = 0; r < h; ++r) {
      const Index r0 = r + off;
      for (Index c = 0; c < w; ++c) {
        const Index c0 = c + off;
        tensor.data(m, r * w + c) =
            window_sum(sat, r0, c0, r0 + kernel - 1, c0 + kernel - 1) * inv_area;
      }
    }
  }
  return tensor;
}

std::pair<Matrix, RowVector> sample_moment_dataset(RngStream stream,
                                                   const std::vector<double>& alphas,
                                                   const std::vector<Index>& sizes,
                                                   int repeats, int looks, Index order) {
  if (alphas.empty() || sizes.empty() || repeats < 1) {
    throw std::invalid_argument("sample_moment_dataset: empty grid or repeats < 1");
  }
  const Index total = static_cast<Index>(alphas.size()) *
                      static_cast<Index>(sizes.size()) * repeats;
  Matrix inputs(order, total);
  RowVector targets(total);
  std::uint64_t item = 0;
  for (double alpha : alphas) {
    const Gi0Params p{alpha, tie_gamma(alpha), looks};
    for (Index size : sizes) {
      for (int r = 0; r < repeats; ++r) {
        RngStream child = stream.split(item);
        const SampleSet set = gi0_sample(child, p, size);
        inputs.col(static_cast<Index>(item)) = compute_moments(set.values, order);
        targets[static_cast<Index>(item)] = alpha;
        ++item;
      }
    }
  }
  // Same Fisher-Yates as generate_sample_dataset, applied to columns.
  RngStream shuffle = stream.split(item);
  for (Index i = total; i > 1; --i) {
    const Index j = static_cast<Index>(shuffle.next_below(static_cast<std::uint64_t>(i)));
    inputs.col(i - 1).swap(inputs.col(j));
    std::swap(targets[i - 1], targets[j]);
  }
  return {std::move(inputs), std::move(targets)};
}

Index clamp_nonpositive(Raster& raster) {
  const double floor = static_cast<double>(std::numeric_limits<float>::min());
  Index count = 0;
  for (Index r = 0; r < raster.rows(); ++r) {
    for (Index c = 0; c < raster.cols(); ++c) {
      if (!(raster(r, c) > 0.0)) {
        raster(r, c) = floor;
        ++count;
      }
    }
  }
  return count;
}

}  // namespace gi0nn
