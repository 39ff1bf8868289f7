#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gi0nn/rng.hpp"
#include "gi0nn/types.hpp"

namespace gi0nn {

// Roughness grid bounds. Estimation treats [-15, -1.5] as the valid band;
// generation additionally needs alpha < -1 so the unit-mean tie keeps
// gamma positive.
inline constexpr double kAlphaMin = -15.0;
inline constexpr double kAlphaMax = -1.5;
inline constexpr double kAlphaGenCeiling = -1.0001;

// One G_I^0 law: Z = X / Y' with X ~ Gamma(L, L) speckle and
// Y' ~ Gamma(-alpha, gamma).
struct Gi0Params {
  double alpha = -2.0;  // roughness, < 0
  double gamma = 1.0;   // scale, > 0
  int looks = 1;        // number of looks L, >= 1

  bool valid() const { return alpha < 0.0 && gamma > 0.0 && looks >= 1; }
};

struct SampleSet {
  Array values;  // strictly positive intensity draws
  std::optional<Gi0Params> truth;
};

// Axis-aligned rectangle in pixel coordinates, [x, x+w) x [y, y+h).
struct MosaicRegion {
  Index x = 0;
  Index y = 0;
  Index width = 0;
  Index height = 0;
  double alpha = -2.0;
};

// Piecewise-constant roughness layout; regions must tile the raster exactly.
struct MosaicSpec {
  Index width = 0;
  Index height = 0;
  int looks = 1;
  std::vector<MosaicRegion> regions;
};

// Unit-mean tie gamma = -alpha - 1; requires alpha < -1.
double tie_gamma(double alpha);

// log of the G_I^0 density at z > 0.
double gi0_log_density(double z, const Gi0Params& p);

// First two cumulants of log Z: (kappa1, kappa2).
std::pair<double, double> theoretical_log_cumulants(const Gi0Params& p);

// n independent draws Z = X / Y'.
SampleSet gi0_sample(RngStream& stream, const Gi0Params& p, Index n);

// One set per (alpha, size, repeat) with gamma tied, deterministically
// shuffled. Total count = |alphas| * |sizes| * repeats.
std::vector<SampleSet> generate_sample_dataset(RngStream stream,
                                               const std::vector<double>& alphas,
                                               const std::vector<Index>& sizes,
                                               int repeats, int looks);

// Region-wise i.i.d. G_I^0 fill of the described layout; throws
// std::invalid_argument if the regions do not tile the raster exactly.
Raster generate_mosaic(RngStream stream, const MosaicSpec& spec);

void validate_mosaic_spec(const MosaicSpec& spec);

// Default training grid A = {-15, -13.5, ..., -1.5}.
std::vector<double> default_alpha_grid();

}  // namespace gi0nn
