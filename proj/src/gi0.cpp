#include "gi0nn/gi0.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gi0nn/special_functions.hpp"

namespace gi0nn {

namespace {

void require_valid(const Gi0Params& p) {
  if (!p.valid()) {
    throw std::domain_error("Gi0Params: need alpha < 0, gamma > 0, looks >= 1");
  }
}

}  // namespace

double tie_gamma(double alpha) {
  if (!(alpha < -1.0)) {
    throw std::domain_error("tie_gamma: alpha must be below -1");
  }
  return -alpha - 1.0;
}

double gi0_log_density(double z, const Gi0Params& p) {
  require_valid(p);
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw std::domain_error("gi0_log_density: z must be positive and finite");
  }
  const double L = static_cast<double>(p.looks);
  return L * std::log(L) + ln_gamma(L - p.alpha) - p.alpha * std::log(p.gamma) -
         ln_gamma(-p.alpha) - ln_gamma(L) + (L - 1.0) * std::log(z) +
         (p.alpha - L) * std::log(p.gamma + L * z);
}

std::pair<double, double> theoretical_log_cumulants(const Gi0Params& p) {
  require_valid(p);
  const double L = static_cast<double>(p.looks);
  const double kappa1 =
      digamma(L) - std::log(L) - digamma(-p.alpha) + std::log(p.gamma);
  const double kappa2 = trigamma(L) + trigamma(-p.alpha);
  return {kappa1, kappa2};
}

SampleSet gi0_sample(RngStream& stream, const Gi0Params& p, Index n) {
  require_valid(p);
  if (n < 1) throw std::invalid_argument("gi0_sample: n must be >= 1");
  const double L = static_cast<double>(p.looks);
  Array values(n);
  for (Index i = 0; i < n; ++i) {
    const double x = sample_gamma(stream, L, L);
    const double y = sample_gamma(stream, -p.alpha, p.gamma);
    values[i] = x / y;
  }
  return SampleSet{std::move(values), p};
}

std::vector<SampleSet> generate_sample_dataset(RngStream stream,
                                               const std::vector<double>& alphas,
                                               const std::vector<Index>& sizes,
                                               int repeats, int looks) {
  if (alphas.empty() || sizes.empty() || repeats < 1) {
    throw std::invalid_argument("generate_sample_dataset: empty grid or repeats < 1");
  }
  std::vector<SampleSet> dataset;
  dataset.reserve(alphas.size() * sizes.size() * static_cast<std::size_t>(repeats));
  std::uint64_t item = 0;
  for (double alpha : alphas) {
    const Gi0Params p{alpha, tie_gamma(alpha), looks};
    for (Index size : sizes) {
      for (int r = 0; r < repeats; ++r) {
        RngStream child = stream.split(item++);
        dataset.push_back(gi0_sample(child, p, size));
      }
    }
  }
  // Fisher-Yates from a dedicated child stream; batches then mix sizes
  // and alpha values whatever the iteration order above.
  RngStream shuffle = stream.split(item);
  for (std::size_t i = dataset.size(); i > 1; --i) {
    const std::size_t j = shuffle.next_below(i);
    std::swap(dataset[i - 1], dataset[j]);
  }
  return dataset;
}

void validate_mosaic_spec(const MosaicSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.looks < 1) {
    throw std::invalid_argument("MosaicSpec: width, height and looks must be positive");
  }
  if (spec.regions.empty()) {
    throw std::invalid_argument("MosaicSpec: at least one region required");
  }
  Eigen::ArrayXX<int> coverage = Eigen::ArrayXX<int>::Zero(spec.height, spec.width);
  for (const MosaicRegion& r : spec.regions) {
    if (r.width < 1 || r.height < 1 || r.x < 0 || r.y < 0 ||
        r.x + r.width > spec.width || r.y + r.height > spec.height) {
      throw std::invalid_argument("MosaicSpec: region outside raster bounds");
    }
    if (!(r.alpha >= kAlphaMin && r.alpha <= kAlphaGenCeiling)) {
      throw std::invalid_argument("MosaicSpec: region alpha outside generation bounds");
    }
    coverage.block(r.y, r.x, r.height, r.width) += 1;
  }
  if ((coverage != 1).any()) {
    throw std::invalid_argument("MosaicSpec: regions must tile the raster exactly");
  }
}

Raster generate_mosaic(RngStream stream, const MosaicSpec& spec) {
  validate_mosaic_spec(spec);
  Raster raster(spec.height, spec.width);
  std::uint64_t region_index = 0;
  for (const MosaicRegion& r : spec.regions) {
    RngStream child = stream.split(region_index++);
    const Gi0Params p{r.alpha, tie_gamma(r.alpha), spec.looks};
    const SampleSet draws = gi0_sample(child, p, r.width * r.height);
    Index k = 0;
    for (Index row = r.y; row < r.y + r.height; ++row) {
      for (Index col = r.x; col < r.x + r.width; ++col) {
        raster(row, col) = draws.values[k++];
      }
    }
  }
  return raster;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> alphas;
  for (double a = -15.0; a <= -1.5 + 1e-9; a += 1.5) alphas.push_back(a);
  return alphas;
}

}  // namespace gi0nn
