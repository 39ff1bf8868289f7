#pragma once

#include <optional>
#include <string>
#include <utility>

#include "gi0nn/gi0.hpp"
#include "gi0nn/moments.hpp"
#include "gi0nn/network.hpp"
#include "gi0nn/types.hpp"

namespace gi0nn {

enum class EstimateStatus { Success, OutOfRange, NoConvergence, DegenerateInput };

std::string to_string(EstimateStatus status);

// Common result contract for all roughness estimators. Success implies
// alpha_hat lies in [-15, -1.5]; failed estimates keep the raw value
// (when one exists) for diagnostics.
struct EstimationOutcome {
  std::optional<double> alpha_hat;
  EstimateStatus status = EstimateStatus::NoConvergence;
  int iterations = 0;
  double elapsed_seconds = 0.0;

  bool success() const { return status == EstimateStatus::Success; }
};

// Method of log cumulants: solve psi'(-alpha) = kappa2_hat - psi'(L) by
// bracketed bisection on -alpha in (1.0001, 1e6).
EstimationOutcome estimate_lcum(const Array& sample, int looks);
EstimationOutcome estimate_lcum(const SampleSet& sample, int looks);

enum class MleMode { PaperFaithful, Robust };

// 1-D maximum likelihood in alpha with gamma = -alpha - 1 after unit-mean
// normalization. PaperFaithful: Newton on the score from alpha = -1.0001.
// Robust: bracketed scan plus golden-section refinement over
// [-15, -1.0001].
EstimationOutcome estimate_mle(const Array& sample, int looks, MleMode mode);
EstimationOutcome estimate_mle(const SampleSet& sample, int looks, MleMode mode);

// Network estimator: log-moments fed through the trained model.
EstimationOutcome estimate_nn(const MlpModel& model, const Array& sample);
EstimationOutcome estimate_nn(const MlpModel& model, const SampleSet& sample);

// Per-pixel roughness map: pooled moments plus 1x1-conv inference.
// Returned seconds cover moment extraction and inference.
std::pair<RoughnessMap, double> estimate_map(const MlpModel& model,
                                             const Raster& raster, Index kernel,
                                             PaddingPolicy pad);

// Tied log-likelihood at alpha (sample normalized to unit mean first).
double mle_profile_log_likelihood(const Array& sample, int looks, double alpha);

// Brute-force argmax of the tied likelihood over [-15, -1.0001] at the
// given step; the reference the Robust mode is checked against.
double mle_grid_argmax(const Array& sample, int looks, double step = 1e-3);

}  // namespace gi0nn
