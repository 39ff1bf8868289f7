#include "gi0nn/estimators.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "gi0nn/special_functions.hpp"

namespace gi0nn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_sample(const Array& sample) {
  if (sample.size() == 0) throw std::domain_error("estimator: empty sample");
  if ((sample <= 0.0).any() || !sample.isFinite().all()) {
    throw std::domain_error("estimator: sample values must be positive and finite");
  }
}

// Newton bracket from the paper-faithful mode; iterates escaping it count
// as divergence.
constexpr double kNewtonFloor = -1e6;
constexpr double kNewtonCeil = -1.0;
constexpr double kSearchLow = kAlphaMin;         // robust bracket
constexpr double kSearchHigh = kAlphaGenCeiling; // gamma > 0 requires alpha < -1

// Tied log-likelihood terms that depend on the sample only.
struct LikelihoodContext {
  Array scaled;      // L * z_i over the unit-mean-normalized sample
  double sum_log = 0.0;
  double n = 0.0;
  int looks = 1;
};

LikelihoodContext make_context(const Array& sample, int looks) {
  if (looks < 1) throw std::domain_error("estimator: looks must be >= 1");
  require_sample(sample);
  LikelihoodContext ctx;
  const double mean = sample.mean();
  ctx.scaled = sample / mean * static_cast<double>(looks);
  ctx.sum_log = (sample / mean).log().sum();
  ctx.n = static_cast<double>(sample.size());
  ctx.looks = looks;
  return ctx;
}

double log_likelihood(const LikelihoodContext& ctx, double alpha) {
  const double gamma = -alpha - 1.0;
  const double L = static_cast<double>(ctx.looks);
  const double constant = L * std::log(L) + ln_gamma(L - alpha) -
                          alpha * std::log(gamma) - ln_gamma(-alpha) - ln_gamma(L);
  const double tail = (ctx.scaled + gamma).log().sum();
  return ctx.n * constant + (L - 1.0) * ctx.sum_log + (alpha - L) * tail;
}

// d/dalpha of log_likelihood with gamma tied to -alpha - 1.
double score(const LikelihoodContext& ctx, double alpha) {
  const double gamma = -alpha - 1.0;
  const double L = static_cast<double>(ctx.looks);
  const Array shifted = ctx.scaled + gamma;
  const double sum_log_shifted = shifted.log().sum();
  const double sum_inv_shifted = shifted.inverse().sum();
  return ctx.n * (-digamma(L - alpha) - std::log(gamma) + alpha / gamma + digamma(-alpha)) +
         sum_log_shifted - (alpha - L) * sum_inv_shifted;
}

double golden_section_max(const LikelihoodContext& ctx, double lo, double hi,
                          double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = log_likelihood(ctx, x1);
  double f2 = log_likelihood(ctx, x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = log_likelihood(ctx, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = log_likelihood(ctx, x1);
    }
  }
  return 0.5 * (a + b);
}

// Success band with a whisker of floating-point slack so solver noise at
// the exact endpoints does not flip the status.
bool in_valid_band(double alpha) {
  return alpha >= kAlphaMin - 1e-9 && alpha <= kAlphaMax + 1e-9;
}

}  // namespace

std::string to_string(EstimateStatus status) {
  switch (status) {
    case EstimateStatus::Success: return "Success";
    case EstimateStatus::OutOfRange: return "OutOfRange";
    case EstimateStatus::NoConvergence: return "NoConvergence";
    case EstimateStatus::DegenerateInput: return "DegenerateInput";
  }
  return "Unknown";
}

EstimationOutcome estimate_lcum(const Array& sample, int looks) {
  const auto start = Clock::now();
  if (looks < 1) throw std::domain_error("estimate_lcum: looks must be >= 1");
  require_sample(sample);

  EstimationOutcome outcome;
  const Vector mu = compute_moments(sample, 2);
  const double kappa2 = mu[1] - mu[0] * mu[0];
  const double rhs = kappa2 - trigamma(static_cast<double>(looks));
  if (!(rhs > 0.0)) {
    outcome.status = EstimateStatus::DegenerateInput;
    outcome.elapsed_seconds = seconds_since(start);
    return outcome;
  }

  // psi' is strictly decreasing, so the bracket on t = -alpha is
  // monotone: t in (1.0001, 1e6).
  const double t_lo = 1.0001;
  const double t_hi = 1e6;
  if (rhs >= trigamma(t_lo) || rhs <= trigamma(t_hi)) {
    outcome.status = EstimateStatus::OutOfRange;
    outcome.elapsed_seconds = seconds_since(start);
    return outcome;
  }
  double lo = std::log(t_lo);
  double hi = std::log(t_hi);
  int iterations = 0;
  while (hi - lo > 1e-12 && iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    if (trigamma(std::exp(mid)) > rhs) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++iterations;
  }
  const double alpha_hat = -std::exp(0.5 * (lo + hi));
  outcome.alpha_hat = alpha_hat;
  outcome.iterations = iterations;
  outcome.status =
      in_valid_band(alpha_hat) ? EstimateStatus::Success : EstimateStatus::OutOfRange;
  outcome.elapsed_seconds = seconds_since(start);
  return outcome;
}

EstimationOutcome estimate_lcum(const SampleSet& sample, int looks) {
  return estimate_lcum(sample.values, looks);
}

EstimationOutcome estimate_mle(const Array& sample, int looks, MleMode mode) {
  const auto start = Clock::now();
  const LikelihoodContext ctx = make_context(sample, looks);
  EstimationOutcome outcome;

  if (mode == MleMode::PaperFaithful) {
    double alpha = -1.0001;
    for (int iter = 1; iter <= 100; ++iter) {
      outcome.iterations = iter;
      const double g = score(ctx, alpha);
      if (!std::isfinite(g)) {
        outcome.status = EstimateStatus::NoConvergence;
        outcome.elapsed_seconds = seconds_since(start);
        return outcome;
      }
      if (std::abs(g) < 1e-8) {
        outcome.alpha_hat = alpha;
        outcome.status = in_valid_band(alpha) ? EstimateStatus::Success
                                              : EstimateStatus::OutOfRange;
        outcome.elapsed_seconds = seconds_since(start);
        return outcome;
      }
      const double h = 1e-6 * std::max(1.0, std::abs(alpha));
      if (alpha + h >= kNewtonCeil) {
        outcome.status = EstimateStatus::NoConvergence;
        outcome.elapsed_seconds = seconds_since(start);
        return outcome;
      }
      const double curvature = (score(ctx, alpha + h) - score(ctx, alpha - h)) / (2.0 * h);
      if (!std::isfinite(curvature) || curvature == 0.0) {
        outcome.status = EstimateStatus::NoConvergence;
        outcome.elapsed_seconds = seconds_since(start);
        return outcome;
      }
      alpha -= g / curvature;
      outcome.alpha_hat = alpha;  // last iterate, kept for diagnostics
      if (!(alpha > kNewtonFloor && alpha < kNewtonCeil)) {
        outcome.status = EstimateStatus::NoConvergence;
        outcome.elapsed_seconds = seconds_since(start);
        return outcome;
      }
    }
    outcome.status = EstimateStatus::NoConvergence;
    outcome.elapsed_seconds = seconds_since(start);
    return outcome;
  }

  // Robust mode: coarse scan so a secondary mode cannot hijack the refine,
  // then golden-section inside the winning cell.
  constexpr double kScanStep = 0.02;
  double best_alpha = kSearchLow;
  double best_value = -std::numeric_limits<double>::infinity();
  int evals = 0;
  for (double a = kSearchLow; a < kSearchHigh + kScanStep; a += kScanStep) {
    const double alpha = std::min(a, kSearchHigh);
    const double value = log_likelihood(ctx, alpha);
    ++evals;
    if (std::isfinite(value) && value > best_value) {
      best_value = value;
      best_alpha = alpha;
    }
    if (alpha >= kSearchHigh) break;
  }
  const double lo = std::max(kSearchLow, best_alpha - kScanStep);
  const double hi = std::min(kSearchHigh, best_alpha + kScanStep);
  double alpha_hat = golden_section_max(ctx, lo, hi, 1e-7);
  // Newton polish pins the maximizer to the score's root, making the
  // result insensitive to the golden-section bracket (and so invariant
  // under sample rescaling to well below 1e-9).
  if (alpha_hat - kSearchLow > 1e-4 && kSearchHigh - alpha_hat > 1e-4) {
    double alpha = alpha_hat;
    for (int i = 0; i < 30; ++i) {
      const double g = score(ctx, alpha);
      const double h = 1e-6 * std::max(1.0, std::abs(alpha));
      const double curvature = (score(ctx, alpha + h) - score(ctx, alpha - h)) / (2.0 * h);
      if (!std::isfinite(g) || !std::isfinite(curvature) || curvature >= 0.0) break;
      const double step = g / curvature;
      const double next = alpha - step;
      if (next <= kSearchLow || next >= kSearchHigh) break;
      alpha = next;
      if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(alpha))) break;
    }
    if (std::abs(alpha - alpha_hat) <= 2.0 * kScanStep) alpha_hat = alpha;
  }
  outcome.alpha_hat = alpha_hat;
  outcome.iterations = evals;
  if (std::abs(alpha_hat - kSearchLow) <= 1e-6 || std::abs(alpha_hat - kSearchHigh) <= 1e-6) {
    outcome.status = EstimateStatus::OutOfRange;
  } else {
    outcome.status =
        in_valid_band(alpha_hat) ? EstimateStatus::Success : EstimateStatus::OutOfRange;
  }
  outcome.elapsed_seconds = seconds_since(start);
  return outcome;
}

EstimationOutcome estimate_mle(const SampleSet& sample, int looks, MleMode mode) {
  return estimate_mle(sample.values, looks, mode);
}

EstimationOutcome estimate_nn(const MlpModel& model, const Array& sample) {
  const auto start = Clock::now();
  EstimationOutcome outcome;
  const Vector moments = compute_moments(sample, model.meta.input_moments);
  const double alpha_hat = mlp_forward(model, moments);
  outcome.alpha_hat = alpha_hat;
  outcome.iterations = 0;
  outcome.status =
      in_valid_band(alpha_hat) ? EstimateStatus::Success : EstimateStatus::OutOfRange;
  outcome.elapsed_seconds = seconds_since(start);
  return outcome;
}

EstimationOutcome estimate_nn(const MlpModel& model, const SampleSet& sample) {
  return estimate_nn(model, sample.values);
}

std::pair<RoughnessMap, double> estimate_map(const MlpModel& model,
                                             const Raster& raster, Index kernel,
                                             PaddingPolicy pad) {
  const auto start = Clock::now();
  const MomentTensor tensor =
      pooled_moment_tensor(raster, model.meta.input_moments, kernel, std::move(pad));
  RoughnessMap map = conv_forward(model, tensor);
  return {std::move(map), seconds_since(start)};
}

double mle_profile_log_likelihood(const Array& sample, int looks, double alpha) {
  if (!(alpha < -1.0)) {
    throw std::domain_error("mle_profile_log_likelihood: alpha must be below -1");
  }
  return log_likelihood(make_context(sample, looks), alpha);
}

double mle_grid_argmax(const Array& sample, int looks, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("mle_grid_argmax: step must be positive");
  const LikelihoodContext ctx = make_context(sample, looks);
  double best_alpha = kSearchLow;
  double best_value = -std::numeric_limits<double>::infinity();
  for (double a = kSearchLow; a < kSearchHigh + step; a += step) {
    const double alpha = std::min(a, kSearchHigh);
    const double value = log_likelihood(ctx, alpha);
    if (std::isfinite(value) && value > best_value) {
      best_value = value;
      best_alpha = alpha;
    }
    if (alpha >= kSearchHigh) break;
  }
  return best_alpha;
}

}  // namespace gi0nn
