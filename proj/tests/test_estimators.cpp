#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "gi0nn/estimators.hpp"
#include "gi0nn/special_functions.hpp"
#include "support/oracles.hpp"

using namespace gi0nn;

namespace {

// Two points whose first two sample log-cumulants are exactly (kappa1, kappa2).
Array two_point_sample(double kappa1, double kappa2) {
  const double spread = std::sqrt(kappa2);
  Array values(2);
  values << std::exp(kappa1 + spread), std::exp(kappa1 - spread);
  return values;
}

// Small trained model shared by the nn-estimator tests, one per looks
// value. Sized so ADAM has enough steps to traverse the target range.
const MlpModel& quick_model(int looks = 1) {
  static std::map<int, MlpModel> models;
  auto it = models.find(looks);
  if (it == models.end()) {
    const std::vector<double> alphas = default_alpha_grid();
    const std::vector<Index> sizes{100, 1000, 10000};
    auto [inputs, targets] =
        sample_moment_dataset(RngStream(404), alphas, sizes, 100, looks, 2);
    SampleTrainOptions options;
    options.epochs = 300;
    options.looks = looks;
    options.seed = 404;
    auto [m, report] = train_sample_estimator(RngStream(405), inputs, targets, options);
    it = models.emplace(looks, std::move(m)).first;
  }
  return it->second;
}

}  // namespace

TEST_CASE("lcum inverts noiseless cumulants") {
  for (double alpha : {-1.5, -3.0, -7.0, -15.0}) {
    for (int looks : {1, 3, 8}) {
      const Gi0Params p{alpha, tie_gamma(alpha), looks};
      const auto [kappa1, kappa2] = theoretical_log_cumulants(p);
      const EstimationOutcome outcome =
          estimate_lcum(two_point_sample(kappa1, kappa2), looks);
      REQUIRE(outcome.alpha_hat.has_value());
      CHECK(std::abs(*outcome.alpha_hat - alpha) < 1e-6);
      CHECK(outcome.status == EstimateStatus::Success);
    }
  }
}

TEST_CASE("lcum flags degenerate and out-of-band inputs") {
  const Array constant = Array::Constant(3, 4.2);
  const EstimationOutcome degenerate = estimate_lcum(constant, 1);
  CHECK(degenerate.status == EstimateStatus::DegenerateInput);
  CHECK(!degenerate.alpha_hat.has_value());

  // kappa2 slightly above psi'(L) implies alpha far below -15
  const EstimationOutcome deep =
      estimate_lcum(two_point_sample(0.0, trigamma(1.0) + trigamma(40.0)), 1);
  REQUIRE(deep.alpha_hat.has_value());
  CHECK(deep.status == EstimateStatus::OutOfRange);
  CHECK(*deep.alpha_hat < -15.0);

  // huge kappa2 implies alpha above -1.0001: no root inside the bracket
  const EstimationOutcome shallow =
      estimate_lcum(two_point_sample(0.0, trigamma(1.0) + trigamma(1.00001)), 1);
  CHECK(shallow.status == EstimateStatus::OutOfRange);
}

TEST_CASE("lcum is consistent on large samples") {
  RngStream stream(51);
  const SampleSet set = gi0_sample(stream, {-3.0, 2.0, 1}, 1000000);
  const EstimationOutcome outcome = estimate_lcum(set, 1);
  REQUIRE(outcome.alpha_hat.has_value());
  CHECK(outcome.status == EstimateStatus::Success);
  CHECK(std::abs(*outcome.alpha_hat + 3.0) < 0.1);
}

TEST_CASE("robust mle is consistent on large samples") {
  RngStream stream(52);
  const SampleSet set = gi0_sample(stream, {-7.0, 6.0, 1}, 1000000);
  const EstimationOutcome outcome = estimate_mle(set, 1, MleMode::Robust);
  REQUIRE(outcome.alpha_hat.has_value());
  CHECK(outcome.status == EstimateStatus::Success);
  CHECK(std::abs(*outcome.alpha_hat + 7.0) < 0.2);
}

TEST_CASE("robust mle agrees with the dense likelihood grid") {
  int checked = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const double alpha = -2.0 - 11.0 * RngStream(trial).next_double();
    RngStream stream = RngStream(600).split(trial);
    const Index n = trial % 2 == 0 ? 25 : 121;
    const SampleSet set = gi0_sample(stream, {alpha, tie_gamma(alpha), 1}, n);
    const EstimationOutcome outcome = estimate_mle(set, 1, MleMode::Robust);
    REQUIRE(outcome.alpha_hat.has_value());
    const double grid = mle_grid_argmax(set.values, 1, 0.001);
    CHECK(std::abs(*outcome.alpha_hat - grid) < 0.002);
    ++checked;
  }
  CHECK(checked == 8);
}

TEST_CASE("tiny rough samples produce heavy failure fractions for both baselines") {
  // (alpha, gamma, L) = (-1.5, 0.5, 1) with n = 9 is the stress cell.
  // the full failure-rate ordering across estimators runs in the
  // acceptance suite; here both classical methods must fail a large
  // nonzero fraction on the same draws
  const Gi0Params law{-1.5, 0.5, 1};
  int mle_failures = 0;
  int lcum_failures = 0;
  int lcum_degenerate = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    RngStream stream = RngStream(53).split(t);
    const SampleSet set = gi0_sample(stream, law, 9);
    if (!estimate_mle(set, 1, MleMode::PaperFaithful).success()) ++mle_failures;
    const EstimationOutcome lcum = estimate_lcum(set, 1);
    if (!lcum.success()) ++lcum_failures;
    if (lcum.status == EstimateStatus::DegenerateInput) ++lcum_degenerate;
  }
  CHECK(lcum_failures > trials / 4);
  CHECK(mle_failures > trials / 4);
  CHECK(lcum_degenerate > 0);
  CHECK(lcum_failures < trials);
}

TEST_CASE("estimators are scale invariant") {
  RngStream stream(54);
  const SampleSet set = gi0_sample(stream, {-5.0, 4.0, 3}, 400);
  for (double factor : {1e-4, 0.37, 1.0, 53.0, 2.5e5}) {
    const Array scaled = set.values * factor;

    const auto lcum_a = estimate_lcum(set.values, 3);
    const auto lcum_b = estimate_lcum(scaled, 3);
    REQUIRE(lcum_a.alpha_hat.has_value());
    REQUIRE(lcum_b.alpha_hat.has_value());
    CHECK(std::abs(*lcum_a.alpha_hat - *lcum_b.alpha_hat) < 1e-9);

    const auto mle_a = estimate_mle(set.values, 3, MleMode::Robust);
    const auto mle_b = estimate_mle(scaled, 3, MleMode::Robust);
    REQUIRE(mle_a.alpha_hat.has_value());
    REQUIRE(mle_b.alpha_hat.has_value());
    CHECK(std::abs(*mle_a.alpha_hat - *mle_b.alpha_hat) < 1e-9);
  }
}

TEST_CASE("paper-faithful mle is scale invariant when it converges") {
  RngStream stream(55);
  const SampleSet set = gi0_sample(stream, {-4.0, 3.0, 1}, 2000);
  const auto base = estimate_mle(set.values, 1, MleMode::PaperFaithful);
  if (base.success()) {
    const auto scaled = estimate_mle(Array(set.values * 7.3), 1, MleMode::PaperFaithful);
    REQUIRE(scaled.alpha_hat.has_value());
    CHECK(std::abs(*base.alpha_hat - *scaled.alpha_hat) < 1e-9);
  }
}

TEST_CASE("estimator error shrinks with sample size") {
  const Gi0Params law{-7.0, 6.0, 3};
  const int trials = 200;
  for (int which = 0; which < 3; ++which) {
    double previous_median = 1e300;
    for (Index n : {Index{25}, Index{121}, Index{1000}}) {
      std::vector<double> errors;
      for (int t = 0; t < trials; ++t) {
        RngStream stream = RngStream(56 + which).split(static_cast<std::uint64_t>(n) * 1000 + t);
        const SampleSet set = gi0_sample(stream, law, n);
        EstimationOutcome outcome;
        if (which == 0) {
          outcome = estimate_lcum(set, 3);
        } else if (which == 1) {
          outcome = estimate_mle(set, 3, MleMode::Robust);
        } else {
          outcome = estimate_nn(quick_model(3), set);
        }
        if (outcome.alpha_hat) errors.push_back(std::abs(*outcome.alpha_hat + 7.0));
      }
      REQUIRE(!errors.empty());
      std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
      const double median = errors[errors.size() / 2];
      CHECK(median <= previous_median);
      previous_median = median;
    }
  }
}

TEST_CASE("nn estimator wraps moments plus forward") {
  const MlpModel& model = quick_model();
  RngStream stream(57);
  const SampleSet set = gi0_sample(stream, {-7.0, 6.0, 1}, 1000);
  const EstimationOutcome outcome = estimate_nn(model, set);
  REQUIRE(outcome.alpha_hat.has_value());
  CHECK(outcome.iterations == 0);
  // alpha = -7 sits in the flat stretch of the cumulant map, so even a
  // well-trained 2-moment estimator carries a bias of a couple of units
  CHECK(std::abs(*outcome.alpha_hat + 7.0) < 3.0);

  const Vector mu = compute_moments(set.values, 2);
  CHECK(*outcome.alpha_hat == mlp_forward(model, mu));

  // constant sample: zero moments are a perfectly valid input
  const EstimationOutcome constant = estimate_nn(model, Array::Constant(10, 1.0));
  REQUIRE(constant.alpha_hat.has_value());
  CHECK(std::isfinite(*constant.alpha_hat));
}

TEST_CASE("nn estimator succeeds at n=1000 with a bounded error envelope") {
  const MlpModel& model = quick_model();
  int successes = 0;
  std::vector<double> errors;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    RngStream stream = RngStream(58).split(t);
    const SampleSet set = gi0_sample(stream, {-7.0, 6.0, 1}, 1000);
    const EstimationOutcome outcome = estimate_nn(model, set);
    if (outcome.success()) ++successes;
    if (outcome.alpha_hat) errors.push_back(std::abs(*outcome.alpha_hat + 7.0));
  }
  CHECK(successes >= trials * 9 / 10);
  std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
  // envelope frozen from a Monte Carlo run of this configuration; the
  // information in two log-moments caps accuracy near alpha = -7 at L = 1
  CHECK(errors[errors.size() / 2] < 2.8);
}

TEST_CASE("estimate_map produces constant maps from constant tensors") {
  const MlpModel& model = quick_model();
  const Raster constant = Raster::Constant(8, 8, 1.7);
  const auto [map, elapsed] = estimate_map(model, constant, 3, ReflectPad{});
  CHECK(map.rows() == 8);
  CHECK(map.cols() == 8);
  // integral-image rounding may wiggle the last ulp across positions
  CHECK(map.maxCoeff() - map.minCoeff() < 1e-12);
  CHECK(elapsed >= 0.0);
}

TEST_CASE("estimate_map separates a two-region mosaic") {
  MapTrainConfig config;
  config.alphas = default_alpha_grid();
  config.kernels = {2, 5, 8, 11};
  config.repeats = 32;
  config.epochs = 250;
  config.seed = 70;
  auto [model, report] = train_map_estimator(RngStream(70), config);

  MosaicSpec spec;
  spec.width = 64;
  spec.height = 64;
  spec.looks = 1;
  spec.regions.push_back({0, 0, 32, 64, -1.5});
  spec.regions.push_back({32, 0, 32, 64, -15.0});
  const Raster mosaic = generate_mosaic(RngStream(71), spec);
  const auto [map, elapsed] = estimate_map(model, mosaic, 11, ReflectPad{});

  std::vector<double> rough, smooth;
  for (Index r = 0; r < 64; ++r) {
    for (Index c = 0; c < 32; ++c) rough.push_back(map(r, c));
    for (Index c = 32; c < 64; ++c) smooth.push_back(map(r, c));
  }
  std::nth_element(rough.begin(), rough.begin() + rough.size() / 2, rough.end());
  std::nth_element(smooth.begin(), smooth.begin() + smooth.size() / 2, smooth.end());
  CHECK(rough[rough.size() / 2] > smooth[smooth.size() / 2]);
}

TEST_CASE("trained estimator stays near the target band on its own inputs") {
  const MlpModel& model = quick_model();
  // same deterministic dataset the model was trained on
  auto [inputs, targets] = sample_moment_dataset(RngStream(404), default_alpha_grid(),
                                                 {100, 1000, 10000}, 100, 1, 2);
  Index inside = 0;
  for (Index i = 0; i < inputs.cols(); ++i) {
    const double pred = mlp_forward(model, inputs.col(i));
    if (pred >= kAlphaMin - 2.0 && pred <= kAlphaMax + 2.0) ++inside;
  }
  CHECK(inside * 100 >= inputs.cols() * 99);
}

TEST_CASE("grid argmax helper validates its arguments") {
  CHECK_THROWS_AS(mle_grid_argmax(Array::Constant(3, 1.0), 1, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_lcum(Array(), 1), std::domain_error);
  Array negative(2);
  negative << 1.0, -2.0;
  CHECK_THROWS_AS(estimate_mle(negative, 1, MleMode::Robust), std::domain_error);
}
