#pragma once

#include "gi0nn/rng.hpp"

namespace gi0nn {

// log Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
// Throws std::domain_error for x <= 0 or non-finite x.
double ln_gamma(double x);

// psi(x) = d/dx log Gamma(x) for x > 0.
// Recurrence psi(x) = psi(x+1) - 1/x below the asymptotic threshold,
// Bernoulli series above it.
double digamma(double x);

// psi'(x) for x > 0; positive and strictly decreasing.
double trigamma(double x);

// One draw from Gamma(shape, rate), density
//   rate^shape x^{shape-1} e^{-rate x} / Gamma(shape).
// Marsaglia-Tsang squeeze; shapes below 1 use the U^{1/shape} boost.
double sample_gamma(RngStream& stream, double shape, double rate);

// Standard normal draw (Marsaglia polar method), used by sample_gamma.
double sample_normal(RngStream& stream);

}  // namespace gi0nn
