#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "melonfield/model_core.hpp"

namespace melonfield {

struct QuadratureConfig {
  /// Absolute error target for every requested expectation.
  double tolerance = 1e-10;
  int initial_nodes = 12;
  int max_nodes = 160;
  /// Refinement stops with ConvergenceError once nodes^dimension would exceed this.
  std::int64_t max_points = 30'000'000;
};

/// Fills observable values at x and returns the complex weight factor w(x); the full
/// integrand is exp(-|x|^2/2) w(x) O(x).
using WeightedIntegrand = std::function<Complex(std::span<const double> x, std::span<Complex> observables)>;

struct GaussianExpectations {
  std::vector<Complex> values;
  /// |value(n) - value(previous n)| at the final refinement.
  std::vector<double> errors;
  int nodes_per_dimension = 0;
  /// Integral of exp(-|x|^2/2) w(x) relative to the standard Gaussian measure.
  Complex normalization;
};

/// <O_i> = int e^{-|x|^2/2} w O_i / int e^{-|x|^2/2} w over R^dimension by tensor-product
/// Gauss-Hermite rules, refining the node count by 3/2 until successive estimates agree.
GaussianExpectations gaussian_expectations(int dimension, int observable_count, const WeightedIntegrand& integrand,
                                           const QuadratureConfig& config = {});

}  // namespace melonfield
