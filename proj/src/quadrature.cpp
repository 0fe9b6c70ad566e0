#include "melonfield/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "melonfield/errors.hpp"
#include "melonfield/gauss_hermite.hpp"

namespace melonfield {

namespace {

struct Level {
  std::vector<Complex> values;
  Complex normalization;
};

Level integrate_at(int dimension, int observable_count, const WeightedIntegrand& integrand, const GaussHermiteRule& rule) {
  const int n = static_cast<int>(rule.nodes.size());
  std::vector<int> idx(dimension, 0);
  std::vector<double> x(dimension);
  std::vector<Complex> obs(observable_count);
  std::vector<Complex> acc(observable_count, Complex(0.0));
  Complex norm = 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < dimension; ++i) {
      x[i] = rule.nodes[idx[i]];
      w *= rule.weights[idx[i]];
    }
    const Complex f = w * integrand(x, obs);
    norm += f;
    for (int i = 0; i < observable_count; ++i) acc[i] += f * obs[i];
    int pos = dimension - 1;
    while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
    if (pos < 0) break;
  }
  if (std::abs(norm) == 0.0) throw ConvergenceError("gaussian_expectations: vanishing normalization");
  for (auto& a : acc) a /= norm;
  return {acc, norm};
}

}  // namespace

GaussianExpectations gaussian_expectations(int dimension, int observable_count, const WeightedIntegrand& integrand,
                                           const QuadratureConfig& config) {
  if (dimension < 1) throw DomainError("gaussian_expectations: dimension must be >= 1");
  if (!(config.tolerance > 0.0)) throw DomainError("gaussian_expectations: tolerance must be > 0");

  auto points = [dimension](int n) {
    double p = 1.0;
    for (int i = 0; i < dimension; ++i) p *= n;
    return p;
  };

  int n = std::max(2, config.initial_nodes);
  Level previous = integrate_at(dimension, observable_count, integrand, gauss_hermite_rule(n));
  double last_error = std::numeric_limits<double>::infinity();
  while (true) {
    const int next = std::max(n + 1, (3 * n + 1) / 2);
    if (next > config.max_nodes || points(next) > static_cast<double>(config.max_points)) {
      throw ConvergenceError("gaussian_expectations: refinement stalled at " + std::to_string(n) +
                             " nodes per dimension with error " + std::to_string(last_error));
    }
    Level current = integrate_at(dimension, observable_count, integrand, gauss_hermite_rule(next));
    std::vector<double> errors(observable_count);
    double worst = std::abs(current.normalization - previous.normalization) / std::abs(current.normalization);
    for (int i = 0; i < observable_count; ++i) {
      errors[i] = std::abs(current.values[i] - previous.values[i]);
      worst = std::max(worst, errors[i]);
    }
    n = next;
    last_error = worst;
    if (worst <= config.tolerance) {
      return {std::move(current.values), std::move(errors), n, current.normalization};
    }
    previous = std::move(current);
  }
}

}  // namespace melonfield
