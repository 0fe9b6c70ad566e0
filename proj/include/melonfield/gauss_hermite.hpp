#pragma once

#include <vector>

namespace melonfield {

/// n-point Gauss rule for the weight exp(-x^2/2) on the real line, normalized so that
/// the weights sum to 1 (integrals are expectations under the standard normal).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermiteRule gauss_hermite_rule(int n);

}  // namespace melonfield
