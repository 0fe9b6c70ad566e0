#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "melonfield/model_core.hpp"
#include "melonfield/series.hpp"

namespace melonfield {

/// Hermite polynomial orthogonal for exp(-x^2 / (2 sigma2)):
/// H_0 = 1, H_1 = x, H_{p+1} = x H_p - p sigma2 H_{p-1}.
/// sigma2 = 1 is (-1)^q e^{x^2/2} d^q/dx^q e^{-x^2/2}; sigma2 = 1/2 is e^{-D^2/4} x^n.
template <typename T>
T hermite_eval(int p, const T& x, const T& sigma2) {
  if (p == 0) return T(1);
  T prev(1);
  T curr = x;
  for (int k = 1; k < p; ++k) {
    T next = x * curr - T(k) * sigma2 * prev;
    prev = curr;
    curr = next;
  }
  return curr;
}

double hermite_eval(int p, double x, const Rational& sigma2 = Rational(1));
Complex hermite_eval(int p, Complex x, const Rational& sigma2 = Rational(1));

/// Coefficients c_k with x^n = sum_k c_k H_{n-2k}(x; sigma2): c_k = n! sigma2^k / (2^k k! (n-2k)!).
std::vector<Rational> monomial_to_hermite(int n, const Rational& sigma2 = Rational(1));

/// Exact triangular change of basis between monomials and Hermite polynomials through `degree`.
class HermiteBasisMap {
 public:
  HermiteBasisMap(int degree, Rational sigma2);

  int degree() const { return degree_; }
  const Rational& sigma2() const { return sigma2_; }

  /// Row n: x^n = sum_m to_hermite(n, m) H_m.
  const Rational& to_hermite(int n, int m) const { return to_hermite_[n][m]; }
  /// Row m: H_m = sum_n to_monomial(m, n) x^n.
  const Rational& to_monomial(int m, int n) const { return to_monomial_[m][n]; }

  /// Rewrites a polynomial given by monomial coefficients in the Hermite basis, and back.
  std::vector<Rational> monomial_coefficients_to_hermite(std::span<const Rational> monomial) const;
  std::vector<Rational> hermite_coefficients_to_monomial(std::span<const Rational> hermite) const;

  nlohmann::json to_json() const;

 private:
  int degree_;
  Rational sigma2_;
  std::vector<std::vector<Rational>> to_hermite_;
  std::vector<std::vector<Rational>> to_monomial_;
};

/// <Tr Theta_c^p> indexed by p.
struct ThetaMoments {
  std::vector<Complex> values;
};

/// (2 i sqrt 2 / sqrt lambda)^p <Tr H_p(M)>, where matrix_hermite_moments[q] = <Tr H_q(M)>.
Complex theta_from_matrix(int p, std::span<const Complex> matrix_hermite_moments, double coupling);

/// sum_k c_k (sqrt lambda / (2 i sqrt 2))^{p-2k} <Tr Theta^{p-2k}>, c_k from monomial_to_hermite at sigma2.
Complex matrix_from_theta(int p, const ThetaMoments& theta, double coupling, const Rational& sigma2 = Rational(1));

/// sum_k H_q(eigenvalue_k) for q = 0..max_degree.
std::vector<Complex> matrix_hermite_moments(std::span<const Complex> eigenvalues, int max_degree,
                                            const Rational& sigma2 = Rational(1));

/// sum_k eigenvalue_k^q for q = 0..max_degree.
std::vector<Complex> trace_moments(std::span<const Complex> eigenvalues, int max_degree);

/// Kolmogorov-Smirnov sup-distance between the empirical CDF of samples and the law's CDF.
double empirical_ks(std::span<const double> samples, const SemicircleLaw& law);

struct Histogram {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> density;  // normalized so that sum(density) * bin_width = fraction inside [lower, upper]
  double bin_width() const { return (upper - lower) / static_cast<double>(density.size()); }
};

Histogram empirical_histogram(std::span<const double> samples, double lower, double upper, int bins);

}  // namespace melonfield
