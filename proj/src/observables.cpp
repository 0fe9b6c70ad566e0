#include "melonfield/observables.hpp"

#include <algorithm>
#include <cmath>

#include "melonfield/errors.hpp"

namespace melonfield {

namespace {

Rational factorial(int n) {
  Rational out = 1;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

Rational rational_pow(const Rational& base, int exponent) {
  Rational out = 1;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

void require_sigma2(const Rational& sigma2) {
  if (sigma2 <= 0) throw DomainError("Hermite family: sigma2 must be positive");
}

}  // namespace

double hermite_eval(int p, double x, const Rational& sigma2) {
  if (p < 0) throw DomainError("hermite_eval: p must be >= 0");
  require_sigma2(sigma2);
  return hermite_eval<double>(p, x, sigma2.convert_to<double>());
}

Complex hermite_eval(int p, Complex x, const Rational& sigma2) {
  if (p < 0) throw DomainError("hermite_eval: p must be >= 0");
  require_sigma2(sigma2);
  return hermite_eval<Complex>(p, x, Complex(sigma2.convert_to<double>(), 0.0));
}

std::vector<Rational> monomial_to_hermite(int n, const Rational& sigma2) {
  if (n < 0) throw DomainError("monomial_to_hermite: n must be >= 0");
  require_sigma2(sigma2);
  std::vector<Rational> coeffs;
  for (int k = 0; 2 * k <= n; ++k) {
    coeffs.push_back(factorial(n) * rational_pow(sigma2, k) /
                     (rational_pow(Rational(2), k) * factorial(k) * factorial(n - 2 * k)));
  }
  return coeffs;
}

HermiteBasisMap::HermiteBasisMap(int degree, Rational sigma2) : degree_(degree), sigma2_(std::move(sigma2)) {
  if (degree < 0) throw DomainError("HermiteBasisMap: degree must be >= 0");
  require_sigma2(sigma2_);
  const int size = degree + 1;
  to_monomial_.assign(size, std::vector<Rational>(size, Rational(0)));
  to_hermite_.assign(size, std::vector<Rational>(size, Rational(0)));

  // Monomial expansion of H_m from the three-term recurrence.
  to_monomial_[0][0] = 1;
  if (degree >= 1) to_monomial_[1][1] = 1;
  for (int m = 1; m < degree; ++m) {
    for (int n = 0; n <= m; ++n) to_monomial_[m + 1][n + 1] += to_monomial_[m][n];
    for (int n = 0; n <= m - 1; ++n) to_monomial_[m + 1][n] -= Rational(m) * sigma2_ * to_monomial_[m - 1][n];
  }

  for (int n = 0; n <= degree; ++n) {
    const auto coeffs = monomial_to_hermite(n, sigma2_);
    for (int k = 0; k < static_cast<int>(coeffs.size()); ++k) to_hermite_[n][n - 2 * k] = coeffs[k];
  }
}

std::vector<Rational> HermiteBasisMap::monomial_coefficients_to_hermite(std::span<const Rational> monomial) const {
  if (static_cast<int>(monomial.size()) > degree_ + 1) throw DomainError("HermiteBasisMap: polynomial degree too high");
  std::vector<Rational> out(monomial.size(), Rational(0));
  for (std::size_t n = 0; n < monomial.size(); ++n) {
    if (monomial[n] == 0) continue;
    for (std::size_t m = 0; m <= n; ++m) out[m] += monomial[n] * to_hermite_[n][m];
  }
  return out;
}

std::vector<Rational> HermiteBasisMap::hermite_coefficients_to_monomial(std::span<const Rational> hermite) const {
  if (static_cast<int>(hermite.size()) > degree_ + 1) throw DomainError("HermiteBasisMap: polynomial degree too high");
  std::vector<Rational> out(hermite.size(), Rational(0));
  for (std::size_t m = 0; m < hermite.size(); ++m) {
    if (hermite[m] == 0) continue;
    for (std::size_t n = 0; n <= m; ++n) out[n] += hermite[m] * to_monomial_[m][n];
  }
  return out;
}

nlohmann::json HermiteBasisMap::to_json() const {
  nlohmann::json rows_h = nlohmann::json::array();
  nlohmann::json rows_m = nlohmann::json::array();
  for (int n = 0; n <= degree_; ++n) {
    nlohmann::json rh = nlohmann::json::array();
    nlohmann::json rm = nlohmann::json::array();
    for (int m = 0; m <= n; ++m) {
      rh.push_back(format_rational(to_hermite_[n][m]));
      rm.push_back(format_rational(to_monomial_[n][m]));
    }
    rows_h.push_back(rh);
    rows_m.push_back(rm);
  }
  return {{"degree", degree_},
          {"sigma2", format_rational(sigma2_)},
          {"monomial_to_hermite", rows_h},
          {"hermite_to_monomial", rows_m}};
}

Complex theta_from_matrix(int p, std::span<const Complex> matrix_hermite_moments, double coupling) {
  if (p < 0) throw DomainError("theta_from_matrix: p must be >= 0");
  if (!(coupling > 0.0)) throw DomainError("theta_from_matrix: coupling must be > 0");
  if (static_cast<int>(matrix_hermite_moments.size()) <= p) {
    throw DomainError("theta_from_matrix: matrix Hermite moments must be given through degree p");
  }
  const Complex factor(0.0, 2.0 * std::sqrt(2.0) / std::sqrt(coupling));
  return std::pow(factor, p) * matrix_hermite_moments[p];
}

Complex matrix_from_theta(int p, const ThetaMoments& theta, double coupling, const Rational& sigma2) {
  if (p < 0) throw DomainError("matrix_from_theta: p must be >= 0");
  if (!(coupling > 0.0)) throw DomainError("matrix_from_theta: coupling must be > 0");
  if (static_cast<int>(theta.values.size()) <= p) {
    throw DomainError("matrix_from_theta: insufficient theta moments (need degree " + std::to_string(p) + ", have " +
                      std::to_string(static_cast<int>(theta.values.size()) - 1) + ")");
  }
  const Complex scale = Complex(std::sqrt(coupling), 0.0) / Complex(0.0, 2.0 * std::sqrt(2.0));
  const auto coeffs = monomial_to_hermite(p, sigma2);
  Complex acc = 0.0;
  for (int k = 0; k < static_cast<int>(coeffs.size()); ++k) {
    const int q = p - 2 * k;
    acc += coeffs[k].convert_to<double>() * std::pow(scale, q) * theta.values[q];
  }
  return acc;
}

std::vector<Complex> matrix_hermite_moments(std::span<const Complex> eigenvalues, int max_degree,
                                            const Rational& sigma2) {
  if (max_degree < 0) throw DomainError("matrix_hermite_moments: max_degree must be >= 0");
  require_sigma2(sigma2);
  const Complex s2(sigma2.convert_to<double>(), 0.0);
  std::vector<Complex> out(max_degree + 1, Complex(0.0));
  for (const Complex& x : eigenvalues) {
    Complex prev = 1.0;
    out[0] += prev;
    if (max_degree == 0) continue;
    Complex curr = x;
    out[1] += curr;
    for (int k = 1; k < max_degree; ++k) {
      const Complex next = x * curr - static_cast<double>(k) * s2 * prev;
      prev = curr;
      curr = next;
      out[k + 1] += curr;
    }
  }
  return out;
}

std::vector<Complex> trace_moments(std::span<const Complex> eigenvalues, int max_degree) {
  if (max_degree < 0) throw DomainError("trace_moments: max_degree must be >= 0");
  std::vector<Complex> out(max_degree + 1, Complex(0.0));
  for (const Complex& x : eigenvalues) {
    Complex power = 1.0;
    for (int q = 0; q <= max_degree; ++q) {
      out[q] += power;
      power *= x;
    }
  }
  return out;
}

double empirical_ks(std::span<const double> samples, const SemicircleLaw& law) {
  if (samples.empty()) throw DomainError("empirical_ks: samples must be non-empty");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = law.cdf(sorted[i]);
    sup = std::max({sup, (i + 1) / n - f, f - i / n});
  }
  return sup;
}

Histogram empirical_histogram(std::span<const double> samples, double lower, double upper, int bins) {
  if (bins < 1 || !(upper > lower)) throw DomainError("empirical_histogram: need bins >= 1 and upper > lower");
  Histogram h{lower, upper, std::vector<double>(bins, 0.0)};
  if (samples.empty()) return h;
  const double width = h.bin_width();
  for (double x : samples) {
    if (x < lower || x > upper) continue;
    int b = static_cast<int>((x - lower) / width);
    b = std::clamp(b, 0, bins - 1);
    h.density[b] += 1.0;
  }
  for (double& d : h.density) d /= static_cast<double>(samples.size()) * width;
  return h;
}

}  // namespace melonfield
