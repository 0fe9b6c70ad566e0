#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <random>

#include "melonfield/errors.hpp"
#include "melonfield/observables.hpp"
#include "melonfield/saddle.hpp"

using namespace melonfield;
using Float50 = boost::multiprecision::cpp_bin_float_50;

namespace {

// (-1)^q e^{x^2/2} d^q/dx^q e^{-x^2/2} by repeated symbolic differentiation: if the q-th derivative is
// P_q(x) e^{-x^2/2}, then P_{q+1} = P_q' - x P_q. Coefficients are exact integers.
std::vector<BigInt> rodrigues_hermite(int q) {
  std::vector<BigInt> p{1};
  for (int step = 0; step < q; ++step) {
    std::vector<BigInt> next(p.size() + 1, 0);
    for (std::size_t i = 1; i < p.size(); ++i) next[i - 1] += p[i] * static_cast<int>(i);
    for (std::size_t i = 0; i < p.size(); ++i) next[i + 1] -= p[i];
    p = next;
  }
  if (q % 2) {
    for (auto& c : p) c = -c;
  }
  return p;
}

}  // namespace

TEST_CASE("Hermite values") {
  CHECK(hermite_eval(1, 0.7) == doctest::Approx(0.7));
  CHECK(hermite_eval(2, 2.0) == doctest::Approx(3.0));
  CHECK(hermite_eval(3, 1.0) == doctest::Approx(-2.0));
  CHECK(hermite_eval(0, 5.0) == 1.0);
  CHECK(hermite_eval(2, 2.0, Rational(1, 2)) == doctest::Approx(3.5));
  const Complex z(0.3, -0.4);
  CHECK(std::abs(hermite_eval(2, z) - (z * z - 1.0)) < 1e-15);
}

TEST_CASE("recurrence matches the derivative definition at unit variance") {
  for (int q = 0; q <= 16; ++q) {
    const auto coeffs = rodrigues_hermite(q);
    const HermiteBasisMap map(q, Rational(1));
    for (int n = 0; n <= q; ++n) {
      const Rational expected = n < static_cast<int>(coeffs.size()) ? Rational(coeffs[n]) : Rational(0);
      CHECK(map.to_monomial(q, n) == expected);
    }
  }
}

TEST_CASE("monomial expansion coefficients") {
  const auto unit = monomial_to_hermite(2, Rational(1));
  REQUIRE(unit.size() == 2);
  CHECK(unit[0] == 1);
  CHECK(unit[1] == 1);
  const auto half = monomial_to_hermite(2, Rational(1, 2));
  CHECK(half[1] == Rational(1, 2));
  CHECK(monomial_to_hermite(0) == std::vector<Rational>{1});
  // sigma2 = 1/2 reproduces n!/(4^k k! (n-2k)!).
  for (int n = 0; n <= 12; ++n) {
    const auto c = monomial_to_hermite(n, Rational(1, 2));
    for (int k = 0; 2 * k <= n; ++k) {
      BigInt num = 1;
      for (int i = 2; i <= n; ++i) num *= i;
      BigInt den = 1;
      for (int i = 0; i < k; ++i) den *= 4;
      for (int i = 2; i <= k; ++i) den *= i;
      for (int i = 2; i <= n - 2 * k; ++i) den *= i;
      CHECK(c[k] == Rational(num, den));
    }
  }
}

TEST_CASE("basis round trip is exact through degree 16") {
  for (const Rational& s2 : {Rational(1, 2), Rational(1), Rational(3, 7)}) {
    const HermiteBasisMap map(16, s2);
    for (int n = 0; n <= 16; ++n) {
      std::vector<Rational> unit(17, Rational(0));
      unit[n] = 1;
      CHECK(map.hermite_coefficients_to_monomial(map.monomial_coefficients_to_hermite(unit)) == unit);
      CHECK(map.monomial_coefficients_to_hermite(map.hermite_coefficients_to_monomial(unit)) == unit);
    }
  }
}

TEST_CASE("monomial expansion has definite parity") {
  const HermiteBasisMap map(16, Rational(1));
  for (int n = 0; n <= 16; ++n) {
    for (int m = 0; m <= n; ++m) {
      if ((n - m) % 2) CHECK(map.to_hermite(n, m) == 0);
    }
    CHECK(map.to_hermite(n, n) == 1);
  }
}

TEST_CASE("expansion agrees numerically in 50 digits") {
  const Rational s2(1);
  for (int n = 0; n <= 14; ++n) {
    const auto c = monomial_to_hermite(n, s2);
    for (double xd : {-1.7, 0.3, 2.2}) {
      const Float50 x(xd);
      Float50 acc = 0;
      for (int k = 0; 2 * k <= n; ++k) acc += Float50(c[k].convert_to<Float50>()) * hermite_eval<Float50>(n - 2 * k, x, Float50(1));
      CHECK(abs(acc - pow(x, n)) < Float50(1e-40) * (1 + pow(abs(x), n)));
    }
  }
}

TEST_CASE("theta and matrix moments are mutually inverse") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    const double lambda = 0.02 + 0.1 * trial;
    std::vector<Complex> eig(5);
    for (auto& e : eig) e = Complex(g(rng), 0.2 * g(rng));
    const auto h = matrix_hermite_moments(eig, 8);
    const auto m = trace_moments(eig, 8);
    ThetaMoments theta;
    for (int p = 0; p <= 8; ++p) theta.values.push_back(theta_from_matrix(p, h, lambda));
    for (int p = 0; p <= 8; ++p) {
      CHECK(std::abs(matrix_from_theta(p, theta, lambda) - m[p]) < 1e-9 * (1 + std::abs(m[p])));
    }
  }
}

TEST_CASE("theta moments at degree zero and one") {
  const std::vector<Complex> eig(4, alpha_lo(3, 0.1));
  const auto h = matrix_hermite_moments(eig, 1);
  CHECK(std::abs(theta_from_matrix(0, h, 0.1) - 4.0) < 1e-15);
  CHECK(std::abs(theta_from_matrix(1, h, 0.1) - 4.0 * g2_lo(3, 0.1)) < 1e-13);
  ThetaMoments theta{{3.0, Complex(0.5, 0.25)}};
  CHECK(std::abs(matrix_from_theta(0, theta, 0.1) - 3.0) < 1e-15);
  const Complex scale = std::sqrt(0.1) / Complex(0, 2 * std::sqrt(2.0));
  CHECK(std::abs(matrix_from_theta(1, theta, 0.1) - scale * theta.values[1]) < 1e-15);
  CHECK_THROWS_AS(matrix_from_theta(2, theta, 0.1), DomainError);
  CHECK_THROWS_AS(theta_from_matrix(3, h, 0.1), DomainError);
}

TEST_CASE("KS distance") {
  const SemicircleLaw law = semicircle_law(3, 0.1);
  for (int n : {10, 100, 1000}) {
    std::vector<double> q;
    for (int i = 1; i <= n; ++i) q.push_back(law.quantile(static_cast<double>(i) / (n + 1)));
    CHECK(empirical_ks(q, law) <= 1.0 / (n + 1) + 1e-12);
  }
  const std::vector<double> zeros(50, 0.0);
  CHECK(empirical_ks(zeros, law) == doctest::Approx(0.5));
  const auto h = hermite_roots(64);
  std::vector<double> rescaled;
  for (double x : h) rescaled.push_back(std::sqrt(2.0 / (64 * law.scale())) * x);
  CHECK(empirical_ks(rescaled, law) < 0.15);
  CHECK_THROWS_AS(empirical_ks(std::vector<double>{}, law), DomainError);
}

TEST_CASE("histogram normalization") {
  const std::vector<double> xs{-0.9, -0.1, 0.05, 0.4, 0.4, 3.0};
  const auto h = empirical_histogram(xs, -1.0, 1.0, 4);
  double mass = 0.0;
  for (double d : h.density) mass += d * h.bin_width();
  CHECK(mass == doctest::Approx(5.0 / 6.0));
  CHECK(h.density[0] == doctest::Approx(1.0 / 6.0 / 0.5));
  CHECK_THROWS_AS(empirical_histogram(xs, 1.0, 1.0, 4), DomainError);
}

TEST_CASE("basis map JSON") {
  const auto j = HermiteBasisMap(3, Rational(1, 2)).to_json();
  CHECK(j.at("degree") == 3);
  CHECK(j.at("sigma2") == "1/2");
  CHECK(j.at("hermite_to_monomial")[2][0] == "-1/2");
}
