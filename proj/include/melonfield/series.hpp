#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

namespace melonfield {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "p" or "p/q" (optional leading '-').
Rational parse_rational(const std::string& text);
std::string format_rational(const Rational& value);

/// Truncated power series with exact rational coefficients, c_0 + c_1 t + ... + c_order t^order.
/// Binary operations truncate to the smaller order of their operands.
class RationalSeries {
 public:
  explicit RationalSeries(int order);
  RationalSeries(std::initializer_list<Rational> coefficients);
  explicit RationalSeries(std::vector<Rational> coefficients);

  static RationalSeries constant(const Rational& value, int order);
  /// The series t (requires order >= 1 to be nonzero).
  static RationalSeries variable(int order);

  int order() const { return static_cast<int>(coefficients_.size()) - 1; }
  const std::vector<Rational>& coefficients() const { return coefficients_; }
  const Rational& operator[](int n) const { return coefficients_.at(n); }
  Rational& operator[](int n) { return coefficients_.at(n); }

  RationalSeries truncated(int order) const;

  RationalSeries& operator+=(const RationalSeries& other);
  RationalSeries& operator-=(const RationalSeries& other);
  RationalSeries& operator*=(const Rational& scalar);

  friend RationalSeries operator+(RationalSeries a, const RationalSeries& b) { return a += b; }
  friend RationalSeries operator-(RationalSeries a, const RationalSeries& b) { return a -= b; }
  friend RationalSeries operator*(RationalSeries a, const Rational& k) { return a *= k; }
  friend RationalSeries operator*(const Rational& k, RationalSeries a) { return a *= k; }
  friend RationalSeries operator*(const RationalSeries& a, const RationalSeries& b);
  RationalSeries operator-() const;

  /// Multiplies by t^shift, dropping terms beyond the order.
  RationalSeries shifted(int shift) const;

  /// 1/series; constant term must be nonzero.
  RationalSeries inverse() const;

  /// this(inner(t)); inner must have zero constant term.
  RationalSeries compose(const RationalSeries& inner) const;

  friend bool operator==(const RationalSeries& a, const RationalSeries& b) {
    return a.coefficients_ == b.coefficients_;
  }

  nlohmann::json to_json() const;
  static RationalSeries from_json(const nlohmann::json& j);

 private:
  std::vector<Rational> coefficients_;
};

/// binom(a, n) for rational a.
Rational generalized_binomial(const Rational& a, int n);
BigInt binomial(int n, int k);

/// Coefficients of G2 = 2/(D lambda) (sqrt(1 + 2 D lambda) - 1) via the binomial series of sqrt(1+u).
RationalSeries g2_series(int colors, int order);

/// Same series built only from the Catalan recurrence: 2 Cat_n (-D/2)^n.
RationalSeries catalan_oracle(int colors, int order);

/// True iff series == 2 - (D lambda / 4) series^2 through its order. Requires order >= 1.
bool fixed_point_check(const RationalSeries& series, int colors);

/// Planar rooted quadrangulation count as printed: 2 3^n / ((n+2)(n+1)) binom(2n, n) (-t)^n.
RationalSeries tutte_series(int order);

/// Even planar moments m_0, m_2, ..., m_{2(order+1)} of the quartic one-matrix model
/// exp(-N (Tr M^2 / 2 + t Tr M^4 / 4)), each truncated to the order at which the recursion fixes it.
/// Element j holds m_{2j}; element j has order (order + 1 - j) for j >= 1.
std::vector<RationalSeries> planar_moments(int order);

/// m_2(t) from the planar loop equations sum_{n=0}^{k} m_n m_{k-n} = m_{k+2} + t m_{k+4}.
RationalSeries planar_moment_solve(int order);

}  // namespace melonfield
