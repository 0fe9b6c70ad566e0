#include "melonfield/series.hpp"

#include <algorithm>
#include <optional>

#include "melonfield/errors.hpp"

namespace melonfield {

namespace {

bool is_integer_literal(const std::string& text, bool allow_sign) {
  std::size_t start = (allow_sign && !text.empty() && text[0] == '-') ? 1 : 0;
  if (start == text.size()) return false;
  return std::all_of(text.begin() + start, text.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
}

}  // namespace

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  const std::string num_text = text.substr(0, slash);
  const std::string den_text = slash == std::string::npos ? "1" : text.substr(slash + 1);
  if (!is_integer_literal(num_text, true) || !is_integer_literal(den_text, false)) {
    throw DomainError("parse_rational: malformed rational '" + text + "'");
  }
  const BigInt den(den_text);
  if (den == 0) throw DomainError("parse_rational: zero denominator in '" + text + "'");
  return Rational(BigInt(num_text), den);
}

std::string format_rational(const Rational& value) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

RationalSeries::RationalSeries(int order) {
  if (order < 0) throw DomainError("RationalSeries: order must be >= 0");
  coefficients_.assign(order + 1, Rational(0));
}

RationalSeries::RationalSeries(std::initializer_list<Rational> coefficients) : coefficients_(coefficients) {
  if (coefficients_.empty()) throw DomainError("RationalSeries: needs at least one coefficient");
}

RationalSeries::RationalSeries(std::vector<Rational> coefficients) : coefficients_(std::move(coefficients)) {
  if (coefficients_.empty()) throw DomainError("RationalSeries: needs at least one coefficient");
}

RationalSeries RationalSeries::constant(const Rational& value, int order) {
  RationalSeries s(order);
  s[0] = value;
  return s;
}

RationalSeries RationalSeries::variable(int order) {
  RationalSeries s(order);
  if (order >= 1) s[1] = 1;
  return s;
}

RationalSeries RationalSeries::truncated(int order) const {
  if (order < 0) throw DomainError("RationalSeries::truncated: order must be >= 0");
  RationalSeries out(order);
  for (int n = 0; n <= std::min(order, this->order()); ++n) out[n] = coefficients_[n];
  return out;
}

RationalSeries& RationalSeries::operator+=(const RationalSeries& other) {
  coefficients_.resize(std::min(coefficients_.size(), other.coefficients_.size()));
  for (std::size_t n = 0; n < coefficients_.size(); ++n) coefficients_[n] += other.coefficients_[n];
  return *this;
}

RationalSeries& RationalSeries::operator-=(const RationalSeries& other) {
  coefficients_.resize(std::min(coefficients_.size(), other.coefficients_.size()));
  for (std::size_t n = 0; n < coefficients_.size(); ++n) coefficients_[n] -= other.coefficients_[n];
  return *this;
}

RationalSeries& RationalSeries::operator*=(const Rational& scalar) {
  for (auto& c : coefficients_) c *= scalar;
  return *this;
}

RationalSeries operator*(const RationalSeries& a, const RationalSeries& b) {
  const int order = std::min(a.order(), b.order());
  RationalSeries out(order);
  for (int i = 0; i <= order; ++i) {
    if (a[i] == 0) continue;
    for (int j = 0; i + j <= order; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

RationalSeries RationalSeries::operator-() const {
  RationalSeries out(*this);
  for (auto& c : out.coefficients_) c = -c;
  return out;
}

RationalSeries RationalSeries::shifted(int shift) const {
  if (shift < 0) throw DomainError("RationalSeries::shifted: shift must be >= 0");
  RationalSeries out(order());
  for (int n = 0; n + shift <= order(); ++n) out[n + shift] = coefficients_[n];
  return out;
}

RationalSeries RationalSeries::inverse() const {
  if (coefficients_[0] == 0) throw DomainError("RationalSeries::inverse: constant term is zero");
  RationalSeries out(order());
  out[0] = 1 / coefficients_[0];
  for (int n = 1; n <= order(); ++n) {
    Rational acc = 0;
    for (int k = 1; k <= n; ++k) acc += coefficients_[k] * out[n - k];
    out[n] = -acc / coefficients_[0];
  }
  return out;
}

RationalSeries RationalSeries::compose(const RationalSeries& inner) const {
  if (inner[0] != 0) throw DomainError("RationalSeries::compose: inner series must have zero constant term");
  const int order = std::min(this->order(), inner.order());
  // Horner: c_0 + inner (c_1 + inner (c_2 + ...)).
  RationalSeries acc = RationalSeries::constant(coefficients_[order], order);
  const RationalSeries in = inner.truncated(order);
  for (int n = order - 1; n >= 0; --n) {
    acc = acc * in;
    acc[0] += coefficients_[n];
  }
  return acc;
}

nlohmann::json RationalSeries::to_json() const {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : coefficients_) coeffs.push_back(format_rational(c));
  return {{"order", order()}, {"coefficients", coeffs}};
}

RationalSeries RationalSeries::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("order") || !j.contains("coefficients")) {
    throw DomainError("RationalSeries::from_json: expected {\"order\", \"coefficients\"}");
  }
  const int order = j.at("order").get<int>();
  const auto& coeffs = j.at("coefficients");
  if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != order + 1) {
    throw DomainError("RationalSeries::from_json: coefficient count does not match order");
  }
  std::vector<Rational> values;
  values.reserve(coeffs.size());
  for (const auto& c : coeffs) values.push_back(parse_rational(c.get<std::string>()));
  return RationalSeries(std::move(values));
}

Rational generalized_binomial(const Rational& a, int n) {
  if (n < 0) return 0;
  Rational out = 1;
  for (int k = 0; k < n; ++k) out *= (a - k) / Rational(k + 1);
  return out;
}

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

RationalSeries g2_series(int colors, int order) {
  if (colors < 1) throw DomainError("g2_series: colors must be >= 1");
  RationalSeries out(order);
  // (2/(D lambda)) sum_{m>=1} binom(1/2, m) (2 D lambda)^m  =>  c_n = (2/D) binom(1/2, n+1) (2D)^{n+1}.
  const Rational half(1, 2);
  BigInt power = 2 * colors;
  for (int n = 0; n <= order; ++n) {
    out[n] = Rational(2, colors) * generalized_binomial(half, n + 1) * Rational(power);
    power *= 2 * colors;
  }
  return out;
}

RationalSeries catalan_oracle(int colors, int order) {
  if (colors < 1) throw DomainError("catalan_oracle: colors must be >= 1");
  if (order < 0) throw DomainError("catalan_oracle: order must be >= 0");
  std::vector<BigInt> catalan(order + 1);
  catalan[0] = 1;
  for (int n = 0; n < order; ++n) {
    BigInt acc = 0;
    for (int k = 0; k <= n; ++k) acc += catalan[k] * catalan[n - k];
    catalan[n + 1] = acc;
  }
  RationalSeries out(order);
  Rational power = 1;
  const Rational step(-colors, 2);
  for (int n = 0; n <= order; ++n) {
    out[n] = 2 * Rational(catalan[n]) * power;
    power *= step;
  }
  return out;
}

bool fixed_point_check(const RationalSeries& series, int colors) {
  if (series.order() < 1) throw DomainError("fixed_point_check: series order must be >= 1");
  const int order = series.order();
  RationalSeries rhs = (series * series).shifted(1) * Rational(-colors, 4);
  rhs[0] += 2;
  return rhs.truncated(order) == series;
}

RationalSeries tutte_series(int order) {
  RationalSeries out(order);
  BigInt three_power = 1;
  for (int n = 0; n <= order; ++n) {
    const Rational magnitude = Rational(2 * three_power * binomial(2 * n, n), BigInt(n + 2) * (n + 1));
    out[n] = (n % 2 == 0) ? magnitude : -magnitude;
    three_power *= 3;
  }
  return out;
}

std::vector<RationalSeries> planar_moments(int order) {
  if (order < 0) throw DomainError("planar_moments: order must be >= 0");
  const int top = order + 1;  // highest even index j (moment m_{2j}) needed
  // known[j][p]: coefficient of t^p in m_{2j}; odd moments vanish for the even potential.
  std::vector<std::vector<std::optional<Rational>>> known(top + 2, std::vector<std::optional<Rational>>(order + 1));
  for (int p = 0; p <= order; ++p) known[0][p] = Rational(p == 0 ? 1 : 0);

  auto need = [&](int j, int p) -> const Rational& {
    if (j < 0 || j >= static_cast<int>(known.size()) || p < 0 || p > order || !known[j][p]) {
      throw ClosureError("planar_moments: coefficient [t^" + std::to_string(p) + "] m_" + std::to_string(2 * j) +
                         " requested before it was fixed");
    }
    return *known[j][p];
  };

  // Loop equation at k = 2(j-1): m_{2j} = sum_{a+b=j-1} m_{2a} m_{2b} - t m_{2j+2}.
  for (int p = 0; p <= order; ++p) {
    for (int j = 1; j <= top - p; ++j) {
      Rational value = 0;
      for (int a = 0; a <= j - 1; ++a) {
        const int b = j - 1 - a;
        for (int q = 0; q <= p; ++q) value += need(a, q) * need(b, p - q);
      }
      if (p >= 1) value -= need(j + 1, p - 1);
      known[j][p] = value;
    }
  }

  std::vector<RationalSeries> moments;
  moments.reserve(top + 1);
  for (int j = 0; j <= top; ++j) {
    const int available = (j == 0) ? order : top - j;
    RationalSeries m(available);
    for (int p = 0; p <= available; ++p) m[p] = need(j, p);
    moments.push_back(std::move(m));
  }
  return moments;
}

RationalSeries planar_moment_solve(int order) { return planar_moments(order).at(1); }

}  // namespace melonfield
