#include "melonfield/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "melonfield/errors.hpp"

namespace melonfield {

namespace {

void require_positive_coupling(double coupling, const char* op) {
  if (!(coupling > 0.0) || !std::isfinite(coupling)) {
    throw DomainError(std::string(op) + ": coupling must be > 0 (got " + std::to_string(coupling) + ")");
  }
}

void require_colors(int colors, const char* op) {
  if (colors < 1) throw DomainError(std::string(op) + ": colors must be >= 1");
}

// sqrt(1 + 2 D lambda)
double discriminant_root(int colors, double coupling) {
  return std::sqrt(1.0 + 2.0 * colors * coupling);
}

}  // namespace

void ModelParams::validate() const {
  if (colors < 1) throw DomainError("ModelParams: colors must be >= 1");
  if (size < 1) throw DomainError("ModelParams: size must be >= 1");
  if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw DomainError("ModelParams: coupling must be >= 0");
}

double ModelParams::fluctuation_scale() const {
  return std::pow(static_cast<double>(size), 0.5 * (colors - 2));
}

SemicircleLaw::SemicircleLaw(double scale) : scale_(scale), half_width_(2.0 / std::sqrt(scale)) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("SemicircleLaw: scale must be > 0");
}

double SemicircleLaw::density(double x) const {
  const double r2 = half_width_ * half_width_;
  if (x * x >= r2) return 0.0;
  return scale_ / (2.0 * std::numbers::pi) * std::sqrt(r2 - x * x);
}

double SemicircleLaw::cdf(double x) const {
  if (x <= -half_width_) return 0.0;
  if (x >= half_width_) return 1.0;
  const double r2 = half_width_ * half_width_;
  const double value = 0.5 + (0.25 * scale_ * x * std::sqrt(r2 - x * x) + std::asin(x / half_width_)) / std::numbers::pi;
  return std::clamp(value, 0.0, 1.0);
}

double SemicircleLaw::quantile(double p) const {
  if (p <= 0.0) return -half_width_;
  if (p >= 1.0) return half_width_;
  double lo = -half_width_;
  double hi = half_width_;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * half_width_; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double SemicircleLaw::moment(int k) const {
  if (k < 0) throw DomainError("SemicircleLaw::moment: k must be >= 0");
  if (k % 2 == 1) return 0.0;
  const int j = k / 2;
  double catalan = 1.0;
  for (int n = 0; n < j; ++n) catalan = catalan * 2.0 * (2 * n + 1) / (n + 2);
  return catalan * std::pow(scale_, -j);
}

Complex alpha_lo(int colors, double coupling) {
  require_colors(colors, "alpha_lo");
  require_positive_coupling(coupling, "alpha_lo");
  // (-1 + sqrt(1+2D lambda)) / (2 i D sqrt(lambda/2)), rationalized to avoid cancellation:
  // = -i sqrt(2 lambda) / (1 + sqrt(1 + 2 D lambda)).
  const double magnitude = std::sqrt(2.0 * coupling) / (1.0 + discriminant_root(colors, coupling));
  return {0.0, -magnitude};
}

Complex alpha_lo_other_root(int colors, double coupling) {
  require_colors(colors, "alpha_lo_other_root");
  require_positive_coupling(coupling, "alpha_lo_other_root");
  const double numerator = -1.0 - discriminant_root(colors, coupling);
  const double denominator = 2.0 * colors * std::sqrt(coupling / 2.0);
  return Complex(numerator, 0.0) / Complex(0.0, denominator);
}

double log_z_saddle(const ModelParams& params) {
  params.validate();
  require_positive_coupling(params.coupling, "log_z_saddle");
  const double volume = std::pow(static_cast<double>(params.size), params.colors);
  const double d = params.colors;
  const double lambda = params.coupling;
  const double u = 1.0 + 2.0 * d * lambda;
  return 0.5 * volume * std::log(u) - volume / (4.0 * d * lambda) * (u - 2.0 * std::sqrt(u));
}

double g2_lo(int colors, double coupling) {
  require_colors(colors, "g2_lo");
  if (coupling == 0.0) return kG2AtZeroCoupling;
  require_positive_coupling(coupling, "g2_lo");
  // 2/(D lambda) (-1 + sqrt(u)) == 4 / (1 + sqrt(u))
  return 4.0 / (1.0 + discriminant_root(colors, coupling));
}

LOQuantities lo_quantities(const ModelParams& params) {
  params.validate();
  return {alpha_lo(params.colors, params.coupling), log_z_saddle(params), g2_lo(params.colors, params.coupling)};
}

SemicircleLaw semicircle_law(int colors, double coupling) {
  require_colors(colors, "semicircle_law");
  if (coupling == 0.0) return SemicircleLaw(1.0);
  const Complex alpha = alpha_lo(colors, coupling);
  // alpha is purely imaginary, so 1 - alpha^2 = 1 + |alpha|^2.
  return SemicircleLaw(1.0 + std::norm(alpha));
}

Complex nlo_resolvent(Complex x, const SemicircleLaw& law, CutSide side) {
  const double r = law.half_width();
  if (x.imag() == 0.0 && std::abs(x.real()) < r) {
    const double inside = std::sqrt(r * r - x.real() * x.real());
    const double s = law.scale();
    switch (side) {
      case CutSide::above:
        return {0.5 * s * x.real(), -0.5 * s * inside};
      case CutSide::below:
        return {0.5 * s * x.real(), 0.5 * s * inside};
      case CutSide::none:
        throw BranchCutError("nlo_resolvent: x = " + std::to_string(x.real()) + " lies on the cut (-" +
                             std::to_string(r) + ", " + std::to_string(r) + "); specify a side");
    }
  }
  // The product of principal roots behaves like x at infinity on every sheet point off the cut.
  // W = (s x - s sqrt(x-r) sqrt(x+r)) / 2 = 2 / (x + sqrt(x-r) sqrt(x+r)).
  const Complex root = std::sqrt(x - r) * std::sqrt(x + r);
  return 2.0 / (x + root);
}

Complex total_resolvent(Complex x, const ModelParams& params) {
  params.validate();
  require_positive_coupling(params.coupling, "total_resolvent");
  const Complex alpha = alpha_lo(params.colors, params.coupling);
  const Complex shifted = x - alpha;
  if (shifted == Complex(0.0, 0.0)) throw PoleError("total_resolvent: x coincides with the collapse point alpha");
  const SemicircleLaw law = semicircle_law(params.colors, params.coupling);
  return 1.0 / shifted + nlo_resolvent(shifted, law) / params.fluctuation_scale();
}

}  // namespace melonfield
