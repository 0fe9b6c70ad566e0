#pragma once

#include <complex>

namespace melonfield {

using Complex = std::complex<double>;

/// One instance of the quartic melonic model in its intermediate-field form:
/// D colors, N x N matrices, coupling lambda.
struct ModelParams {
  int colors = 3;
  int size = 1;
  double coupling = 0.1;

  /// Throws DomainError unless colors >= 1, size >= 1, coupling >= 0.
  void validate() const;

  /// N^{(D-2)/2}: the scale separating the collapse point from the fluctuations.
  double fluctuation_scale() const;
};

/// Leading-order observables at the symmetric saddle.
struct LOQuantities {
  Complex alpha;
  double log_z_saddle = 0.0;
  double g2 = 0.0;
};

/// The Wigner law governing the next-to-leading fluctuations around alpha.
/// W^2 = s (x W - 1), density (s / 2 pi) sqrt(r^2 - x^2) on [-r, r].
class SemicircleLaw {
 public:
  /// Takes the scale s >= 1 directly; half width r = 2 / sqrt(s).
  explicit SemicircleLaw(double scale);

  double scale() const { return scale_; }
  double half_width() const { return half_width_; }

  double density(double x) const;
  double cdf(double x) const;
  /// Inverse CDF on [0, 1].
  double quantile(double p) const;
  /// Even moments are (1/s)^{j} Cat_j; odd moments vanish.
  double moment(int k) const;

 private:
  double scale_;
  double half_width_;
};

/// Limit values at lambda = 0.
inline constexpr double kAlphaAtZeroCoupling = 0.0;
inline constexpr double kG2AtZeroCoupling = 2.0;

/// Root of i sqrt(lambda/2) D a^2 + a + i sqrt(lambda/2) = 0 with the smaller modulus.
/// Purely imaginary with negative imaginary part. Requires lambda > 0.
Complex alpha_lo(int colors, double coupling);

/// The other root, kept for root-selection checks.
Complex alpha_lo_other_root(int colors, double coupling);

/// log Z at the saddle: (N^D/2) log(1+2D lambda) - N^D/(4 D lambda) (1 + 2 D lambda - 2 sqrt(1+2D lambda)).
double log_z_saddle(const ModelParams& params);

/// 2/(D lambda) (sqrt(1+2D lambda) - 1); lambda = 0 returns the limit 2.
double g2_lo(int colors, double coupling);

LOQuantities lo_quantities(const ModelParams& params);

/// s = 1 - alpha^2. lambda = 0 gives the unit law (s = 1, r = 2).
SemicircleLaw semicircle_law(int colors, double coupling);

enum class CutSide { none, above, below };

/// Resolvent of the law, normalized so that W(x) ~ 1/x at infinity.
/// For real x strictly inside (-r, r) a side must be given.
Complex nlo_resolvent(Complex x, const SemicircleLaw& law, CutSide side = CutSide::none);

/// 1/(x - alpha) + N^{-(D-2)/2} W(x - alpha).
Complex total_resolvent(Complex x, const ModelParams& params);

}  // namespace melonfield
