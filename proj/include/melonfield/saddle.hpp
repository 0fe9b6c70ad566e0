#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "melonfield/model_core.hpp"

namespace melonfield {

/// Roots of the physicists' Hermite polynomial H_N, ascending and exactly symmetric about 0.
/// They satisfy sum_{l != k} 1/(x_k - x_l) = x_k.
std::vector<double> hermite_roots(int n);

/// Per-color eigenvalues lambda_k^{(c)}. values[c][k].
struct Spectrum {
  std::vector<std::vector<Complex>> values;

  int colors() const { return static_cast<int>(values.size()); }
  int size() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }

  /// Every color carries the same list.
  static Spectrum symmetric(int colors, const std::vector<Complex>& values);

  /// Throws SingularityError if two eigenvalues of one color are closer than 1e-14.
  void check_distinct() const;
};

/// Next-to-leading fluctuations lambda_{k,1}: real, summing to zero, symmetric under negation.
struct ReducedSpectrum {
  std::vector<double> values;
};

enum class SolverMode { symmetric_ansatz, full_coupled };

struct SolverConfig {
  double tolerance = 1e-13;
  int max_iterations = 100;
  double damping = 1.0;
  SolverMode mode = SolverMode::symmetric_ansatz;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SaddleSolution {
  Spectrum spectrum;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Sup-norm of the residual after each accepted step, starting with the initial guess.
  std::vector<double> residual_history;
};

/// Residual of dS/d lambda_k^{(c)} = 0 for every (c, k), laid out as out[c * N + k]:
///   -lambda/N + (2/N^D) sum_{l != k} 1/(lambda_k - lambda_l)
///     - (i sqrt(lambda/2) / N^D) sum_{j_b, b != c} 1 / (1 + i sqrt(lambda/2) (lambda_k^{(c)} + sum_b lambda_{j_b}^{(b)})).
/// Symmetric mode requires identical colors and collapses the interaction sum over multisets.
std::vector<Complex> saddle_residual(const Spectrum& spectrum, const ModelParams& params,
                                     SolverMode mode = SolverMode::full_coupled);

double sup_norm(const std::vector<Complex>& v);

/// Upper bound on N^{D-1} interaction terms per component in full mode.
inline constexpr double kFullModeTermCap = 1e6;

/// Damped Newton iteration with analytic Jacobian, started from
/// alpha + sqrt(2 / (N^{D-1} s)) hermite_roots(N) plus seeded jitter.
SaddleSolution solve_newton(const ModelParams& params, const SolverConfig& config);

/// Starting point used by solve_newton (exposed for tests and diagnostics).
Spectrum initial_spectrum(const ModelParams& params, const SolverConfig& config);

/// Solution of (1 - alpha^2) x_k = (2/N) sum_{l != k} 1/(x_k - x_l): x_k = sqrt(2/(N s)) h_k.
ReducedSpectrum nlo_reduced_solve(const ModelParams& params);

/// Max over k of |(1 - alpha^2) x_k - (2/N) sum_{l != k} 1/(x_k - x_l)|.
double nlo_reduced_residual(const ReducedSpectrum& reduced, const ModelParams& params);

struct NloComparison {
  double max_deviation = 0.0;
  /// Absent when N = 1 (a single point has no meaningful distribution).
  std::optional<double> ks_distance;
  /// sqrt(N^{D-2}) Re(lambda_k - alpha), color 0, ascending.
  std::vector<double> rescaled;
};

/// Compares the converged spectrum of every color against the NLO prediction.
/// Deviation uses the full complex offset; the KS distance uses the real parts of color 0.
NloComparison compare_to_nlo(const SaddleSolution& solution, const ModelParams& params);

nlohmann::json to_json(const SaddleSolution& solution, const ModelParams& params);

}  // namespace melonfield
