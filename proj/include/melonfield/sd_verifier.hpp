#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "melonfield/monte_carlo.hpp"
#include "melonfield/quadrature.hpp"
#include "melonfield/shifted_model.hpp"

namespace melonfield {

enum class EstimatorMethod { quadrature, monte_carlo };

std::string to_string(EstimatorMethod method);

struct CorrelatorEstimate {
  Complex value;
  /// Statistical error; 0 for quadrature.
  double std_error = 0.0;
  EstimatorMethod method = EstimatorMethod::quadrature;
  /// Total quadrature nodes, or measured Monte Carlo sweeps summed over chains.
  std::int64_t samples_or_nodes = 0;
  /// |mean phase| for Monte Carlo; 1 for quadrature.
  double phase_mean = 1.0;
  /// Last refinement difference for quadrature; 0 for Monte Carlo.
  double quadrature_error = 0.0;
};

/// Largest N^D for which the dense log-determinant factor is built.
inline constexpr std::int64_t kDenseDimensionCap = 4096;
/// Mean phase magnitude below which Monte Carlo estimates are declared unreliable.
inline constexpr double kSignProblemThreshold = 0.05;
/// Quadrature dimension cap for the N = 1 reduction.
inline constexpr int kMaxQuadratureColors = 4;

/// <prod_c x_c^{m_c}> in the N = 1 shifted model, weight exp(-|x|^2/2) exp(-alpha S) / (1 - alpha S), S = sum_c x_c.
/// `exponents` has one entry per color.
CorrelatorEstimate correlator_quadrature(const ShiftedModel& model, std::span<const int> exponents,
                                         const QuadratureConfig& config = {});
std::vector<CorrelatorEstimate> correlator_quadrature(const ShiftedModel& model,
                                                      const std::vector<std::vector<int>>& exponents,
                                                      const QuadratureConfig& config = {});

/// Same moments in the unshifted N = 1 model, weight exp(-|x|^2/2) / (1 + i sqrt(lambda/2) S).
std::vector<CorrelatorEstimate> correlator_quadrature_unshifted(const ModelParams& params,
                                                                const std::vector<std::vector<int>>& exponents,
                                                                const QuadratureConfig& config = {});

/// Product of traces prod_i Tr Mt_{c_i}^{p_i}; an empty word is 1.
struct TraceWord {
  std::vector<std::pair<int, int>> factors;  // (color, power)
};

/// Reweighted Metropolis estimate of <word>. Throws SignProblemError below kSignProblemThreshold.
CorrelatorEstimate correlator_mc(const ShiftedModel& model, const TraceWord& word, const MonteCarloConfig& config);

enum class SDForm { exact, leading };

std::string to_string(SDForm form);

struct EstimatorConfig {
  EstimatorMethod method = EstimatorMethod::quadrature;
  QuadratureConfig quadrature;
  MonteCarloConfig monte_carlo;
  /// Evaluate the log-derivative term through the dense Kronecker-sum resolvent (true) or spectrally.
  bool dense_resolvent = true;
};

struct SDRequest {
  int color = 0;
  int k = 0;
  SDForm form = SDForm::exact;
};

struct SDEntry {
  int color = 0;
  int k = 0;
  SDForm form = SDForm::exact;
  Complex residual;
  /// Magnitude of the largest contributing term.
  double scale = 0.0;
  /// |residual| / scale (0 when every term vanishes).
  double normalized = 0.0;
  EstimatorMethod method = EstimatorMethod::quadrature;
  double std_error = 0.0;
  double phase_mean = 1.0;
  bool sign_problem = false;
  /// Term expectations in the order they enter the identity.
  std::vector<Complex> terms;
};

nlohmann::json to_json(const SDEntry& entry);

/// Evaluates every requested identity from one estimator run.
/// exact:   <sum_{n<k} Tr^n Tr^{k-1-n}> - N <Tr^{k+1}> - alpha N^{D/2} <Tr^k> + (alpha/nu) <Tr[Mt_c^k Ptr_{!=c} R]>
/// leading: <sum_{n<k} Tr^n Tr^{k-1-n}> - N (1 - alpha^2) <Tr^{k+1}>
/// Monte Carlo sign problems are flagged on the entries instead of thrown.
std::vector<SDEntry> sd_residuals(const ShiftedModel& model, std::span<const SDRequest> requests,
                                  const EstimatorConfig& estimator);

SDEntry sd_residual_exact(const ShiftedModel& model, int color, int k, const EstimatorConfig& estimator);
SDEntry sd_residual_leading(const ShiftedModel& model, int color, int k, const EstimatorConfig& estimator);

/// Leading identity with factorized semicircle moments <Tr^n> = N m_n as inputs.
SDEntry sd_residual_leading_semicircle(const ShiftedModel& model, int color, int k);

/// Truncation of the log-derivative term: sum_{p<=order} (alpha/nu)^{p+1} sum_j mu_j^k sum_tuples (mu_j + ...)^p.
/// Its order -> infinity limit is (alpha/nu) Tr[Mt_c^k Ptr R] where the geometric series converges.
Complex log_term_series(const ShiftedModel& model, const std::vector<std::vector<double>>& eigenvalues, int color,
                        int k, int order);

struct FactorizationReport {
  int s = 0;
  int t = 0;
  Complex connected;
  double connected_error = 0.0;
  /// connected / max(|<Tr^s><Tr^t>|, |<Tr^s Tr^t>|)
  double normalized = 0.0;
  double normalized_error = 0.0;
  double phase_mean = 1.0;
};

/// <Tr Mt_c^s Tr Mt_c^t> - <Tr Mt_c^s><Tr Mt_c^t> by Monte Carlo. s = 0 or t = 0 returns exactly 0 without sampling.
FactorizationReport factorization_check(const ShiftedModel& model, int s, int t, const MonteCarloConfig& config,
                                        int color = 0);

struct TensorSideComparison {
  int p = 0;
  /// <|T|^{2p}> from the single complex tensor entry.
  Complex tensor_side;
  /// theta_from_matrix applied to <He_q(x_c)> of the unshifted N = 1 matrix model.
  Complex matrix_side;
  double difference = 0.0;
};

/// Coupling of the N = 1 tensor action |T|^2/2 + g |T|^4 that is dual to the matrix model: g = D lambda / 16.
double tensor_quartic_coupling(int colors, double coupling);

/// Compares <Tr Theta_c^p> computed on both sides of the intermediate-field duality at N = 1.
TensorSideComparison tensor_side_check(const ModelParams& params, int p, int color = 0,
                                       const QuadratureConfig& config = {});

/// <|T|^{2q}> for q = 0..max_power in the N = 1 tensor model.
std::vector<Complex> tensor_moments(const ModelParams& params, int max_power, const QuadratureConfig& config = {});

}  // namespace melonfield
