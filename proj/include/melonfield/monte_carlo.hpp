#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "melonfield/shifted_model.hpp"

namespace melonfield {

struct MonteCarloConfig {
  int chains = 4;
  /// Sweeps per chain; one sweep proposes a Gaussian move on every real coordinate of every color once.
  std::int64_t steps = 100'000;
  std::uint64_t seed = 0;
  /// Leading fraction of sweeps used to tune the step size and then discarded.
  double burn_in_fraction = 0.1;
  /// Measurement blocks per chain used for jackknife errors.
  int blocks_per_chain = 16;
  /// Upper bound on worker threads (0 = hardware concurrency).
  int threads = 0;

  void validate() const;
};

/// Spectral view of one sampled configuration handed to measurement callbacks.
struct SampleView {
  const ShiftedModel* model;
  const std::vector<std::vector<double>>* eigenvalues;  // [color][j]

  /// Tr Mt_c^p.
  double trace_power(int color, int power) const;
  /// Tr[Mt_c^k Ptr_{!=c}((1 - (alpha/nu) sum Mt)^{-1})].
  Complex resolvent_trace(int color, int power) const;
};

using Measurement = std::function<void(const SampleView& sample, std::span<Complex> out)>;

/// Block means of O * phase and of the phase, where phase = exp(-i Im S).
struct MonteCarloBlocks {
  int observable_count = 0;
  std::vector<std::vector<Complex>> weighted;  // [block][observable]
  std::vector<Complex> phase;                  // [block]
  std::vector<double> acceptance;              // per chain, after burn-in
  std::int64_t samples = 0;

  /// |mean phase| over all samples.
  double phase_mean() const;
};

struct JackknifeEstimate {
  Complex value;
  double std_error = 0.0;
};

/// Samples |exp(-S)| with per-entry Metropolis moves and records reweighted block means.
/// Chains run concurrently with independent RNG streams; the result does not depend on thread count.
MonteCarloBlocks sample_shifted_model(const ShiftedModel& model, int observable_count, const Measurement& measure,
                                      const MonteCarloConfig& config);

/// Reweighted estimate of f(<O_0>, <O_1>, ...) with a delete-one-block jackknife error.
JackknifeEstimate jackknife(const MonteCarloBlocks& blocks,
                            const std::function<Complex(std::span<const Complex> means)>& f);

JackknifeEstimate jackknife_mean(const MonteCarloBlocks& blocks, int observable);

}  // namespace melonfield
