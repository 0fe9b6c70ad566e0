#include "melonfield/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "melonfield/errors.hpp"

namespace melonfield {

namespace {

// Real coordinates of one N x N Hermitian matrix: N diagonal entries, then (re, im) for each i < j.
struct HermitianCoords {
  int n;
  std::vector<double> values;

  explicit HermitianCoords(int size) : n(size), values(static_cast<std::size_t>(size) * size, 0.0) {}

  std::vector<double> eigenvalues() const {
    if (n == 1) return {values[0]};
    if (n == 2) {
      const double a = values[0];
      const double d = values[1];
      const double re = values[2];
      const double im = values[3];
      const double mid = 0.5 * (a + d);
      const double half = std::hypot(0.5 * (a - d), std::hypot(re, im));
      return {mid - half, mid + half};
    }
    Eigen::MatrixXcd m(n, n);
    std::size_t pos = static_cast<std::size_t>(n);
    for (int i = 0; i < n; ++i) m(i, i) = values[i];
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        m(i, j) = Complex(values[pos], values[pos + 1]);
        m(j, i) = std::conj(m(i, j));
        pos += 2;
      }
    }
    return hermitian_eigenvalues(m);
  }

  // Standard deviation of the coordinate under the Gaussian part exp(-(N/2) Tr M^2).
  double natural_width(std::size_t index) const {
    return index < static_cast<std::size_t>(n) ? 1.0 / std::sqrt(n) : 1.0 / std::sqrt(2.0 * n);
  }
};

struct ChainResult {
  std::vector<std::vector<Complex>> weighted;
  std::vector<Complex> phase;
  std::vector<std::int64_t> counts;
  double acceptance = 0.0;
};

ChainResult run_chain(const ShiftedModel& model, int observable_count, const Measurement& measure,
                      const MonteCarloConfig& config, int chain) {
  const int d = model.colors();
  const int n = model.size();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(chain), 0x6d656c6fu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<HermitianCoords> coords(d, HermitianCoords(n));
  std::vector<std::vector<double>> eig(d);
  for (int c = 0; c < d; ++c) eig[c] = coords[c].eigenvalues();
  double action = model.action_real(eig);

  const std::int64_t burn_in = std::max<std::int64_t>(1, static_cast<std::int64_t>(config.burn_in_fraction * config.steps));
  const std::int64_t measured = config.steps - burn_in;
  const std::int64_t tune_every = std::max<std::int64_t>(10, burn_in / 20);

  ChainResult result;
  result.weighted.assign(config.blocks_per_chain, std::vector<Complex>(observable_count, Complex(0.0)));
  result.phase.assign(config.blocks_per_chain, Complex(0.0));
  result.counts.assign(config.blocks_per_chain, 0);

  double step = 1.0;
  std::int64_t proposals = 0;
  std::int64_t accepted = 0;
  std::vector<Complex> obs(observable_count);
  SampleView view{&model, &eig};

  for (std::int64_t sweep = 0; sweep < config.steps; ++sweep) {
    for (int c = 0; c < d; ++c) {
      auto& hc = coords[c];
      for (std::size_t i = 0; i < hc.values.size(); ++i) {
        const double old_value = hc.values[i];
        hc.values[i] = old_value + step * hc.natural_width(i) * normal(rng);
        std::vector<double> old_eig = std::move(eig[c]);
        eig[c] = hc.eigenvalues();
        double trial = 0.0;
        bool ok = true;
        try {
          trial = model.action_real(eig);
        } catch (const SingularityError&) {
          ok = false;
        }
        ++proposals;
        const double log_ratio = ok ? action - trial : -std::numeric_limits<double>::infinity();
        if (ok && (log_ratio >= 0.0 || uniform(rng) < std::exp(log_ratio))) {
          action = trial;
          ++accepted;
        } else {
          hc.values[i] = old_value;
          eig[c] = std::move(old_eig);
        }
      }
    }

    if (sweep < burn_in) {
      if ((sweep + 1) % tune_every == 0) {
        const double rate = static_cast<double>(accepted) / static_cast<double>(proposals);
        if (rate < 0.3) step *= 0.7;
        if (rate > 0.5) step *= 1.3;
        proposals = accepted = 0;
      }
      if (sweep + 1 == burn_in) proposals = accepted = 0;
      continue;
    }

    const std::int64_t m = sweep - burn_in;
    const int block = static_cast<int>(m * config.blocks_per_chain / measured);
    const Complex phase = std::polar(1.0, -model.action(eig).imag());
    measure(view, obs);
    for (int i = 0; i < observable_count; ++i) result.weighted[block][i] += obs[i] * phase;
    result.phase[block] += phase;
    ++result.counts[block];
  }
  result.acceptance = proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
  return result;
}

}  // namespace

void MonteCarloConfig::validate() const {
  if (chains < 1) throw DomainError("MonteCarloConfig: chains must be >= 1");
  if (blocks_per_chain < 1) throw DomainError("MonteCarloConfig: blocks_per_chain must be >= 1");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) throw DomainError("MonteCarloConfig: burn_in_fraction in [0, 1)");
  const auto burn_in = std::max<std::int64_t>(1, static_cast<std::int64_t>(burn_in_fraction * steps));
  if (steps - burn_in < blocks_per_chain) throw DomainError("MonteCarloConfig: too few steps for the requested blocks");
  if (chains * blocks_per_chain < 2) throw DomainError("MonteCarloConfig: need at least two blocks for error estimates");
  if (threads < 0) throw DomainError("MonteCarloConfig: threads must be >= 0");
}

double SampleView::trace_power(int color, int power) const {
  double acc = 0.0;
  for (double mu : (*eigenvalues)[color]) acc += std::pow(mu, power);
  return acc;
}

Complex SampleView::resolvent_trace(int color, int power) const {
  const auto r = model->partial_resolvent_diagonal(*eigenvalues, color);
  Complex acc = 0.0;
  const auto& mu = (*eigenvalues)[color];
  for (std::size_t j = 0; j < mu.size(); ++j) acc += std::pow(mu[j], power) * r[j];
  return acc;
}

double MonteCarloBlocks::phase_mean() const {
  Complex total = 0.0;
  for (const auto& p : phase) total += p;
  return samples ? std::abs(total) / static_cast<double>(samples) : 0.0;
}

MonteCarloBlocks sample_shifted_model(const ShiftedModel& model, int observable_count, const Measurement& measure,
                                      const MonteCarloConfig& config) {
  config.validate();
  std::vector<ChainResult> chains(config.chains);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = std::clamp(config.threads > 0 ? config.threads : static_cast<int>(hw), 1, config.chains);

  std::atomic<int> next{0};
  std::vector<std::exception_ptr> failures(config.chains);
  auto worker = [&] {
    for (int c = next++; c < config.chains; c = next++) {
      try {
        chains[c] = run_chain(model, observable_count, measure, config, c);
      } catch (...) {
        failures[c] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  MonteCarloBlocks out;
  out.observable_count = observable_count;
  for (const auto& chain : chains) {
    for (std::size_t b = 0; b < chain.phase.size(); ++b) {
      out.weighted.push_back(chain.weighted[b]);
      out.phase.push_back(chain.phase[b]);
      out.samples += chain.counts[b];
    }
    out.acceptance.push_back(chain.acceptance);
  }
  return out;
}

JackknifeEstimate jackknife(const MonteCarloBlocks& blocks,
                            const std::function<Complex(std::span<const Complex> means)>& f) {
  const std::size_t nb = blocks.phase.size();
  const int k = blocks.observable_count;
  std::vector<Complex> total(k, Complex(0.0));
  Complex phase_total = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    for (int i = 0; i < k; ++i) total[i] += blocks.weighted[b][i];
    phase_total += blocks.phase[b];
  }
  std::vector<Complex> means(k);
  for (int i = 0; i < k; ++i) means[i] = total[i] / phase_total;
  const Complex full = f(means);

  std::vector<Complex> partial(nb);
  Complex partial_mean = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const Complex p = phase_total - blocks.phase[b];
    for (int i = 0; i < k; ++i) means[i] = (total[i] - blocks.weighted[b][i]) / p;
    partial[b] = f(means);
    partial_mean += partial[b];
  }
  partial_mean /= static_cast<double>(nb);
  double var = 0.0;
  for (const auto& p : partial) var += std::norm(p - partial_mean);
  var *= static_cast<double>(nb - 1) / static_cast<double>(nb);
  return {full, std::sqrt(var)};
}

JackknifeEstimate jackknife_mean(const MonteCarloBlocks& blocks, int observable) {
  if (observable < 0 || observable >= blocks.observable_count) throw DomainError("jackknife_mean: bad observable index");
  return jackknife(blocks, [observable](std::span<const Complex> m) { return m[observable]; });
}

}  // namespace melonfield
