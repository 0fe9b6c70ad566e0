#include "melonfield/saddle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "melonfield/errors.hpp"
#include "melonfield/observables.hpp"

namespace melonfield {

namespace {

constexpr double kCollisionDistance = 1e-14;
constexpr double kPoleDistance = 1e-12;
constexpr double kDampingFloor = 1.0 / 64.0;
constexpr int kGrowthLimit = 5;

struct Evaluation {
  std::vector<Complex> residual;
  Eigen::MatrixXcd jacobian;
};

Complex coupling_factor(double coupling) { return {0.0, std::sqrt(coupling / 2.0)}; }

double volume(const ModelParams& p) { return std::pow(static_cast<double>(p.size), p.colors); }

std::string pair_name(int c, int k, int l) {
  return "color " + std::to_string(c) + ", eigenvalues " + std::to_string(k) + " and " + std::to_string(l);
}

// Confining and Coulomb parts for one color's list; writes into residual[offset + k] and J block.
void add_single_color_terms(const std::vector<Complex>& values, int color, double n, double coulomb,
                            std::vector<Complex>& residual, Eigen::MatrixXcd* jacobian, int offset) {
  const int size = static_cast<int>(values.size());
  for (int k = 0; k < size; ++k) {
    Complex r = -values[k] / n;
    Complex diag = -1.0 / n;
    for (int l = 0; l < size; ++l) {
      if (l == k) continue;
      const Complex diff = values[k] - values[l];
      if (std::abs(diff) < kCollisionDistance) throw SingularityError("saddle_residual: collision at " + pair_name(color, k, l));
      const Complex inv = 1.0 / diff;
      r += coulomb * inv;
      if (jacobian) {
        diag -= coulomb * inv * inv;
        (*jacobian)(offset + k, offset + l) += coulomb * inv * inv;
      }
    }
    residual[offset + k] += r;
    if (jacobian) (*jacobian)(offset + k, offset + k) += diag;
  }
}

Complex checked_inverse(Complex denom, const std::string& where) {
  if (std::abs(denom) < kPoleDistance) throw SingularityError("saddle_residual: interaction pole at " + where);
  return 1.0 / denom;
}

std::string tuple_name(const std::vector<int>& idx) {
  std::string out = "(";
  for (std::size_t i = 0; i < idx.size(); ++i) out += (i ? "," : "") + std::to_string(idx[i]);
  return out + ")";
}

Evaluation evaluate_full(const Spectrum& spectrum, const ModelParams& params, bool with_jacobian) {
  const int d = params.colors;
  const int n = params.size;
  const double nd = volume(params);
  const Complex a = coupling_factor(params.coupling);
  const double coulomb = 2.0 / nd;

  Evaluation ev;
  ev.residual.assign(static_cast<std::size_t>(d) * n, Complex(0.0));
  if (with_jacobian) ev.jacobian = Eigen::MatrixXcd::Zero(d * n, d * n);
  Eigen::MatrixXcd* jac = with_jacobian ? &ev.jacobian : nullptr;

  for (int c = 0; c < d; ++c) add_single_color_terms(spectrum.values[c], c, n, coulomb, ev.residual, jac, c * n);

  // Each full tuple (j_1..j_D) feeds the row (c, j_c) of every color c.
  std::vector<int> idx(d, 0);
  const Complex a2 = a * a / nd;
  const Complex a1 = a / nd;
  while (true) {
    Complex sum = 0.0;
    for (int c = 0; c < d; ++c) sum += spectrum.values[c][idx[c]];
    const Complex f = checked_inverse(1.0 + a * sum, "tuple " + tuple_name(idx));
    const Complex f2 = a2 * f * f;
    for (int c = 0; c < d; ++c) {
      const int row = c * n + idx[c];
      ev.residual[row] -= a1 * f;
      if (jac) {
        for (int b = 0; b < d; ++b) (*jac)(row, b * n + idx[b]) += f2;
      }
    }
    int pos = d - 1;
    while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return ev;
}

// Multisets of size m over {0..n-1} as nondecreasing index lists with their multinomial weights.
struct Multiset {
  std::vector<int> indices;
  double weight;
};

std::vector<Multiset> enumerate_multisets(int n, int m) {
  std::vector<Multiset> out;
  std::vector<int> idx(m, 0);
  std::vector<double> factorial(m + 1, 1.0);
  for (int i = 1; i <= m; ++i) factorial[i] = factorial[i - 1] * i;
  while (true) {
    double weight = factorial[m];
    int run = 1;
    for (int i = 1; i <= m; ++i) {
      if (i < m && idx[i] == idx[i - 1]) {
        ++run;
      } else {
        weight /= factorial[run];
        run = 1;
      }
    }
    out.push_back({idx, weight});
    if (m == 0) break;
    int pos = m - 1;
    while (pos >= 0 && idx[pos] == n - 1) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < m; ++i) idx[i] = idx[pos];
  }
  return out;
}

Evaluation evaluate_symmetric(const std::vector<Complex>& values, const ModelParams& params, bool with_jacobian) {
  const int d = params.colors;
  const int n = params.size;
  const double nd = volume(params);
  const Complex a = coupling_factor(params.coupling);

  Evaluation ev;
  ev.residual.assign(n, Complex(0.0));
  if (with_jacobian) ev.jacobian = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd* jac = with_jacobian ? &ev.jacobian : nullptr;
  add_single_color_terms(values, 0, n, 2.0 / nd, ev.residual, jac, 0);

  const auto multisets = enumerate_multisets(n, d - 1);
  const Complex a2 = a * a / nd;
  const Complex a1 = a / nd;
  for (int k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (const auto& ms : multisets) {
      Complex sum = values[k];
      for (int j : ms.indices) sum += values[j];
      const Complex f = checked_inverse(1.0 + a * sum, "eigenvalue " + std::to_string(k) + " with " + tuple_name(ms.indices));
      acc += ms.weight * f;
      if (jac) {
        const Complex f2 = ms.weight * a2 * f * f;
        (*jac)(k, k) += f2;
        for (int j : ms.indices) (*jac)(k, j) += f2;
      }
    }
    ev.residual[k] -= a1 * acc;
  }
  return ev;
}

void check_shape(const Spectrum& spectrum, const ModelParams& params) {
  params.validate();
  if (spectrum.colors() != params.colors || spectrum.size() != params.size) {
    throw DomainError("saddle_residual: spectrum shape does not match (D, N)");
  }
  for (const auto& color : spectrum.values) {
    if (static_cast<int>(color.size()) != params.size) throw DomainError("saddle_residual: ragged spectrum");
  }
}

bool colors_identical(const Spectrum& spectrum) {
  for (const auto& color : spectrum.values) {
    if (color != spectrum.values.front()) return false;
  }
  return true;
}

void sort_by_real_offset(std::vector<Complex>& values, Complex alpha) {
  std::stable_sort(values.begin(), values.end(),
                   [alpha](const Complex& x, const Complex& y) { return (x - alpha).real() < (y - alpha).real(); });
}

}  // namespace

Spectrum Spectrum::symmetric(int colors, const std::vector<Complex>& values) {
  return Spectrum{std::vector<std::vector<Complex>>(colors, values)};
}

void Spectrum::check_distinct() const {
  for (int c = 0; c < colors(); ++c) {
    const auto& v = values[c];
    for (std::size_t k = 0; k < v.size(); ++k) {
      for (std::size_t l = k + 1; l < v.size(); ++l) {
        if (std::abs(v[k] - v[l]) <= kCollisionDistance) {
          throw SingularityError("Spectrum: collision at " + pair_name(c, static_cast<int>(k), static_cast<int>(l)));
        }
      }
    }
  }
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw DomainError("SolverConfig: tolerance must be > 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("SolverConfig: damping must lie in (0, 1]");
  if (max_iterations < 0) throw DomainError("SolverConfig: max_iterations must be >= 0");
}

double sup_norm(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<Complex> saddle_residual(const Spectrum& spectrum, const ModelParams& params, SolverMode mode) {
  check_shape(spectrum, params);
  if (mode == SolverMode::symmetric_ansatz) {
    if (!colors_identical(spectrum)) throw DomainError("saddle_residual: symmetric mode needs identical colors");
    const auto per_color = evaluate_symmetric(spectrum.values.front(), params, false).residual;
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(params.colors) * params.size);
    for (int c = 0; c < params.colors; ++c) out.insert(out.end(), per_color.begin(), per_color.end());
    return out;
  }
  if (std::pow(static_cast<double>(params.size), params.colors - 1) > kFullModeTermCap) {
    throw DomainError("saddle_residual: N^{D-1} exceeds the full-mode cap");
  }
  return evaluate_full(spectrum, params, false).residual;
}

Spectrum initial_spectrum(const ModelParams& params, const SolverConfig& config) {
  params.validate();
  const Complex alpha = alpha_lo(params.colors, params.coupling);
  const SemicircleLaw law = semicircle_law(params.colors, params.coupling);
  const double spread = std::sqrt(2.0 / (std::pow(static_cast<double>(params.size), params.colors - 1) * law.scale()));
  const auto roots = hermite_roots(params.size);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const int lists = config.mode == SolverMode::symmetric_ansatz ? 1 : params.colors;
  std::vector<std::vector<Complex>> values(lists, std::vector<Complex>(params.size));
  for (auto& color : values) {
    for (int k = 0; k < params.size; ++k) color[k] = alpha + spread * (roots[k] + 1e-3 * jitter(rng));
  }
  if (config.mode == SolverMode::symmetric_ansatz) return Spectrum::symmetric(params.colors, values.front());
  return Spectrum{std::move(values)};
}

SaddleSolution solve_newton(const ModelParams& params, const SolverConfig& config) {
  params.validate();
  config.validate();
  if (!(params.coupling > 0.0)) throw DomainError("solve_newton: coupling must be > 0");
  const bool symmetric = config.mode == SolverMode::symmetric_ansatz;
  if (!symmetric && std::pow(static_cast<double>(params.size), params.colors - 1) > kFullModeTermCap) {
    throw DomainError("solve_newton: N^{D-1} exceeds the full-mode cap of 1e6 interaction terms");
  }

  Spectrum start = initial_spectrum(params, config);
  const int n = params.size;
  std::vector<Complex> x;
  if (symmetric) {
    x = start.values.front();
  } else {
    for (const auto& color : start.values) x.insert(x.end(), color.begin(), color.end());
  }

  auto unpack = [&](const std::vector<Complex>& flat) {
    if (symmetric) return Spectrum::symmetric(params.colors, flat);
    Spectrum s;
    for (int c = 0; c < params.colors; ++c) s.values.emplace_back(flat.begin() + c * n, flat.begin() + (c + 1) * n);
    return s;
  };
  auto evaluate = [&](const std::vector<Complex>& flat, bool jac) {
    return symmetric ? evaluate_symmetric(flat, params, jac) : evaluate_full(unpack(flat), params, jac);
  };

  SaddleSolution sol;
  Evaluation ev = evaluate(x, true);
  double norm = sup_norm(ev.residual);
  sol.residual_history.push_back(norm);
  int growth = 0;

  while (norm > config.tolerance && sol.iterations < config.max_iterations) {
    Eigen::VectorXcd rhs(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) rhs(i) = -ev.residual[i];
    const Eigen::VectorXcd step = ev.jacobian.partialPivLu().solve(rhs);
    if (!step.allFinite()) throw DivergenceError("solve_newton: singular Jacobian", norm);

    double t = config.damping;
    std::vector<Complex> trial(x.size());
    Evaluation trial_ev;
    double trial_norm = 0.0;
    while (true) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + t * step(i);
      bool ok = true;
      try {
        trial_ev = evaluate(trial, true);
        trial_norm = sup_norm(trial_ev.residual);
      } catch (const SingularityError&) {
        ok = false;
        trial_norm = std::numeric_limits<double>::infinity();
      }
      if ((ok && trial_norm < norm) || t <= kDampingFloor) {
        if (!ok) throw DivergenceError("solve_newton: damped step hits a singularity", norm);
        break;
      }
      t *= 0.5;
    }
    growth = trial_norm >= norm ? growth + 1 : 0;
    x = trial;
    ev = std::move(trial_ev);
    norm = trial_norm;
    ++sol.iterations;
    sol.residual_history.push_back(norm);
    if (growth >= kGrowthLimit) {
      throw DivergenceError("solve_newton: residual grew for " + std::to_string(kGrowthLimit) + " consecutive damped steps",
                            norm);
    }
  }

  const Complex alpha = alpha_lo(params.colors, params.coupling);
  sol.spectrum = unpack(x);
  for (auto& color : sol.spectrum.values) sort_by_real_offset(color, alpha);
  sol.residual_norm = norm;
  sol.converged = norm <= config.tolerance;
  sol.spectrum.check_distinct();
  return sol;
}

ReducedSpectrum nlo_reduced_solve(const ModelParams& params) {
  params.validate();
  const SemicircleLaw law = semicircle_law(params.colors, params.coupling);
  const double c = std::sqrt(2.0 / (params.size * law.scale()));
  ReducedSpectrum out;
  for (double h : hermite_roots(params.size)) out.values.push_back(c * h);
  return out;
}

double nlo_reduced_residual(const ReducedSpectrum& reduced, const ModelParams& params) {
  const double s = semicircle_law(params.colors, params.coupling).scale();
  const auto& x = reduced.values;
  const double n = static_cast<double>(x.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double coulomb = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l) {
      if (l != k) coulomb += 1.0 / (x[k] - x[l]);
    }
    worst = std::max(worst, std::abs(s * x[k] - 2.0 / n * coulomb));
  }
  return worst;
}

NloComparison compare_to_nlo(const SaddleSolution& solution, const ModelParams& params) {
  if (!solution.converged) throw DomainError("compare_to_nlo: solution did not converge");
  check_shape(solution.spectrum, params);
  const Complex alpha = alpha_lo(params.colors, params.coupling);
  const double nu = params.fluctuation_scale();
  const auto predicted = nlo_reduced_solve(params).values;

  NloComparison report;
  for (int c = 0; c < params.colors; ++c) {
    auto values = solution.spectrum.values[c];
    sort_by_real_offset(values, alpha);
    for (int k = 0; k < params.size; ++k) {
      const Complex rescaled = nu * (values[k] - alpha);
      report.max_deviation = std::max(report.max_deviation, std::abs(rescaled - predicted[k]));
      if (c == 0) report.rescaled.push_back(rescaled.real());
    }
  }
  if (params.size > 1) {
    report.ks_distance = empirical_ks(report.rescaled, semicircle_law(params.colors, params.coupling));
  }
  return report;
}

nlohmann::json to_json(const SaddleSolution& solution, const ModelParams& params) {
  nlohmann::json spectrum = nlohmann::json::array();
  for (const auto& color : solution.spectrum.values) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& v : color) list.push_back({{"re", v.real()}, {"im", v.imag()}});
    spectrum.push_back(list);
  }
  return {{"params", {{"D", params.colors}, {"N", params.size}, {"lambda", params.coupling}}},
          {"spectrum", spectrum},
          {"residual_norm", solution.residual_norm},
          {"iterations", solution.iterations},
          {"converged", solution.converged}};
}

}  // namespace melonfield
