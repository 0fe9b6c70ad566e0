#include "melonfield/sd_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "melonfield/errors.hpp"
#include "melonfield/observables.hpp"

namespace melonfield {

namespace {

using NodeObservables = std::function<void(std::span<const double> x, std::span<Complex> out)>;

void require_scalar_reduction(const ModelParams& params, const char* where) {
  params.validate();
  if (params.size != 1) throw DomainError(std::string(where) + ": quadrature requires N = 1");
  if (params.colors > kMaxQuadratureColors) {
    throw DomainError(std::string(where) + ": quadrature supports at most " + std::to_string(kMaxQuadratureColors) +
                      " colors");
  }
}

void require_dense_capable(const ModelParams& params, const char* where) {
  double total = 1.0;
  for (int c = 0; c < params.colors; ++c) total *= params.size;
  if (total > static_cast<double>(kDenseDimensionCap)) {
    throw DomainError(std::string(where) + ": N^D exceeds " + std::to_string(kDenseDimensionCap));
  }
}

std::vector<std::vector<double>> scalar_spectrum(std::span<const double> x) {
  std::vector<std::vector<double>> eig;
  eig.reserve(x.size());
  for (double v : x) eig.push_back({v});
  return eig;
}

// Expectations in the N = 1 shifted model; the Gaussian part of the action is carried by the quadrature rule.
GaussianExpectations shifted_expectations(const ShiftedModel& model, int count, const NodeObservables& observables,
                                          const QuadratureConfig& config) {
  return gaussian_expectations(
      model.colors(), count,
      [&](std::span<const double> x, std::span<Complex> out) {
        double quadratic = 0.0;
        for (double v : x) quadratic += v * v;
        const Complex weight = std::exp(-(model.action(scalar_spectrum(x)) - 0.5 * quadratic));
        observables(x, out);
        return weight;
      },
      config);
}

Complex monomial(std::span<const double> x, std::span<const int> exponents) {
  double v = 1.0;
  for (std::size_t c = 0; c < x.size(); ++c) v *= std::pow(x[c], exponents[c]);
  return v;
}

void check_exponents(const std::vector<std::vector<int>>& exponents, int colors) {
  for (const auto& e : exponents) {
    if (static_cast<int>(e.size()) != colors) throw DomainError("correlator_quadrature: one exponent per color required");
    for (int m : e) {
      if (m < 0) throw DomainError("correlator_quadrature: exponents must be >= 0");
    }
  }
}

std::vector<CorrelatorEstimate> to_estimates(const GaussianExpectations& result, int dimension) {
  std::int64_t nodes = 1;
  for (int i = 0; i < dimension; ++i) nodes *= result.nodes_per_dimension;
  std::vector<CorrelatorEstimate> out;
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    CorrelatorEstimate e;
    e.value = result.values[i];
    e.method = EstimatorMethod::quadrature;
    e.samples_or_nodes = nodes;
    e.quadrature_error = result.errors[i];
    out.push_back(e);
  }
  return out;
}

// Tr[Mt_c^k Ptr_{!=c} R] from eigenvalues, either spectrally or through the dense Kronecker-sum resolvent of
// the diagonalized configuration (the quantity is invariant under independent unitary rotations of each color).
Complex resolvent_term(const ShiftedModel& model, const std::vector<std::vector<double>>& eig, int color, int k,
                       bool dense) {
  const auto& mu = eig[color];
  Complex acc = 0.0;
  if (dense) {
    std::vector<Eigen::MatrixXcd> matrices;
    for (const auto& e : eig) {
      Eigen::VectorXcd d(static_cast<Eigen::Index>(e.size()));
      for (std::size_t j = 0; j < e.size(); ++j) d(static_cast<Eigen::Index>(j)) = e[j];
      matrices.push_back(d.asDiagonal());
    }
    const Eigen::MatrixXcd ptr = model.dense_partial_resolvent(matrices, color);
    for (std::size_t j = 0; j < mu.size(); ++j) acc += std::pow(mu[j], k) * ptr(j, j);
  } else {
    const auto r = model.partial_resolvent_diagonal(eig, color);
    for (std::size_t j = 0; j < mu.size(); ++j) acc += std::pow(mu[j], k) * r[j];
  }
  return acc;
}

double trace_power(const std::vector<double>& mu, int p) {
  if (p == 0) return static_cast<double>(mu.size());
  double acc = 0.0;
  for (double v : mu) acc += std::pow(v, p);
  return acc;
}

int term_count(SDForm form) { return form == SDForm::exact ? 4 : 2; }

// Per-sample values of the identity's terms, in order; the residual is term0 - term1 - term2 + term3 (exact)
// or term0 - term1 (leading).
void sd_terms(const ShiftedModel& model, const std::vector<std::vector<double>>& eig, const SDRequest& req,
              bool dense, std::span<Complex> out) {
  const auto& mu = eig[req.color];
  const double n = model.size();
  double pair_sum = 0.0;
  for (int a = 0; a < req.k; ++a) pair_sum += trace_power(mu, a) * trace_power(mu, req.k - 1 - a);
  out[0] = pair_sum;
  if (req.form == SDForm::exact) {
    out[1] = n * trace_power(mu, req.k + 1);
    out[2] = model.linear_coefficient() * trace_power(mu, req.k);
    out[3] = model.log_coefficient() * resolvent_term(model, eig, req.color, req.k, dense);
  } else {
    const Complex s = 1.0 - model.alpha() * model.alpha();
    out[1] = n * s * trace_power(mu, req.k + 1);
  }
}

Complex combine(SDForm form, std::span<const Complex> terms) {
  return form == SDForm::exact ? terms[0] - terms[1] - terms[2] + terms[3] : terms[0] - terms[1];
}

void finish_entry(SDEntry& entry) {
  entry.scale = 0.0;
  for (const auto& t : entry.terms) entry.scale = std::max(entry.scale, std::abs(t));
  entry.normalized = entry.scale > 0.0 ? std::abs(entry.residual) / entry.scale : 0.0;
}

SDEntry entry_for(const SDRequest& req) {
  SDEntry e;
  e.color = req.color;
  e.k = req.k;
  e.form = req.form;
  return e;
}

void validate_requests(const ShiftedModel& model, std::span<const SDRequest> requests) {
  for (const auto& r : requests) {
    if (r.color < 0 || r.color >= model.colors()) throw DomainError("sd_residuals: color out of range");
    if (r.k < 0) throw DomainError("sd_residuals: k must be >= 0");
  }
}

}  // namespace

std::string to_string(EstimatorMethod method) {
  return method == EstimatorMethod::quadrature ? "quadrature" : "monte_carlo";
}

std::string to_string(SDForm form) { return form == SDForm::exact ? "exact" : "leading"; }

std::vector<CorrelatorEstimate> correlator_quadrature(const ShiftedModel& model,
                                                      const std::vector<std::vector<int>>& exponents,
                                                      const QuadratureConfig& config) {
  require_scalar_reduction(model.params(), "correlator_quadrature");
  check_exponents(exponents, model.colors());
  const int count = static_cast<int>(exponents.size());
  const auto result = shifted_expectations(
      model, count,
      [&](std::span<const double> x, std::span<Complex> out) {
        for (int i = 0; i < count; ++i) out[i] = monomial(x, exponents[i]);
      },
      config);
  return to_estimates(result, model.colors());
}

CorrelatorEstimate correlator_quadrature(const ShiftedModel& model, std::span<const int> exponents,
                                         const QuadratureConfig& config) {
  return correlator_quadrature(model, std::vector<std::vector<int>>{{exponents.begin(), exponents.end()}}, config)[0];
}

std::vector<CorrelatorEstimate> correlator_quadrature_unshifted(const ModelParams& params,
                                                                const std::vector<std::vector<int>>& exponents,
                                                                const QuadratureConfig& config) {
  require_scalar_reduction(params, "correlator_quadrature_unshifted");
  check_exponents(exponents, params.colors);
  const Complex ib(0.0, std::sqrt(params.coupling / 2.0));
  const int count = static_cast<int>(exponents.size());
  const auto result = gaussian_expectations(
      params.colors, count,
      [&](std::span<const double> x, std::span<Complex> out) {
        double s = 0.0;
        for (double v : x) s += v;
        for (int i = 0; i < count; ++i) out[i] = monomial(x, exponents[i]);
        return 1.0 / (1.0 + ib * s);
      },
      config);
  return to_estimates(result, params.colors);
}

CorrelatorEstimate correlator_mc(const ShiftedModel& model, const TraceWord& word, const MonteCarloConfig& config) {
  require_dense_capable(model.params(), "correlator_mc");
  for (const auto& [c, p] : word.factors) {
    if (c < 0 || c >= model.colors() || p < 0) throw DomainError("correlator_mc: bad trace word factor");
  }
  const auto blocks = sample_shifted_model(
      model, 1,
      [&](const SampleView& view, std::span<Complex> out) {
        double v = 1.0;
        for (const auto& [c, p] : word.factors) v *= trace_power((*view.eigenvalues)[c], p);
        out[0] = v;
      },
      config);
  const double phase = blocks.phase_mean();
  if (phase < kSignProblemThreshold) {
    throw SignProblemError("correlator_mc: mean phase magnitude " + std::to_string(phase) + " below threshold", phase);
  }
  const auto est = jackknife_mean(blocks, 0);
  CorrelatorEstimate out;
  out.value = est.value;
  out.std_error = est.std_error;
  out.method = EstimatorMethod::monte_carlo;
  out.samples_or_nodes = blocks.samples;
  out.phase_mean = phase;
  return out;
}

std::vector<SDEntry> sd_residuals(const ShiftedModel& model, std::span<const SDRequest> requests,
                                  const EstimatorConfig& estimator) {
  validate_requests(model, requests);
  std::vector<int> offsets;
  int count = 0;
  for (const auto& r : requests) {
    offsets.push_back(count);
    count += term_count(r.form);
  }

  auto fill = [&](const std::vector<std::vector<double>>& eig, std::span<Complex> out) {
    for (std::size_t i = 0; i < requests.size(); ++i) {
      sd_terms(model, eig, requests[i], estimator.dense_resolvent, out.subspan(offsets[i], term_count(requests[i].form)));
    }
  };

  std::vector<SDEntry> entries;
  if (estimator.method == EstimatorMethod::quadrature) {
    require_scalar_reduction(model.params(), "sd_residuals");
    const auto result = shifted_expectations(
        model, count, [&](std::span<const double> x, std::span<Complex> out) { fill(scalar_spectrum(x), out); },
        estimator.quadrature);
    for (std::size_t i = 0; i < requests.size(); ++i) {
      SDEntry e = entry_for(requests[i]);
      e.method = EstimatorMethod::quadrature;
      e.terms.assign(result.values.begin() + offsets[i],
                     result.values.begin() + offsets[i] + term_count(requests[i].form));
      e.residual = combine(e.form, e.terms);
      finish_entry(e);
      entries.push_back(std::move(e));
    }
    return entries;
  }

  require_dense_capable(model.params(), "sd_residuals");
  const auto blocks = sample_shifted_model(
      model, count, [&](const SampleView& view, std::span<Complex> out) { fill(*view.eigenvalues, out); },
      estimator.monte_carlo);
  const double phase = blocks.phase_mean();
  for (std::size_t i = 0; i < requests.size(); ++i) {
    SDEntry e = entry_for(requests[i]);
    e.method = EstimatorMethod::monte_carlo;
    const int n = term_count(e.form);
    const int off = offsets[i];
    for (int t = 0; t < n; ++t) e.terms.push_back(jackknife_mean(blocks, off + t).value);
    const auto res = jackknife(blocks, [&](std::span<const Complex> m) { return combine(e.form, m.subspan(off, n)); });
    e.residual = res.value;
    e.std_error = res.std_error;
    e.phase_mean = phase;
    e.sign_problem = phase < kSignProblemThreshold;
    finish_entry(e);
    entries.push_back(std::move(e));
  }
  return entries;
}

SDEntry sd_residual_exact(const ShiftedModel& model, int color, int k, const EstimatorConfig& estimator) {
  const SDRequest req{color, k, SDForm::exact};
  return sd_residuals(model, std::span(&req, 1), estimator)[0];
}

SDEntry sd_residual_leading(const ShiftedModel& model, int color, int k, const EstimatorConfig& estimator) {
  const SDRequest req{color, k, SDForm::leading};
  return sd_residuals(model, std::span(&req, 1), estimator)[0];
}

SDEntry sd_residual_leading_semicircle(const ShiftedModel& model, int color, int k) {
  if (color < 0 || color >= model.colors()) throw DomainError("sd_residual_leading_semicircle: color out of range");
  if (k < 0) throw DomainError("sd_residual_leading_semicircle: k must be >= 0");
  const auto& params = model.params();
  const SemicircleLaw law = semicircle_law(params.colors, params.coupling);
  const double n = params.size;
  double pair_sum = 0.0;
  for (int a = 0; a < k; ++a) pair_sum += n * law.moment(a) * n * law.moment(k - 1 - a);
  SDEntry e = entry_for({color, k, SDForm::leading});
  e.terms = {pair_sum, n * law.scale() * n * law.moment(k + 1)};
  e.residual = combine(e.form, e.terms);
  finish_entry(e);
  return e;
}

Complex log_term_series(const ShiftedModel& model, const std::vector<std::vector<double>>& eigenvalues, int color,
                        int k, int order) {
  if (order < 0) throw DomainError("log_term_series: order must be >= 0");
  if (color < 0 || color >= static_cast<int>(eigenvalues.size())) throw DomainError("log_term_series: bad color");
  const Complex g = model.log_coefficient();
  // Collect the sums over the other colors' tuples once.
  std::vector<double> sums{0.0};
  for (int b = 0; b < static_cast<int>(eigenvalues.size()); ++b) {
    if (b == color) continue;
    std::vector<double> next;
    for (double s : sums) {
      for (double mu : eigenvalues[b]) next.push_back(s + mu);
    }
    sums = std::move(next);
  }
  Complex total = 0.0;
  for (double mu : eigenvalues[color]) {
    Complex inner = 0.0;
    for (double s : sums) {
      Complex term = g;
      Complex acc = 0.0;
      for (int p = 0; p <= order; ++p) {
        acc += term;
        term *= g * (mu + s);
      }
      inner += acc;
    }
    total += std::pow(mu, k) * inner;
  }
  return total;
}

FactorizationReport factorization_check(const ShiftedModel& model, int s, int t, const MonteCarloConfig& config,
                                        int color) {
  if (s < 0 || t < 0) throw DomainError("factorization_check: powers must be >= 0");
  if (color < 0 || color >= model.colors()) throw DomainError("factorization_check: color out of range");
  FactorizationReport report;
  report.s = s;
  report.t = t;
  if (s == 0 || t == 0) return report;
  require_dense_capable(model.params(), "factorization_check");
  const auto blocks = sample_shifted_model(
      model, 3,
      [&](const SampleView& view, std::span<Complex> out) {
        const double a = view.trace_power(color, s);
        const double b = view.trace_power(color, t);
        out[0] = a * b;
        out[1] = a;
        out[2] = b;
      },
      config);
  const auto connected = jackknife(blocks, [](std::span<const Complex> m) { return m[0] - m[1] * m[2]; });
  const auto normalized = jackknife(blocks, [](std::span<const Complex> m) {
    const double scale = std::max(std::abs(m[1] * m[2]), std::abs(m[0]));
    return scale > 0.0 ? (m[0] - m[1] * m[2]) / scale : Complex(0.0);
  });
  report.connected = connected.value;
  report.connected_error = connected.std_error;
  report.normalized = std::abs(normalized.value);
  report.normalized_error = normalized.std_error;
  report.phase_mean = blocks.phase_mean();
  return report;
}

double tensor_quartic_coupling(int colors, double coupling) { return colors * coupling / 16.0; }

std::vector<Complex> tensor_moments(const ModelParams& params, int max_power, const QuadratureConfig& config) {
  params.validate();
  if (max_power < 0) throw DomainError("tensor_moments: max_power must be >= 0");
  const double g = tensor_quartic_coupling(params.colors, params.coupling);
  const auto result = gaussian_expectations(
      2, max_power + 1,
      [&](std::span<const double> x, std::span<Complex> out) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        double v = 1.0;
        for (int q = 0; q <= max_power; ++q) {
          out[q] = v;
          v *= r2;
        }
        return Complex(std::exp(-g * r2 * r2));
      },
      config);
  return result.values;
}

TensorSideComparison tensor_side_check(const ModelParams& params, int p, int color, const QuadratureConfig& config) {
  require_scalar_reduction(params, "tensor_side_check");
  if (!(params.coupling > 0.0)) throw DomainError("tensor_side_check: lambda must be > 0");
  if (p < 0) throw DomainError("tensor_side_check: p must be >= 0");
  if (color < 0 || color >= params.colors) throw DomainError("tensor_side_check: color out of range");

  const Complex ib(0.0, std::sqrt(params.coupling / 2.0));
  const auto matrix = gaussian_expectations(
      params.colors, p + 1,
      [&](std::span<const double> x, std::span<Complex> out) {
        double s = 0.0;
        for (double v : x) s += v;
        for (int q = 0; q <= p; ++q) out[q] = hermite_eval<double>(q, x[color], 1.0);
        return 1.0 / (1.0 + ib * s);
      },
      config);

  TensorSideComparison out;
  out.p = p;
  out.tensor_side = tensor_moments(params, p, config)[p];
  out.matrix_side = theta_from_matrix(p, matrix.values, params.coupling);
  out.difference = std::abs(out.tensor_side - out.matrix_side);
  return out;
}

nlohmann::json to_json(const SDEntry& entry) {
  nlohmann::json j;
  j["color"] = entry.color;
  j["k"] = entry.k;
  j["form"] = to_string(entry.form);
  j["residual_re"] = entry.residual.real();
  j["residual_im"] = entry.residual.imag();
  j["scale"] = entry.scale;
  j["normalized"] = entry.normalized;
  j["method"] = to_string(entry.method);
  j["std_error"] = entry.std_error;
  j["phase_mean"] = entry.phase_mean;
  if (entry.sign_problem) j["warning"] = "sign_problem";
  return j;
}

}  // namespace melonfield
