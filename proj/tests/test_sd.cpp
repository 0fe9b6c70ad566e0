#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "melonfield/errors.hpp"
#include "melonfield/gauss_hermite.hpp"
#include "melonfield/observables.hpp"
#include "melonfield/sd_verifier.hpp"
#include "melonfield/series.hpp"

using namespace melonfield;

namespace {

Eigen::MatrixXcd random_hermitian(std::mt19937_64& rng, int n, double width) {
  std::normal_distribution<double> g(0.0, width);
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = g(rng);
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = Complex(g(rng), g(rng));
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

std::vector<Eigen::MatrixXcd> random_configuration(std::mt19937_64& rng, int d, int n, double width) {
  std::vector<Eigen::MatrixXcd> out;
  for (int c = 0; c < d; ++c) out.push_back(random_hermitian(rng, n, width));
  return out;
}

// Exact Wick contraction for the Gaussian weight exp(-(N/2) Tr M^2): <M_ij M_kl> = delta_il delta_jk / N.
// Returns Var(Tr M^2) = <Tr M^2 Tr M^2> - <Tr M^2>^2 by summing the three pairings over all indices.
Rational wick_variance_tr2(int n) {
  struct Entry {
    int r;
    int c;
  };
  auto prop = [n](Entry a, Entry b) { return a.r == b.c && a.c == b.r ? Rational(1, n) : Rational(0); };
  Rational two_point = 0;
  Rational four_point = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Entry a{i, j};
      const Entry b{j, i};
      two_point += prop(a, b);
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          const Entry c{k, l};
          const Entry d{l, k};
          four_point += prop(a, b) * prop(c, d) + prop(a, c) * prop(b, d) + prop(a, d) * prop(b, c);
        }
      }
    }
  }
  return four_point - two_point * two_point;
}

MonteCarloConfig mc_config(std::int64_t steps, std::uint64_t seed) {
  MonteCarloConfig cfg;
  cfg.chains = 4;
  cfg.steps = steps;
  cfg.seed = seed;
  cfg.blocks_per_chain = 10;
  return cfg;
}

}  // namespace

TEST_CASE("Gauss-Hermite rule integrates polynomials exactly") {
  for (int n : {1, 2, 5, 12, 40, 100}) {
    const auto rule = gauss_hermite_rule(n);
    double sum = 0.0;
    for (double w : rule.weights) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; 2 * k <= 2 * n - 1 && k <= 12; ++k) {
      double moment = 0.0;
      for (int i = 0; i < n; ++i) moment += rule.weights[i] * std::pow(rule.nodes[i], 2 * k);
      double expected = 1.0;
      for (int j = 1; j < 2 * k; j += 2) expected *= j;
      CHECK(moment == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("adaptive quadrature converges or reports stalling") {
  const auto r = gaussian_expectations(2, 2, [](std::span<const double> x, std::span<Complex> out) {
    out[0] = x[0] * x[0];
    out[1] = x[0] * x[1];
    return Complex(1.0);
  });
  CHECK(r.values[0].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.values[1]) < 1e-12);
  CHECK(r.errors[0] <= 1e-10);

  QuadratureConfig tight;
  tight.tolerance = 1e-14;
  tight.initial_nodes = 4;
  tight.max_nodes = 8;
  CHECK_THROWS_AS(gaussian_expectations(1, 1,
                                        [](std::span<const double> x, std::span<Complex> out) {
                                          out[0] = std::abs(x[0]);
                                          return Complex(1.0);
                                        },
                                        tight),
                  ConvergenceError);
}

TEST_CASE("shifted action has no linear term at the origin") {
  for (int d : {2, 3, 4}) {
    for (int n : {1, 2, 3}) {
      const ShiftedModel model({d, n, 0.1});
      const std::vector<Eigen::MatrixXcd> zero(d, Eigen::MatrixXcd::Zero(n, n));
      for (const auto& g : model.action_gradient(zero)) CHECK(g.norm() < 1e-13);
    }
  }
}

TEST_CASE("action gradient matches finite differences") {
  std::mt19937_64 rng(4);
  for (auto [d, n] : {std::pair{3, 2}, std::pair{2, 3}, std::pair{3, 1}}) {
    const ShiftedModel model({d, n, 0.2});
    const auto m = random_configuration(rng, d, n, 0.4);
    const auto dir = random_configuration(rng, d, n, 1.0);
    const auto grad = model.action_gradient(m);
    Complex directional = 0.0;
    for (int c = 0; c < d; ++c) directional += (grad[c] * dir[c]).trace();
    const double h = 1e-5;
    auto shifted = [&](double t) {
      std::vector<Eigen::MatrixXcd> p = m;
      for (int c = 0; c < d; ++c) p[c] += t * dir[c];
      return model.action(p);
    };
    const Complex fd = (shifted(h) - shifted(-h)) / (2 * h);
    CHECK(std::abs(fd - directional) < 1e-6 * (1 + std::abs(directional)));
  }
}

TEST_CASE("action is a spectral function and its real part is consistent") {
  std::mt19937_64 rng(8);
  const ShiftedModel model({3, 3, 0.1});
  const auto m = random_configuration(rng, 3, 3, 0.5);
  std::vector<std::vector<double>> eig;
  for (const auto& x : m) eig.push_back(hermitian_eigenvalues(x));
  const Complex a = model.action(m);
  CHECK(std::abs(a - model.action(eig)) < 1e-12);
  CHECK(model.action_real(eig) == doctest::Approx(a.real()).epsilon(1e-13));
  // Conjugating one color by a unitary leaves the action unchanged.
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(random_hermitian(rng, 3, 1.0) + Eigen::MatrixXcd::Identity(3, 3) * Complex(0, 1));
  const Eigen::MatrixXcd u = qr.householderQ();
  auto rotated = m;
  rotated[1] = u * m[1] * u.adjoint();
  CHECK(std::abs(model.action(rotated) - a) < 1e-12);
}

TEST_CASE("dense and spectral partial resolvents agree") {
  std::mt19937_64 rng(12);
  for (auto [d, n] : {std::pair{3, 2}, std::pair{2, 3}, std::pair{4, 2}, std::pair{3, 1}}) {
    const ShiftedModel model({d, n, 0.3});
    const auto m = random_configuration(rng, d, n, 0.7);
    std::vector<std::vector<double>> eig;
    for (const auto& x : m) eig.push_back(hermitian_eigenvalues(x));
    for (int c = 0; c < d; ++c) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m[c]);
      const auto r = model.partial_resolvent_diagonal(eig, c);
      Eigen::VectorXcd diag(n);
      for (int j = 0; j < n; ++j) diag(j) = r[j];
      const Eigen::MatrixXcd spectral = es.eigenvectors() * diag.asDiagonal() * es.eigenvectors().adjoint();
      CHECK((model.dense_partial_resolvent(m, c) - spectral).norm() < 1e-12);
    }
  }
}

TEST_CASE("truncated log-term series converges to the resolvent term") {
  const ShiftedModel model({3, 2, 0.1});
  const std::vector<std::vector<double>> eig{{-0.4, 0.3}, {0.1, 0.2}, {-0.5, 0.6}};
  const auto r = model.partial_resolvent_diagonal(eig, 1);
  Complex exact = 0.0;
  for (int j = 0; j < 2; ++j) exact += std::pow(eig[1][j], 3) * r[j];
  exact *= model.log_coefficient();
  double prev = std::abs(log_term_series(model, eig, 1, 3, 0) - exact);
  for (int order : {2, 4, 8, 16}) {
    const double err = std::abs(log_term_series(model, eig, 1, 3, order) - exact);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-12);
}

TEST_CASE("Gaussian limit of the quadrature correlators") {
  const ShiftedModel gauss({3, 1, 0.0});
  const std::vector<std::vector<int>> words{{2, 0, 0}, {1, 0, 0}, {0, 0, 4}, {1, 1, 0}};
  const auto est = correlator_quadrature(gauss, words);
  CHECK(est[0].value.real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(est[1].value) < 1e-12);
  CHECK(est[2].value.real() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(est[3].value) < 1e-12);
  CHECK(est[0].std_error == 0.0);
  CHECK(est[0].method == EstimatorMethod::quadrature);
}

TEST_CASE("shift of variables: unshifted <x1> equals alpha plus shifted <x1>") {
  const ModelParams p{3, 1, 0.05};
  const ShiftedModel model(p);
  const std::vector<int> x1{1, 0, 0};
  const auto shifted = correlator_quadrature(model, x1);
  const auto unshifted = correlator_quadrature_unshifted(p, {{1, 0, 0}});
  CHECK(std::abs(unshifted[0].value - (model.alpha() + shifted.value)) < 1e-8);
}

TEST_CASE("quadrature preconditions") {
  CHECK_THROWS_AS(correlator_quadrature(ShiftedModel({3, 2, 0.05}), std::vector<int>{1, 0, 0}), DomainError);
  CHECK_THROWS_AS(correlator_quadrature(ShiftedModel({5, 1, 0.05}), std::vector<int>{1, 0, 0, 0, 0}), DomainError);
  CHECK_THROWS_AS(correlator_quadrature(ShiftedModel({3, 1, 0.05}), std::vector<int>{1, 0}), DomainError);
}

TEST_CASE("exact identities vanish at N = 1 by quadrature, dense and spectral") {
  const ShiftedModel model({3, 1, 0.05});
  for (bool dense : {true, false}) {
    EstimatorConfig est;
    est.dense_resolvent = dense;
    std::vector<SDRequest> reqs;
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k <= 4; ++k) reqs.push_back({c, k, SDForm::exact});
    }
    for (const auto& e : sd_residuals(model, reqs, est)) {
      CHECK(e.normalized <= 1e-6);
      CHECK(e.scale > 0.0);
      CHECK(e.std_error == 0.0);
    }
  }
}

TEST_CASE("exact identity at zero coupling and k = 0 is the vanishing first moment") {
  const ShiftedModel gauss({3, 1, 0.0});
  const auto e = sd_residual_exact(gauss, 0, 0, {});
  CHECK(std::abs(e.residual) < 1e-14);
  CHECK(std::abs(e.terms[1]) < 1e-14);
}

TEST_CASE("leading identity vanishes on semicircle inputs") {
  for (int n : {1, 2, 8}) {
    const ShiftedModel model({3, n, 0.1});
    for (int k = 0; k <= 9; ++k) {
      const auto e = sd_residual_leading_semicircle(model, 0, k);
      CHECK(std::abs(e.residual) <= 1e-12 * std::max(1.0, e.scale));
    }
  }
}

TEST_CASE("jackknife of exactly linear data") {
  MonteCarloBlocks blocks;
  blocks.observable_count = 1;
  for (int b = 0; b < 8; ++b) {
    blocks.weighted.push_back({Complex(2.0 * 5)});
    blocks.phase.push_back(5.0);
  }
  blocks.samples = 40;
  const auto est = jackknife_mean(blocks, 0);
  CHECK(est.value.real() == doctest::Approx(2.0));
  CHECK(est.std_error == doctest::Approx(0.0).scale(1.0));
  CHECK(blocks.phase_mean() == doctest::Approx(1.0));
  CHECK_THROWS_AS(jackknife_mean(blocks, 1), DomainError);
}

TEST_CASE("Monte Carlo reproduces Gaussian matrix moments") {
  const ShiftedModel gauss({3, 2, 0.0});
  const auto tr2 = correlator_mc(gauss, {{{0, 2}}}, mc_config(40000, 1));
  CHECK(std::abs(tr2.value.real() / 2 - 1.0) <= 3 * tr2.std_error / 2);
  CHECK(tr2.phase_mean == doctest::Approx(1.0));
  CHECK(tr2.method == EstimatorMethod::monte_carlo);
  const auto tr1 = correlator_mc(gauss, {{{1, 1}}}, mc_config(40000, 2));
  CHECK(std::abs(tr1.value) <= 3 * tr1.std_error);
}

TEST_CASE("Gaussian connected two-trace correlator matches the Wick oracle") {
  for (int n : {2, 3}) {
    const Rational var = wick_variance_tr2(n);
    CHECK(var == 2);
    const ShiftedModel gauss({1, n, 0.0});
    const auto rep = factorization_check(gauss, 2, 2, mc_config(60000, 5));
    CHECK(std::abs(rep.connected.real() - var.convert_to<double>()) <= 3 * rep.connected_error);
  }
}

TEST_CASE("factorization with a trivial trace is exactly zero") {
  const ShiftedModel model({3, 2, 0.05});
  const auto a = factorization_check(model, 0, 3, mc_config(100, 0));
  CHECK(a.connected == Complex(0.0));
  CHECK(a.connected_error == 0.0);
  const auto b = factorization_check(model, 2, 0, mc_config(100, 0));
  CHECK(b.normalized == 0.0);
}

TEST_CASE("first trace moment is consistent with zero at small coupling") {
  const ShiftedModel model({3, 2, 0.05});
  const auto tr = correlator_mc(model, {{{0, 1}}}, mc_config(40000, 9));
  CHECK(std::abs(tr.value) <= 3 * tr.std_error);
  CHECK(tr.phase_mean > kSignProblemThreshold);
}

TEST_CASE("Monte Carlo is deterministic and independent of thread count") {
  const ShiftedModel model({3, 2, 0.05});
  auto cfg = mc_config(3000, 77);
  const TraceWord word{{{0, 2}, {1, 1}}};
  cfg.threads = 1;
  const auto a = correlator_mc(model, word, cfg);
  cfg.threads = 3;
  const auto b = correlator_mc(model, word, cfg);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
  cfg.seed = 78;
  const auto c = correlator_mc(model, word, cfg);
  CHECK(c.value != a.value);
}

TEST_CASE("Monte Carlo configuration validation") {
  MonteCarloConfig cfg;
  cfg.chains = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.steps = 10;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.burn_in_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  CHECK_THROWS_AS(correlator_mc(ShiftedModel({3, 17, 0.05}), {{{0, 1}}}, mc_config(100, 0)), DomainError);
}

TEST_CASE("exact identity at N = 2 is consistent with zero by Monte Carlo") {
  const ShiftedModel model({3, 2, 0.05});
  EstimatorConfig est;
  est.method = EstimatorMethod::monte_carlo;
  est.monte_carlo = mc_config(30000, 3);
  const SDRequest reqs[] = {{0, 1, SDForm::exact}, {0, 2, SDForm::exact}, {0, 1, SDForm::leading}};
  const auto entries = sd_residuals(model, reqs, est);
  for (const auto& e : entries) {
    CHECK(std::isfinite(e.normalized));
    CHECK(e.std_error > 0.0);
    CHECK_FALSE(e.sign_problem);
  }
  CHECK(std::abs(entries[0].residual) <= 3 * entries[0].std_error);
  CHECK(std::abs(entries[1].residual) <= 3 * entries[1].std_error);
  const auto j = to_json(entries[0]);
  for (const char* key : {"color", "k", "residual_re", "residual_im", "scale", "normalized", "method", "std_error",
                          "phase_mean"}) {
    CHECK(j.contains(key));
  }
  CHECK(j.at("method") == "monte_carlo");
}

TEST_CASE("tensor moments in the Gaussian limit") {
  const auto m = tensor_moments({3, 1, 0.0}, 3);
  CHECK(m[0].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m[1].real() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m[2].real() == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(m[3].real() == doctest::Approx(48.0).epsilon(1e-11));
  CHECK(tensor_quartic_coupling(3, 0.16) == doctest::Approx(0.03));
}

TEST_CASE("both sides of the intermediate-field duality agree at N = 1") {
  for (int p = 0; p <= 3; ++p) {
    const auto cmp = tensor_side_check({3, 1, 0.05}, p);
    CHECK(cmp.difference <= 1e-6 * std::max(1.0, std::abs(cmp.tensor_side)));
  }
  const auto zero = tensor_side_check({3, 1, 0.05}, 0);
  CHECK(zero.tensor_side.real() == doctest::Approx(1.0));
  // First-order check: <|T|^2> = 2 - 2 D lambda + O(lambda^2).
  for (double lambda : {1e-3, 2e-3}) {
    const auto cmp = tensor_side_check({3, 1, lambda}, 1);
    CHECK(std::abs(cmp.tensor_side.real() - (2 - 6 * lambda)) < 60 * lambda * lambda);
    CHECK(std::abs(cmp.matrix_side - cmp.tensor_side) < 1e-8);
  }
}

TEST_CASE("matrix moments recovered from tensor-side theta moments") {
  const ModelParams p{3, 1, 0.05};
  // <|T|^12> is O(1e4); the quadrature tolerance is absolute.
  QuadratureConfig loose;
  loose.tolerance = 1e-6;
  ThetaMoments theta;
  for (const auto& v : tensor_moments(p, 6, loose)) theta.values.push_back(v);
  std::vector<std::vector<int>> words;
  for (int q = 0; q <= 6; ++q) words.push_back({q, 0, 0});
  const auto direct = correlator_quadrature_unshifted(p, words);
  for (int q = 0; q <= 6; ++q) {
    CHECK(std::abs(matrix_from_theta(q, theta, p.coupling) - direct[q].value) < 1e-6);
  }
}
