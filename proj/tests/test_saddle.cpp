#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <numeric>
#include <random>

#include "melonfield/errors.hpp"
#include "melonfield/saddle.hpp"

using namespace melonfield;
using Float50 = boost::multiprecision::cpp_bin_float_50;

namespace {

// Physicists' Hermite polynomial and its derivative in 50 digits.
std::pair<Float50, Float50> hermite50(int n, const Float50& x) {
  Float50 prev = 1;
  Float50 curr = 2 * x;
  if (n == 0) return {prev, 0};
  for (int k = 1; k < n; ++k) {
    Float50 next = 2 * x * curr - 2 * k * prev;
    prev = curr;
    curr = next;
  }
  return {curr, 2 * n * prev};
}

Spectrum random_spectrum(std::mt19937_64& rng, int d, int n, Complex center) {
  std::normal_distribution<double> g(0.0, 0.3);
  Spectrum s;
  s.values.assign(d, std::vector<Complex>(n));
  for (auto& color : s.values) {
    for (auto& v : color) v = center + Complex(g(rng), 0.05 * g(rng));
  }
  return s;
}

}  // namespace

TEST_CASE("Hermite roots are zeros of H_N to working precision") {
  for (int n : {1, 2, 3, 7, 16, 40, 64}) {
    const auto roots = hermite_roots(n);
    REQUIRE(roots.size() == static_cast<std::size_t>(n));
    CHECK(std::is_sorted(roots.begin(), roots.end()));
    for (int k = 0; k < n; ++k) {
      CHECK(roots[k] == -roots[n - 1 - k]);
      const auto [h, dh] = hermite50(n, Float50(roots[k]));
      CHECK(abs(h / dh) < 1e-13 * (1 + std::abs(roots[k])));
    }
  }
}

TEST_CASE("Hermite roots are the equilibrium of unit charges in a quadratic well") {
  for (int n : {2, 5, 12, 33}) {
    const auto x = hermite_roots(n);
    for (int k = 0; k < n; ++k) {
      double force = 0.0;
      for (int l = 0; l < n; ++l) {
        if (l != k) force += 1.0 / (x[k] - x[l]);
      }
      CHECK(force == doctest::Approx(x[k]).epsilon(1e-11).scale(1.0));
    }
  }
}

TEST_CASE("NLO reduced solution is the rescaled Hermite configuration") {
  for (int n : {1, 2, 4, 8, 16, 32, 64}) {
    const ModelParams p{3, n, 0.1};
    const auto red = nlo_reduced_solve(p);
    const double s = semicircle_law(3, 0.1).scale();
    const auto h = hermite_roots(n);
    for (int k = 0; k < n; ++k) CHECK(std::abs(red.values[k] - std::sqrt(2.0 / (n * s)) * h[k]) <= 1e-10);
    CHECK(nlo_reduced_residual(red, p) < 1e-12);
    CHECK(std::abs(std::accumulate(red.values.begin(), red.values.end(), 0.0)) < 1e-12);
  }
  // N = 2 by hand: (1 + |alpha|^2) x = 1/(2x).
  const Float50 a = sqrt(Float50("0.2")) / (1 + sqrt(Float50("1.6")));
  const double x2 = static_cast<double>(1 / sqrt(2 * (1 + a * a)));
  const auto two = nlo_reduced_solve({3, 2, 0.1});
  CHECK(std::abs(two.values[0] + x2) <= 1e-12);
  CHECK(std::abs(two.values[1] - x2) <= 1e-12);
}

TEST_CASE("at N = 1 the saddle equation is the alpha quadratic") {
  for (double lambda : {0.01, 0.1, 1.0}) {
    const ModelParams p{3, 1, lambda};
    const auto r = saddle_residual(Spectrum::symmetric(3, {alpha_lo(3, lambda)}), p);
    CHECK(sup_norm(r) < 1e-15);
    const auto sol = solve_newton(p, {});
    CHECK(sol.converged);
    for (const auto& color : sol.spectrum.values) CHECK(std::abs(color[0] - alpha_lo(3, lambda)) < 1e-12);
  }
}

TEST_CASE("residual is equivariant under eigenvalue and color permutations") {
  std::mt19937_64 rng(3);
  const ModelParams p{3, 3, 0.1};
  for (int trial = 0; trial < 5; ++trial) {
    const Spectrum s = random_spectrum(rng, 3, 3, alpha_lo(3, 0.1));
    const auto base = saddle_residual(s, p);

    std::vector<int> perm{2, 0, 1};
    Spectrum within = s;
    for (int k = 0; k < 3; ++k) within.values[1][k] = s.values[1][perm[k]];
    const auto r1 = saddle_residual(within, p);
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 3; ++k) {
        const int src = c == 1 ? perm[k] : k;
        CHECK(std::abs(r1[c * 3 + k] - base[c * 3 + src]) < 1e-13);
      }
    }

    Spectrum swapped = s;
    std::swap(swapped.values[0], swapped.values[2]);
    const auto r2 = saddle_residual(swapped, p);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(r2[0 * 3 + k] - base[2 * 3 + k]) < 1e-13);
      CHECK(std::abs(r2[2 * 3 + k] - base[0 * 3 + k]) < 1e-13);
      CHECK(std::abs(r2[1 * 3 + k] - base[1 * 3 + k]) < 1e-13);
    }
  }
}

TEST_CASE("symmetric and full residuals agree on symmetric spectra") {
  std::mt19937_64 rng(5);
  for (int d : {2, 3, 4}) {
    const ModelParams p{d, 4, 0.2};
    const Spectrum s = random_spectrum(rng, 1, 4, alpha_lo(d, 0.2));
    const Spectrum sym = Spectrum::symmetric(d, s.values[0]);
    const auto full = saddle_residual(sym, p, SolverMode::full_coupled);
    const auto reduced = saddle_residual(sym, p, SolverMode::symmetric_ansatz);
    REQUIRE(full.size() == reduced.size());
    for (std::size_t i = 0; i < full.size(); ++i) CHECK(std::abs(full[i] - reduced[i]) < 1e-13);
  }
}

TEST_CASE("symmetric mode rejects color-asymmetric spectra") {
  std::mt19937_64 rng(9);
  const Spectrum s = random_spectrum(rng, 3, 2, alpha_lo(3, 0.1));
  CHECK_THROWS_AS(saddle_residual(s, {3, 2, 0.1}, SolverMode::symmetric_ansatz), DomainError);
}

TEST_CASE("collisions and shape mismatches are reported") {
  const Complex a = alpha_lo(3, 0.1);
  CHECK_THROWS_AS(saddle_residual(Spectrum::symmetric(3, {a, a}), {3, 2, 0.1}), SingularityError);
  CHECK_THROWS_AS(saddle_residual(Spectrum::symmetric(2, {a, a + 0.1}), {3, 2, 0.1}), DomainError);
  CHECK_THROWS_AS(Spectrum::symmetric(3, {a, a}).check_distinct(), SingularityError);
}

TEST_CASE("Newton converges in symmetric mode and approaches the NLO prediction") {
  for (int n : {2, 4, 8, 16}) {
    const ModelParams p{3, n, 0.1};
    const auto sol = solve_newton(p, {});
    CHECK(sol.converged);
    CHECK(sol.residual_norm <= 1e-12);
    CHECK(sup_norm(saddle_residual(sol.spectrum, p)) <= 1e-12);
    const auto cmp = compare_to_nlo(sol, p);
    REQUIRE(cmp.ks_distance.has_value());
    CHECK(*cmp.ks_distance < 0.5);
    CHECK(cmp.rescaled.size() == static_cast<std::size_t>(n));
  }
}

TEST_CASE("full coupled mode converges at small N") {
  for (int n : {2, 3}) {
    const ModelParams p{3, n, 0.1};
    SolverConfig cfg;
    cfg.mode = SolverMode::full_coupled;
    cfg.seed = 17;
    const auto sol = solve_newton(p, cfg);
    CHECK(sol.converged);
    CHECK(sup_norm(saddle_residual(sol.spectrum, p)) <= 1e-12);
  }
}

TEST_CASE("solver is deterministic for a fixed seed") {
  SolverConfig cfg;
  cfg.mode = SolverMode::full_coupled;
  cfg.seed = 42;
  const auto a = solve_newton({3, 3, 0.1}, cfg);
  const auto b = solve_newton({3, 3, 0.1}, cfg);
  CHECK(a.spectrum.values == b.spectrum.values);
  CHECK(a.residual_history == b.residual_history);
  CHECK(to_json(a, {3, 3, 0.1}).dump() == to_json(b, {3, 3, 0.1}).dump());
}

TEST_CASE("initial spectrum sits near the NLO configuration") {
  const ModelParams p{3, 4, 0.1};
  const auto s = initial_spectrum(p, {});
  const auto red = nlo_reduced_solve(p);
  const double nu = p.fluctuation_scale();
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(s.values[0][k] - (alpha_lo(3, 0.1) + red.values[k] / nu)) < 1e-2);
  }
}

TEST_CASE("solver configuration validation") {
  SolverConfig cfg;
  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.damping = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  CHECK_THROWS_AS(solve_newton({3, 2, 0.0}, {}), DomainError);
}

TEST_CASE("solution JSON records parameters and convergence") {
  const ModelParams p{3, 2, 0.1};
  const auto j = to_json(solve_newton(p, {}), p);
  CHECK(j.at("params").at("D") == 3);
  CHECK(j.at("params").at("N") == 2);
  CHECK(j.at("converged") == true);
  CHECK(j.at("spectrum").size() == 3);
}
