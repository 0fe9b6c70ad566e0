#include <Eigen/Eigenvalues>
#include <cmath>

#include "melonfield/errors.hpp"
#include "melonfield/gauss_hermite.hpp"
#include "melonfield/saddle.hpp"

namespace melonfield {

namespace {

struct Eigensystem {
  std::vector<double> roots;
  std::vector<double> first_components;
};

// Jacobi matrix of the physicists' recurrence: zero diagonal, off-diagonal sqrt(k/2).
Eigensystem jacobi_hermite(int n, bool vectors) {
  Eigensystem out;
  if (n == 1) {
    out.roots = {0.0};
    out.first_components = {1.0};
    return out;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("hermite_roots: tridiagonal eigensolver failed");
  out.roots.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  if (vectors) {
    out.first_components.resize(n);
    for (int i = 0; i < n; ++i) out.first_components[i] = solver.eigenvectors()(0, i);
  }
  return out;
}

// One Newton step H_N(x) / H_N'(x) = H_N / (2 N H_{N-1}), with running rescaling against overflow.
double newton_polish(int n, double x) {
  double prev = 1.0;     // H_0
  double curr = 2.0 * x;  // H_1
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * x * curr - 2.0 * k * prev;
    prev = curr;
    curr = next;
    const double mag = std::abs(curr);
    if (mag > 1e150) {
      prev /= mag;
      curr /= mag;
    }
  }
  if (prev == 0.0) return x;
  return x - curr / (2.0 * n * prev);
}

void symmetrize(std::vector<double>& v) {
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < n / 2; ++i) {
    const double m = 0.5 * (v[n - 1 - i] - v[i]);
    v[i] = -m;
    v[n - 1 - i] = m;
  }
  if (n % 2 == 1) v[n / 2] = 0.0;
}

}  // namespace

std::vector<double> hermite_roots(int n) {
  if (n < 1) throw DomainError("hermite_roots: N must be >= 1");
  Eigensystem sys = jacobi_hermite(n, false);
  for (double& x : sys.roots) x = newton_polish(n, x);
  symmetrize(sys.roots);
  return sys.roots;
}

GaussHermiteRule gauss_hermite_rule(int n) {
  if (n < 1) throw DomainError("gauss_hermite_rule: n must be >= 1");
  Eigensystem sys = jacobi_hermite(n, true);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = std::sqrt(2.0) * newton_polish(n, sys.roots[i]);
    rule.weights[i] = sys.first_components[i] * sys.first_components[i];
  }
  symmetrize(rule.nodes);
  for (int i = 0; i < n / 2; ++i) {
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace melonfield
