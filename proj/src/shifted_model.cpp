#include "melonfield/shifted_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "melonfield/errors.hpp"

namespace melonfield {

namespace {

constexpr double kSingularResolvent = 1e-14;

// Visits every tuple (j_b) over the colors other than `skip` (skip = -1 visits full tuples),
// passing the sum of the selected eigenvalues.
template <typename Fn>
void for_each_tuple_sum(const std::vector<std::vector<double>>& eigenvalues, int skip, Fn&& fn) {
  const int d = static_cast<int>(eigenvalues.size());
  std::vector<int> colors;
  for (int c = 0; c < d; ++c) {
    if (c != skip) colors.push_back(c);
  }
  const int m = static_cast<int>(colors.size());
  if (m == 0) {
    fn(0.0);
    return;
  }
  std::vector<int> idx(m, 0);
  while (true) {
    double sum = 0.0;
    for (int i = 0; i < m; ++i) sum += eigenvalues[colors[i]][idx[i]];
    fn(sum);
    int pos = m - 1;
    while (pos >= 0 && ++idx[pos] == static_cast<int>(eigenvalues[colors[pos]].size())) idx[pos--] = 0;
    if (pos < 0) break;
  }
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

void check_matrices(std::span<const Eigen::MatrixXcd> matrices, const ModelParams& params) {
  if (static_cast<int>(matrices.size()) != params.colors) throw DomainError("ShiftedModel: expected one matrix per color");
  for (const auto& m : matrices) {
    if (m.rows() != params.size || m.cols() != params.size) throw DomainError("ShiftedModel: matrix size must be N x N");
  }
}

}  // namespace

std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd& matrix) {
  if (matrix.rows() == 1) return {matrix(0, 0).real()};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

ShiftedModel::ShiftedModel(const ModelParams& params) : params_(params) {
  params_.validate();
  alpha_ = params_.coupling == 0.0 ? Complex(kAlphaAtZeroCoupling) : alpha_lo(params_.colors, params_.coupling);
  nu_ = params_.fluctuation_scale();
}

Complex ShiftedModel::linear_coefficient() const {
  return alpha_ * std::pow(static_cast<double>(params_.size), 0.5 * params_.colors);
}

Complex ShiftedModel::action(const std::vector<std::vector<double>>& eigenvalues) const {
  const double n = params_.size;
  double quadratic = 0.0;
  double linear = 0.0;
  for (const auto& color : eigenvalues) {
    for (double mu : color) {
      quadratic += mu * mu;
      linear += mu;
    }
  }
  const Complex g = log_coefficient();
  Complex logdet = 0.0;
  for_each_tuple_sum(eigenvalues, -1, [&](double sum) {
    const Complex factor = 1.0 - g * sum;
    if (std::abs(factor) < kSingularResolvent) throw SingularityError("ShiftedModel: singular log-determinant factor");
    logdet += std::log(factor);
  });
  return 0.5 * n * quadratic + linear_coefficient() * linear + logdet;
}

double ShiftedModel::action_real(const std::vector<std::vector<double>>& eigenvalues) const {
  const double n = params_.size;
  double quadratic = 0.0;
  double linear = 0.0;
  for (const auto& color : eigenvalues) {
    for (double mu : color) {
      quadratic += mu * mu;
      linear += mu;
    }
  }
  const Complex g = log_coefficient();
  double log_modulus = 0.0;
  for_each_tuple_sum(eigenvalues, -1, [&](double sum) {
    const double norm = std::norm(1.0 - g * sum);
    if (norm < kSingularResolvent * kSingularResolvent) {
      throw SingularityError("ShiftedModel: singular log-determinant factor");
    }
    log_modulus += 0.5 * std::log(norm);
  });
  return 0.5 * n * quadratic + linear_coefficient().real() * linear + log_modulus;
}

Complex ShiftedModel::action(std::span<const Eigen::MatrixXcd> matrices) const {
  check_matrices(matrices, params_);
  std::vector<std::vector<double>> eigenvalues;
  for (const auto& m : matrices) eigenvalues.push_back(hermitian_eigenvalues(m));
  return action(eigenvalues);
}

std::vector<Complex> ShiftedModel::partial_resolvent_diagonal(const std::vector<std::vector<double>>& eigenvalues,
                                                              int color) const {
  if (color < 0 || color >= static_cast<int>(eigenvalues.size())) throw DomainError("partial_resolvent_diagonal: bad color");
  const Complex g = log_coefficient();
  std::vector<Complex> out;
  out.reserve(eigenvalues[color].size());
  for (double mu : eigenvalues[color]) {
    Complex acc = 0.0;
    for_each_tuple_sum(eigenvalues, color, [&](double sum) {
      const Complex factor = 1.0 - g * (mu + sum);
      if (std::abs(factor) < kSingularResolvent) throw SingularityError("partial_resolvent_diagonal: singular resolvent");
      acc += 1.0 / factor;
    });
    out.push_back(acc);
  }
  return out;
}

Eigen::MatrixXcd ShiftedModel::dense_partial_resolvent(std::span<const Eigen::MatrixXcd> matrices, int color) const {
  check_matrices(matrices, params_);
  const int d = params_.colors;
  const int n = params_.size;
  if (color < 0 || color >= d) throw DomainError("dense_partial_resolvent: bad color");
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);

  Eigen::Index total = 1;
  for (int c = 0; c < d; ++c) total *= n;
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(total, total);
  for (int c = 0; c < d; ++c) {
    Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(1, 1);
    for (int b = 0; b < d; ++b) term = kron(term, b == c ? matrices[b] : id);
    sum += term;
  }
  const Eigen::MatrixXcd big = Eigen::MatrixXcd::Identity(total, total) - log_coefficient() * sum;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(big);
  if (!lu.isInvertible()) throw SingularityError("dense_partial_resolvent: 1 - (alpha/nu) sum Mt is singular");
  const Eigen::MatrixXcd resolvent = lu.inverse();

  // Row-major multi-index with color 0 most significant.
  Eigen::Index stride = 1;
  for (int b = color + 1; b < d; ++b) stride *= n;
  const Eigen::Index others = total / n;
  auto compose = [&](Eigen::Index rest, Eigen::Index a) {
    const Eigen::Index high = rest / stride;
    const Eigen::Index low = rest % stride;
    return (high * n + a) * stride + low;
  };
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      Complex acc = 0.0;
      for (Eigen::Index rest = 0; rest < others; ++rest) acc += resolvent(compose(rest, a), compose(rest, b));
      out(a, b) = acc;
    }
  }
  return out;
}

std::vector<Eigen::MatrixXcd> ShiftedModel::action_gradient(std::span<const Eigen::MatrixXcd> matrices) const {
  check_matrices(matrices, params_);
  const int n = params_.size;
  std::vector<std::vector<double>> eigenvalues;
  std::vector<Eigen::MatrixXcd> vectors;
  for (const auto& m : matrices) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
    const auto& ev = solver.eigenvalues();
    eigenvalues.emplace_back(ev.data(), ev.data() + ev.size());
    vectors.push_back(solver.eigenvectors());
  }
  std::vector<Eigen::MatrixXcd> out;
  for (int c = 0; c < params_.colors; ++c) {
    const auto r = partial_resolvent_diagonal(eigenvalues, c);
    Eigen::VectorXcd diag(n);
    for (int j = 0; j < n; ++j) diag(j) = r[j];
    const Eigen::MatrixXcd ptr = vectors[c] * diag.asDiagonal() * vectors[c].adjoint();
    out.push_back(static_cast<double>(n) * matrices[c] + linear_coefficient() * Eigen::MatrixXcd::Identity(n, n) -
                  log_coefficient() * ptr);
  }
  return out;
}

}  // namespace melonfield
