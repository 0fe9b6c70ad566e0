#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "melonfield/model_core.hpp"

namespace melonfield {

/// The matrix model in fluctuation variables M^{(c)} = alpha 1 + Mt^{(c)} / nu, nu = N^{(D-2)/2}:
///   S(Mt) = (N/2) sum_c Tr Mt_c^2 + alpha N^{D/2} sum_c Tr Mt_c + Tr log(1 - (alpha/nu) sum_c Mt_c(x)),
/// where Mt_c(x) acts on factor c of (C^N)^{(x) D}. The weight is exp(-S).
class ShiftedModel {
 public:
  /// coupling = 0 uses the documented limit alpha = 0 (pure Gaussian).
  explicit ShiftedModel(const ModelParams& params);

  const ModelParams& params() const { return params_; }
  Complex alpha() const { return alpha_; }
  double nu() const { return nu_; }
  int colors() const { return params_.colors; }
  int size() const { return params_.size; }
  /// alpha / nu, the coefficient inside the log-determinant.
  Complex log_coefficient() const { return alpha_ / nu_; }
  /// alpha N^{D/2}, the coefficient of the linear term.
  Complex linear_coefficient() const;

  /// Action from per-color eigenvalues (the action is a spectral function).
  Complex action(const std::vector<std::vector<double>>& eigenvalues) const;
  Complex action(std::span<const Eigen::MatrixXcd> matrices) const;
  /// Re S only (log-moduli, no branch choice); all that Metropolis acceptance needs.
  double action_real(const std::vector<std::vector<double>>& eigenvalues) const;

  /// Diagonal of Ptr_{!=c}((1 - (alpha/nu) sum Mt)^{-1}) in the eigenbasis of Mt_c:
  /// r_j = sum over the other colors' eigenvalue tuples of 1/(1 - (alpha/nu)(mu_j^{(c)} + sum_b mu^{(b)})).
  std::vector<Complex> partial_resolvent_diagonal(const std::vector<std::vector<double>>& eigenvalues, int color) const;

  /// Ptr_{!=c} of the dense N^D x N^D resolvent, built by Kronecker sums and LU inversion.
  /// Cost O(N^{3D}); intended for N^D <= 4096.
  Eigen::MatrixXcd dense_partial_resolvent(std::span<const Eigen::MatrixXcd> matrices, int color) const;

  /// dS/d(Mt_c)_{ij} arranged as a matrix G_c with (G_c)_{ji} = dS/d(Mt_c)_{ij}.
  std::vector<Eigen::MatrixXcd> action_gradient(std::span<const Eigen::MatrixXcd> matrices) const;

 private:
  ModelParams params_;
  Complex alpha_;
  double nu_;
};

/// Eigenvalues of a Hermitian matrix, ascending.
std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd& matrix);

}  // namespace melonfield
