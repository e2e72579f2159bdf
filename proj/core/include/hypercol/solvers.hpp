#pragma once

// Numerical kernels behind the classifiers. Exposed so that tests can check
// them against independent oracles (finite differences, KKT conditions,
// brute-force dual solvers).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hypercol/tensor.hpp"

namespace hypercol {

/// Penalised logistic loss over (w, b) packed as params = [w_0..w_{d-1}, b]:
///   sum_i log(1 + exp(-s_i (w.x_i + b))) + |w|^2 / (2C),  s_i = 2 y_i - 1.
/// Evaluated in fixed row blocks and summed in block order, so the value
/// is bit-stable across thread counts.
class LogisticObjective {
 public:
  LogisticObjective(const PixelMatrix& X, std::span<const std::uint8_t> y, double c);

  std::size_t size() const { return X_.cols + 1; }
  double value(std::span<const double> params) const;
  /// Returns the loss and writes the gradient (same length as params).
  double value_and_gradient(std::span<const double> params, std::span<double> grad) const;

 private:
  const PixelMatrix& X_;
  std::span<const std::uint8_t> y_;
  double inv_c_;
};

struct LbfgsResult {
  std::vector<double> params;
  double value = 0.0;
  double grad_max_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with backtracking Armijo line search. Stops when the
/// gradient max-norm drops below tolerance, after max_iter iterations, or
/// when the line search can no longer decrease the objective.
LbfgsResult minimize_logistic(const LogisticObjective& f, std::size_t max_iter, double tolerance,
                              std::size_t history = 10);

struct LinearSvcDual {
  /// Primal weights; bias is carried as weight on an implicit constant-1
  /// feature and reported separately.
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> alpha;
  double primal = 0.0;
  double dual = 0.0;
  std::size_t epochs = 0;
};

/// Dual coordinate descent for
///   min_w  |w~|^2 / 2 + C sum_i max(0, 1 - s_i w~.x~_i)^2,  x~ = [x, 1].
/// The dual is min_a a'(Q + I/(2C))a / 2 - sum a, a >= 0. Stops when
/// (primal - dual) <= tolerance * max(1, primal) or after max_epochs.
LinearSvcDual solve_linear_svc_dual(const PixelMatrix& X, std::span<const std::uint8_t> y,
                                    double c, double tolerance, std::size_t max_epochs,
                                    std::uint64_t seed);

/// gamma = 1 / (d * Var(X)) over all entries; 1 / d when the variance is 0.
double rbf_gamma_scale(const PixelMatrix& X);

double rbf_kernel(std::span<const float> a, std::span<const float> b, double gamma);

struct RbfDual {
  std::vector<double> alpha;
  /// Decision function f(x) = sum_i alpha_i s_i K(x_i, x) + bias.
  double bias = 0.0;
  /// a'Qa / 2 - sum a at the returned alpha.
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// SMO with maximal-violating-pair working set selection on
///   min_a a'Qa / 2 - sum a,  0 <= a_i <= C,  sum_i s_i a_i = 0,
/// Q_ij = s_i s_j K(x_i, x_j). Stops when the violation gap m(a) - M(a)
/// falls below tolerance.
RbfDual solve_rbf_dual(const PixelMatrix& X, std::span<const std::uint8_t> y, double c,
                       double gamma, double tolerance, std::size_t max_iter,
                       std::size_t cache_mb = 256);

struct PlattParams {
  double a = 0.0;
  double b = 0.0;
};

/// Sigmoid fit P(y=1 | f) = 1 / (1 + exp(a f + b)) by Newton's method with
/// backtracking on regularised targets (Platt's prior correction).
PlattParams fit_platt(std::span<const double> decision, std::span<const std::uint8_t> y);

/// Stratified k-fold assignment: fold index per row. Each class is shuffled
/// (seeded) and dealt round-robin, so every fold gets floor or ceil of
/// M_c / k rows of class c.
std::vector<std::size_t> stratified_folds(std::span<const std::uint8_t> y, std::size_t folds,
                                          std::uint64_t seed);

}  // namespace hypercol
