#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "fit_common.hpp"
#include "hypercol/classifiers.hpp"
#include "hypercol/error.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/solvers.hpp"

namespace hypercol {
namespace {

constexpr std::size_t kBlockRows = 1024;

// log(1 + exp(-m)) without overflow.
double softplus_neg(double m) {
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (const double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LogisticObjective::LogisticObjective(const PixelMatrix& X, std::span<const std::uint8_t> y,
                                     double c)
    : X_(X), y_(y), inv_c_(1.0 / c) {
  if (X.rows != y.size()) throw InvalidArgument("LogisticObjective: rows and labels differ");
}

double LogisticObjective::value(std::span<const double> params) const {
  std::vector<double> scratch(params.size());
  return value_and_gradient(params, scratch);
}

double LogisticObjective::value_and_gradient(std::span<const double> params,
                                             std::span<double> grad) const {
  const std::size_t d = X_.cols;
  if (params.size() != d + 1 || grad.size() != d + 1) {
    throw InvalidArgument("LogisticObjective: parameter length must be d + 1");
  }
  const std::size_t blocks = (X_.rows + kBlockRows - 1) / kBlockRows;
  std::vector<double> block_loss(blocks, 0.0);
  std::vector<double> block_grad(blocks * (d + 1), 0.0);

  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t begin = b * kBlockRows;
    const std::size_t end = std::min(X_.rows, begin + kBlockRows);
    double loss = 0.0;
    double* g = block_grad.data() + b * (d + 1);
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = X_.row(i);
      double z = params[d];
      for (std::size_t j = 0; j < d; ++j) z += params[j] * x[j];
      const double s = detail::label_sign(y_[i]);
      const double m = s * z;
      loss += softplus_neg(m);
      const double coef = -s * sigmoid(-m);
      for (std::size_t j = 0; j < d; ++j) g[j] += coef * x[j];
      g[d] += coef;
    }
    block_loss[b] = loss;
  });

  double loss = 0.0;
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    loss += block_loss[b];
    const double* g = block_grad.data() + b * (d + 1);
    for (std::size_t j = 0; j <= d; ++j) grad[j] += g[j];
  }
  double penalty = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    penalty += params[j] * params[j];
    grad[j] += inv_c_ * params[j];
  }
  return loss + 0.5 * inv_c_ * penalty;
}

LbfgsResult minimize_logistic(const LogisticObjective& f, std::size_t max_iter, double tolerance,
                              std::size_t history) {
  const std::size_t n = f.size();
  LbfgsResult res;
  res.params.assign(n, 0.0);
  std::vector<double> grad(n);
  res.value = f.value_and_gradient(res.params, grad);

  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(n), trial(n), trial_grad(n);
  std::vector<double> alpha(history);

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    res.grad_max_norm = max_abs(grad);
    if (res.grad_max_norm < tolerance) {
      res.converged = true;
      break;
    }

    // Two-loop recursion: dir = -H grad.
    for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
    const std::size_t m = s_hist.size();
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * y_hist[k][i];
    }
    double initial_step = 1.0;
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& v : dir) v *= gamma;
    } else {
      initial_step = std::min(1.0, 1.0 / std::max(res.grad_max_norm, 1e-300));
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha[k] - beta) * s_hist[k][i];
    }

    double slope = dot(grad, dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = dot(grad, dir);
      initial_step = std::min(1.0, 1.0 / std::max(res.grad_max_norm, 1e-300));
    }

    constexpr double kArmijo = 1e-4;
    double step = initial_step;
    double trial_value = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = res.params[i] + step * dir[i];
      trial_value = f.value_and_gradient(trial, trial_grad);
      if (std::isfinite(trial_value) && trial_value <= res.value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || trial_value >= res.value) {
      // No representable decrease left along this direction.
      break;
    }

    std::vector<double> s(n), yv(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial[i] - res.params[i];
      yv[i] = trial_grad[i] - grad[i];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(yv, yv))) {
      if (s_hist.size() == history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
    }
    res.params.swap(trial);
    grad.swap(trial_grad);
    res.value = trial_value;
  }
  res.grad_max_norm = max_abs(grad);
  if (res.grad_max_norm < tolerance) res.converged = true;
  return res;
}

std::shared_ptr<const LinearModel> fit_logistic_regression(const PixelMatrix& X,
                                                           std::span<const std::uint8_t> y,
                                                           const ClassifierConfig& cfg) {
  cfg.check();
  check_training_inputs(X, y);
  return detail::fit_with_scaling<LinearModel>(X, cfg, [&](const PixelMatrix& Xf) {
    const LogisticObjective objective(Xf, y, cfg.regularization_c);
    LbfgsResult res = minimize_logistic(objective, cfg.max_iter, cfg.tolerance);
    const double intercept = res.params.back();
    res.params.pop_back();
    auto model = std::make_shared<LinearModel>(ClassifierKind::LogisticRegression,
                                               std::move(res.params), intercept);
    model->set_training({cfg.seed, res.iterations});
    return model;
  });
}

}  // namespace hypercol
