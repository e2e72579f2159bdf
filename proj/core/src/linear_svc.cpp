#include <algorithm>
#include <cmath>
#include <numeric>

#include "fit_common.hpp"
#include "hypercol/classifiers.hpp"
#include "hypercol/error.hpp"
#include "hypercol/random.hpp"
#include "hypercol/solvers.hpp"

namespace hypercol {
namespace {

// w~ . x~ with the implicit trailing constant feature.
double augmented_dot(std::span<const double> w, std::span<const float> x) {
  const std::size_t d = x.size();
  double z = w[d];
  for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
  return z;
}

}  // namespace

LinearSvcDual solve_linear_svc_dual(const PixelMatrix& X, std::span<const std::uint8_t> y,
                                    double c, double tolerance, std::size_t max_epochs,
                                    std::uint64_t seed) {
  const std::size_t n = X.rows;
  const std::size_t d = X.cols;
  const double diag = 1.0 / (2.0 * c);

  std::vector<double> w(d + 1, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = X.row(i);
    double sq = 1.0;
    for (const float v : x) sq += static_cast<double>(v) * v;
    qii[i] = sq + diag;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);

  LinearSvcDual out;
  for (out.epochs = 0; out.epochs < max_epochs;) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

    for (const std::size_t i : order) {
      const auto x = X.row(i);
      const double s = detail::label_sign(y[i]);
      const double g = s * augmented_dot(w, x) - 1.0 + diag * alpha[i];
      const double pg = alpha[i] > 0.0 ? g : std::min(g, 0.0);
      if (pg == 0.0) continue;
      const double updated = std::max(alpha[i] - g / qii[i], 0.0);
      const double delta = (updated - alpha[i]) * s;
      alpha[i] = updated;
      for (std::size_t j = 0; j < d; ++j) w[j] += delta * x[j];
      w[d] += delta;
    }
    ++out.epochs;

    double wnorm = 0.0;
    for (const double v : w) wnorm += v * v;
    double hinge = 0.0;
    double alpha_sum = 0.0;
    double alpha_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double margin = 1.0 - detail::label_sign(y[i]) * augmented_dot(w, X.row(i));
      if (margin > 0.0) hinge += margin * margin;
      alpha_sum += alpha[i];
      alpha_sq += alpha[i] * alpha[i];
    }
    out.primal = 0.5 * wnorm + c * hinge;
    out.dual = alpha_sum - 0.5 * wnorm - 0.5 * diag * alpha_sq;
    if (out.primal - out.dual <= tolerance * std::max(1.0, out.primal)) break;
  }

  out.bias = w[d];
  w.pop_back();
  out.weights = std::move(w);
  out.alpha = std::move(alpha);
  return out;
}

std::shared_ptr<const LinearModel> fit_linear_svc(const PixelMatrix& X,
                                                  std::span<const std::uint8_t> y,
                                                  const ClassifierConfig& cfg) {
  cfg.check();
  check_training_inputs(X, y);
  return detail::fit_with_scaling<LinearModel>(X, cfg, [&](const PixelMatrix& Xf) {
    LinearSvcDual sol = solve_linear_svc_dual(Xf, y, cfg.regularization_c, cfg.tolerance,
                                              cfg.max_iter, cfg.seed);
    auto model =
        std::make_shared<LinearModel>(ClassifierKind::LinearSvc, std::move(sol.weights), sol.bias);
    model->set_training({cfg.seed, sol.epochs});
    return model;
  });
}

}  // namespace hypercol
