#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>
#include <unordered_map>

#include "fit_common.hpp"
#include "hypercol/classifiers.hpp"
#include "hypercol/error.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/random.hpp"
#include "hypercol/solvers.hpp"

namespace hypercol {
namespace {

constexpr double kTau = 1e-12;

// LRU cache of kernel columns K(., i), stored as float.
class KernelCache {
 public:
  KernelCache(const PixelMatrix& X, double gamma, std::size_t budget_mb)
      : X_(X), gamma_(gamma) {
    const std::size_t column_bytes = std::max<std::size_t>(1, X.rows * sizeof(float));
    capacity_ = std::max<std::size_t>(2, (budget_mb << 20) / column_bytes);
  }

  const float* column(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->values.data();
    }
    std::vector<float> values;
    if (lru_.size() >= capacity_) {
      values = std::move(lru_.back().values);
      index_.erase(lru_.back().index);
      lru_.pop_back();
    }
    values.resize(X_.rows);
    const auto xi = X_.row(i);
    for (std::size_t k = 0; k < X_.rows; ++k) {
      values[k] = static_cast<float>(rbf_kernel(xi, X_.row(k), gamma_));
    }
    lru_.push_front({i, std::move(values)});
    index_[i] = lru_.begin();
    return lru_.front().values.data();
  }

 private:
  struct Entry {
    std::size_t index;
    std::vector<float> values;
  };
  const PixelMatrix& X_;
  double gamma_;
  std::size_t capacity_ = 2;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

double decision_value(const PixelMatrix& sv, std::span<const double> coef, double bias,
                      double gamma, std::span<const float> x) {
  double f = bias;
  for (std::size_t k = 0; k < sv.rows; ++k) f += coef[k] * rbf_kernel(sv.row(k), x, gamma);
  return f;
}

struct SupportSet {
  PixelMatrix vectors;
  std::vector<double> coef;
};

SupportSet extract_support(const PixelMatrix& X, std::span<const std::uint8_t> y,
                           const RbfDual& dual) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dual.alpha.size(); ++i) {
    if (dual.alpha[i] > 0.0) rows.push_back(i);
  }
  SupportSet s;
  s.vectors = X.select_rows(rows);
  s.coef.reserve(rows.size());
  for (const std::size_t i : rows) s.coef.push_back(dual.alpha[i] * detail::label_sign(y[i]));
  return s;
}

}  // namespace

double rbf_kernel(std::span<const float> a, std::span<const float> b, double gamma) {
  double sq = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - b[j];
    sq += diff * diff;
  }
  return std::exp(-gamma * sq);
}

double rbf_gamma_scale(const PixelMatrix& X) {
  const std::size_t n = X.data.size();
  if (n == 0 || X.cols == 0) throw InvalidArgument("rbf_gamma_scale: empty matrix");
  double mean = 0.0;
  for (const float v : X.data) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const float v : X.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double d = static_cast<double>(X.cols);
  return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
}

RbfDual solve_rbf_dual(const PixelMatrix& X, std::span<const std::uint8_t> y, double c,
                       double gamma, double tolerance, std::size_t max_iter,
                       std::size_t cache_mb) {
  const std::size_t n = X.rows;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = detail::label_sign(y[i]);

  KernelCache cache(X, gamma, cache_mb);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  // K(x, x) = 1 for the RBF kernel.
  constexpr double kDiag = 1.0;

  auto in_up = [&](std::size_t t) {
    return (s[t] > 0 && alpha[t] < c) || (s[t] < 0 && alpha[t] > 0);
  };
  auto in_low = [&](std::size_t t) {
    return (s[t] > 0 && alpha[t] > 0) || (s[t] < 0 && alpha[t] < c);
  };

  RbfDual out;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -s[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < tolerance) {
      out.converged = true;
      break;
    }

    const float* ki = cache.column(i);
    const float* kj = cache.column(j);
    const double qij = s[i] * s[j] * ki[j];
    const double old_i = alpha[i];
    const double old_j = alpha[j];

    if (s[i] != s[j]) {
      double quad = 2.0 * kDiag + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 2.0 * kDiag - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = (alpha[i] - old_i) * s[i];
    const double dj = (alpha[j] - old_j) * s[j];
    for (std::size_t t = 0; t < n; ++t) grad[t] += s[t] * (ki[t] * di + kj[t] * dj);
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = s[t] * grad[t];
    if (alpha[t] >= c) {
      if (s[t] < 0) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else if (alpha[t] <= 0.0) {
      if (s[t] > 0) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                    : 0.5 * (upper + lower);
  out.bias = -rho;

  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) objective += alpha[t] * (grad[t] - 1.0);
  out.objective = 0.5 * objective;
  out.alpha = std::move(alpha);
  return out;
}

PlattParams fit_platt(std::span<const double> decision, std::span<const std::uint8_t> y) {
  if (decision.size() != y.size()) throw InvalidArgument("fit_platt: length mismatch");
  const std::size_t n = decision.size();
  double prior1 = 0.0;
  for (const auto v : y) prior1 += v;
  const double prior0 = static_cast<double>(n) - prior1;

  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10;
  constexpr double kSigma = 1e-12;
  constexpr double kEps = 1e-5;
  const double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo_target = 1.0 / (prior0 + 2.0);

  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) target[i] = y[i] ? hi_target : lo_target;

  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decision[i] * a + b;
      f += z >= 0.0 ? target[i] * z + std::log1p(std::exp(-z))
                    : (target[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };

  PlattParams p{0.0, std::log((prior0 + 1.0) / (prior1 + 1.0))};
  double fval = objective(p.a, p.b);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decision[i] * p.a + p.b;
      double prob, q;
      if (z >= 0.0) {
        const double e = std::exp(-z);
        prob = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(z);
        prob = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = prob * q;
      h11 += decision[i] * decision[i] * d2;
      h22 += d2;
      h21 += decision[i] * d2;
      const double d1 = target[i] - prob;
      g1 += decision[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= kMinStep) {
      const double na = p.a + step * da;
      const double nb = p.b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        p = {na, nb};
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }
  return p;
}

RbfSvcModel::RbfSvcModel(PixelMatrix support_vectors, std::vector<double> dual_coef,
                         double intercept, double gamma, double platt_a, double platt_b, double c)
    : Classifier(ClassifierKind::RbfSvc, support_vectors.cols),
      support_(std::move(support_vectors)),
      coef_(std::move(dual_coef)),
      intercept_(intercept),
      gamma_(gamma),
      platt_a_(platt_a),
      platt_b_(platt_b),
      c_(c) {
  if (coef_.size() != support_.rows) {
    throw InvalidArgument("RbfSvcModel: one dual coefficient per support vector required");
  }
}

double RbfSvcModel::decision(std::span<const float> x) const {
  return decision_value(support_, coef_, intercept_, gamma_, x);
}

void RbfSvcModel::score_rows(std::span<const float> rows, std::span<double> out) const {
  const std::size_t d = dimension();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double f = decision(rows.subspan(i * d, d));
    out[i] = sigmoid(-(platt_a_ * f + platt_b_));
  }
}

std::size_t RbfSvcModel::parameter_count() const {
  return support_.rows * dimension() + support_.rows + 1 + 2;
}

std::shared_ptr<const RbfSvcModel> fit_rbf_svc(const PixelMatrix& X,
                                               std::span<const std::uint8_t> y,
                                               const ClassifierConfig& cfg) {
  cfg.check();
  check_training_inputs(X, y);
  if (X.rows > cfg.rbf_row_cap) {
    throw ResourceLimitError("kernel SVM training rows " + std::to_string(X.rows) +
                             " exceed the cap of " + std::to_string(cfg.rbf_row_cap));
  }
  return detail::fit_with_scaling<RbfSvcModel>(X, cfg, [&](const PixelMatrix& Xf) {
    const double c = cfg.regularization_c;
    const double gamma = cfg.rbf_gamma ? *cfg.rbf_gamma : rbf_gamma_scale(Xf);
    const RbfDual full =
        solve_rbf_dual(Xf, y, c, gamma, cfg.tolerance, cfg.max_iter, cfg.kernel_cache_mb);
    SupportSet support = extract_support(Xf, y, full);

    // Out-of-fold decision values for calibration.
    const auto folds =
        stratified_folds(y, cfg.platt_folds, derive_seed({cfg.seed, tag_hash("platt")}));
    std::vector<double> decision(Xf.rows, 0.0);
    std::vector<std::vector<std::size_t>> held(cfg.platt_folds), kept(cfg.platt_folds);
    for (std::size_t i = 0; i < Xf.rows; ++i) {
      for (std::size_t f = 0; f < cfg.platt_folds; ++f) (folds[i] == f ? held : kept)[f].push_back(i);
    }
    parallel_for(cfg.platt_folds, [&](std::size_t f) {
      std::vector<std::uint8_t> sub_y;
      for (const std::size_t i : kept[f]) sub_y.push_back(y[i]);
      const auto positives = std::count(sub_y.begin(), sub_y.end(), std::uint8_t{1});
      if (positives == 0 || positives == static_cast<std::ptrdiff_t>(sub_y.size())) {
        // Too few rows of one class to hold any out; fall back to the
        // in-sample decision values of the full model.
        for (const std::size_t i : held[f]) {
          decision[i] = decision_value(support.vectors, support.coef, full.bias, gamma, Xf.row(i));
        }
        return;
      }
      const PixelMatrix sub_x = Xf.select_rows(kept[f]);
      const RbfDual dual =
          solve_rbf_dual(sub_x, sub_y, c, gamma, cfg.tolerance, cfg.max_iter, cfg.kernel_cache_mb);
      const SupportSet sub = extract_support(sub_x, sub_y, dual);
      for (const std::size_t i : held[f]) {
        decision[i] = decision_value(sub.vectors, sub.coef, dual.bias, gamma, Xf.row(i));
      }
    });
    const PlattParams platt = fit_platt(decision, y);

    auto model = std::make_shared<RbfSvcModel>(std::move(support.vectors), std::move(support.coef),
                                               full.bias, gamma, platt.a, platt.b, c);
    model->set_training({cfg.seed, full.iterations});
    return model;
  });
}

}  // namespace hypercol
