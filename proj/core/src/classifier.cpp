#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "hypercol/classifiers.hpp"
#include "hypercol/error.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/random.hpp"
#include "hypercol/solvers.hpp"

namespace hypercol {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string_view kind_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::LogisticRegression: return "LR";
    case ClassifierKind::LinearSvc: return "LinearSVC";
    case ClassifierKind::RbfSvc: return "SVC";
    case ClassifierKind::RandomForest: return "RF";
    case ClassifierKind::Voting: return "voting";
    case ClassifierKind::Stacking: return "stacking";
  }
  return "unknown";
}

ClassifierKind parse_kind(std::string_view name) {
  for (const auto kind : {ClassifierKind::LogisticRegression, ClassifierKind::LinearSvc,
                          ClassifierKind::RbfSvc, ClassifierKind::RandomForest,
                          ClassifierKind::Voting, ClassifierKind::Stacking}) {
    if (iequals(name, kind_name(kind))) return kind;
  }
  throw InvalidArgument("unknown model kind '" + std::string(name) + "'");
}

ClassifierConfig ClassifierConfig::defaults(ClassifierKind kind) {
  ClassifierConfig cfg;
  cfg.kind = kind;
  if (kind == ClassifierKind::RbfSvc) {
    // max_iter bounds SMO pair updates here rather than epochs.
    cfg.tolerance = 1e-3;
    cfg.max_iter = 10'000'000;
  }
  return cfg;
}

void ClassifierConfig::check() const {
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (n_estimators < 1) throw InvalidArgument("n_estimators must be >= 1");
  if (!(regularization_c > 0.0)) throw InvalidArgument("regularization C must be > 0");
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (rbf_gamma && !(*rbf_gamma > 0.0)) throw InvalidArgument("rbf gamma must be > 0");
  if (platt_folds < 2) throw InvalidArgument("platt_folds must be >= 2");
}

FeatureScaler FeatureScaler::fit(const PixelMatrix& X) {
  FeatureScaler s;
  s.mean.assign(X.cols, 0.0);
  s.scale.assign(X.cols, 1.0);
  if (X.rows == 0) return s;
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto r = X.row(i);
    for (std::size_t j = 0; j < X.cols; ++j) s.mean[j] += r[j];
  }
  for (auto& m : s.mean) m /= static_cast<double>(X.rows);
  std::vector<double> var(X.cols, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto r = X.row(i);
    for (std::size_t j = 0; j < X.cols; ++j) {
      const double d = r[j] - s.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < X.cols; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(X.rows));
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void FeatureScaler::apply(std::span<float> rows) const {
  const std::size_t d = mean.size();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t j = k % d;
    rows[k] = static_cast<float>((rows[k] - mean[j]) / scale[j]);
  }
}

void Classifier::score_block(std::span<const float> rows, std::span<double> out) const {
  if (!scaler_) {
    score_rows(rows, out);
    return;
  }
  std::vector<float> scaled(rows.begin(), rows.end());
  scaler_->apply(scaled);
  score_rows(scaled, out);
}

LinearModel::LinearModel(ClassifierKind kind, std::vector<double> weights, double intercept)
    : Classifier(kind, weights.size()), weights_(std::move(weights)), intercept_(intercept) {
  if (kind != ClassifierKind::LogisticRegression && kind != ClassifierKind::LinearSvc) {
    throw InvalidArgument("LinearModel kind must be LR or LinearSVC");
  }
}

double LinearModel::decision(std::span<const float> x) const {
  double z = intercept_;
  for (std::size_t j = 0; j < weights_.size(); ++j) z += weights_[j] * x[j];
  return z;
}

void LinearModel::score_rows(std::span<const float> rows, std::span<double> out) const {
  const std::size_t d = dimension();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(decision(rows.subspan(i * d, d)));
}

void check_training_inputs(const PixelMatrix& X, std::span<const std::uint8_t> y) {
  if (X.cols == 0) throw InvalidArgument("training matrix has zero columns");
  if (X.rows != y.size()) throw InvalidArgument("training rows and labels differ in length");
  if (X.rows < 2) throw InvalidArgument("at least two training rows are required");
  std::size_t positives = 0;
  for (const auto v : y) {
    if (v > 1) throw InvalidArgument("labels must be 0 or 1");
    positives += v;
  }
  if (positives == 0 || positives == y.size()) {
    throw InvalidArgument("training labels contain a single class");
  }
}

ModelPtr fit_classifier(const PixelMatrix& X, std::span<const std::uint8_t> y,
                        const ClassifierConfig& cfg) {
  switch (cfg.kind) {
    case ClassifierKind::LogisticRegression: return fit_logistic_regression(X, y, cfg);
    case ClassifierKind::LinearSvc: return fit_linear_svc(X, y, cfg);
    case ClassifierKind::RbfSvc: return fit_rbf_svc(X, y, cfg);
    case ClassifierKind::RandomForest: return fit_random_forest(X, y, cfg);
    default:
      throw InvalidArgument("fit_classifier handles base kinds only; use fit_voting/fit_stacking");
  }
}

std::vector<double> predict_scores(const Classifier& model, const PixelMatrix& X,
                                   std::size_t block_rows) {
  if (X.cols != model.dimension()) {
    throw InvalidArgument("feature dimension " + std::to_string(X.cols) +
                          " does not match model dimension " +
                          std::to_string(model.dimension()));
  }
  if (block_rows == 0) throw InvalidArgument("block_rows must be positive");
  std::vector<double> scores(X.rows);
  const std::size_t blocks = (X.rows + block_rows - 1) / block_rows;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t begin = b * block_rows;
    const std::size_t n = std::min(block_rows, X.rows - begin);
    model.score_block({X.data.data() + begin * X.cols, n * X.cols},
                      {scores.data() + begin, n});
  });
  return scores;
}

std::vector<std::uint8_t> threshold_scores(std::span<const double> scores, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("threshold must lie in [0, 1]");
  }
  std::vector<std::uint8_t> labels(scores.size());
  std::transform(scores.begin(), scores.end(), labels.begin(),
                 [threshold](double s) { return static_cast<std::uint8_t>(s >= threshold); });
  return labels;
}

std::vector<std::uint8_t> predict_labels(const Classifier& model, const PixelMatrix& X,
                                         double threshold, std::size_t block_rows) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("threshold must lie in [0, 1]");
  }
  return threshold_scores(predict_scores(model, X, block_rows), threshold);
}

std::size_t count_parameters(const Classifier& model) { return model.parameter_count(); }

std::vector<std::size_t> stratified_folds(std::span<const std::uint8_t> y, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("stratified_folds: need at least 2 folds");
  std::vector<std::size_t> assignment(y.size(), 0);
  std::size_t next_fold = 0;
  for (std::uint8_t c = 0; c <= 1; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) members.push_back(i);
    }
    Rng rng(derive_seed({seed, tag_hash("folds"), c}));
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.uniform_index(i)]);
    }
    // Continue dealing where the previous class stopped so fold sizes stay
    // balanced overall.
    for (const std::size_t row : members) {
      assignment[row] = next_fold;
      next_fold = (next_fold + 1) % folds;
    }
  }
  return assignment;
}

}  // namespace hypercol
