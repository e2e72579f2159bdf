#include "hypercol/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hypercol/error.hpp"
#include "hypercol/hypercolumn.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/random.hpp"
#include "hypercol/solvers.hpp"

namespace hypercol {
namespace {

std::size_t common_dimension(const std::vector<ModelPtr>& models) {
  if (models.empty()) throw InvalidArgument("ensemble needs at least one member");
  const std::size_t d = models.front()->dimension();
  for (const auto& m : models) {
    if (!m) throw InvalidArgument("ensemble member is null");
    if (m->dimension() != d) throw InvalidArgument("ensemble members differ in dimension");
  }
  return d;
}

ClassifierConfig reseeded(ClassifierConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  return cfg;
}

}  // namespace

VotingConfig VotingConfig::defaults() {
  VotingConfig cfg;
  cfg.members = {ClassifierConfig::defaults(ClassifierKind::RandomForest),
                 ClassifierConfig::defaults(ClassifierKind::RbfSvc),
                 ClassifierConfig::defaults(ClassifierKind::LogisticRegression)};
  cfg.weights = {0.4, 0.4, 0.2};
  return cfg;
}

void VotingConfig::check() const {
  if (members.empty()) throw InvalidArgument("voting: no members");
  if (weights.size() != members.size()) {
    throw InvalidArgument("voting: one weight per member required");
  }
  double sum = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("voting: weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("voting: weights must sum to 1");
  for (const auto& m : members) {
    if (m.kind == ClassifierKind::Voting || m.kind == ClassifierKind::Stacking) {
      throw InvalidArgument("voting: members must be base classifiers");
    }
    m.check();
  }
}

StackingConfig StackingConfig::defaults() {
  StackingConfig cfg;
  cfg.bases = {ClassifierConfig::defaults(ClassifierKind::RandomForest),
               ClassifierConfig::defaults(ClassifierKind::LinearSvc)};
  cfg.meta = ClassifierConfig::defaults(ClassifierKind::LogisticRegression);
  return cfg;
}

void StackingConfig::check() const {
  if (bases.empty()) throw InvalidArgument("stacking: no base classifiers");
  if (folds < 2) throw InvalidArgument("stacking: folds must be >= 2");
  for (const auto& b : bases) {
    if (b.kind == ClassifierKind::Voting || b.kind == ClassifierKind::Stacking) {
      throw InvalidArgument("stacking: bases must be base classifiers");
    }
    b.check();
  }
  if (meta.kind != ClassifierKind::LogisticRegression) {
    throw InvalidArgument("stacking: meta-learner must be logistic regression");
  }
  meta.check();
}

VotingModel::VotingModel(std::vector<ModelPtr> members, std::vector<double> weights)
    : Classifier(ClassifierKind::Voting, common_dimension(members)),
      members_(std::move(members)),
      weights_(std::move(weights)) {
  if (weights_.size() != members_.size()) {
    throw InvalidArgument("voting: one weight per member required");
  }
}

void VotingModel::score_rows(std::span<const float> rows, std::span<double> out) const {
  const std::size_t n = out.size();
  const std::size_t k_count = members_.size();
  std::vector<double> member_scores(n);
  std::vector<double> terms(n * k_count);
  std::vector<double> lo(n, 1.0), hi(n, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    members_[k]->score_block(rows, member_scores);
    for (std::size_t i = 0; i < n; ++i) {
      terms[i * k_count + k] = weights_[k] * member_scores[i];
      lo[i] = std::min(lo[i], member_scores[i]);
      hi[i] = std::max(hi[i], member_scores[i]);
    }
  }
  // Summing sorted terms makes the result independent of member order.
  for (std::size_t i = 0; i < n; ++i) {
    const auto first = terms.begin() + static_cast<std::ptrdiff_t>(i * k_count);
    std::sort(first, first + static_cast<std::ptrdiff_t>(k_count));
    double sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) sum += first[static_cast<std::ptrdiff_t>(k)];
    out[i] = std::clamp(sum, lo[i], hi[i]);
  }
}

std::size_t VotingModel::parameter_count() const {
  std::size_t total = weights_.size();
  for (const auto& m : members_) total += m->parameter_count();
  return total;
}

StackingModel::StackingModel(std::vector<ModelPtr> bases, ModelPtr meta)
    : Classifier(ClassifierKind::Stacking, common_dimension(bases)),
      bases_(std::move(bases)),
      meta_(std::move(meta)) {
  if (!meta_ || meta_->dimension() != bases_.size()) {
    throw InvalidArgument("stacking: meta-learner dimension must equal the base count");
  }
}

PixelMatrix StackingModel::meta_features(std::span<const float> rows) const {
  const std::size_t n = rows.size() / dimension();
  PixelMatrix meta(n, bases_.size());
  std::vector<double> scores(n);
  for (std::size_t b = 0; b < bases_.size(); ++b) {
    bases_[b]->score_block(rows, scores);
    for (std::size_t i = 0; i < n; ++i) meta(i, b) = static_cast<float>(scores[i]);
  }
  return meta;
}

void StackingModel::score_rows(std::span<const float> rows, std::span<double> out) const {
  const PixelMatrix meta = meta_features(rows);
  meta_->score_block(meta.data, out);
}

std::size_t StackingModel::parameter_count() const {
  std::size_t total = meta_->parameter_count();
  for (const auto& b : bases_) total += b->parameter_count();
  return total;
}

ModelPtr fit_with_row_cap(const PixelMatrix& X, std::span<const std::uint8_t> y,
                          const ClassifierConfig& cfg) {
  if (cfg.kind != ClassifierKind::RbfSvc || X.rows <= cfg.rbf_row_cap) {
    return fit_classifier(X, y, cfg);
  }
  const auto rows =
      stratified_select_total(y, cfg.rbf_row_cap, derive_seed({cfg.seed, tag_hash("row-cap")}));
  const PixelMatrix sub_x = X.select_rows(rows);
  std::vector<std::uint8_t> sub_y;
  sub_y.reserve(rows.size());
  for (const std::size_t i : rows) sub_y.push_back(y[i]);
  return fit_classifier(sub_x, sub_y, cfg);
}

std::shared_ptr<const VotingModel> fit_voting(const PixelMatrix& X,
                                              std::span<const std::uint8_t> y,
                                              const VotingConfig& cfg) {
  cfg.check();
  check_training_inputs(X, y);
  std::vector<ModelPtr> members(cfg.members.size());
  parallel_for(members.size(), [&](std::size_t k) {
    const ClassifierConfig member =
        reseeded(cfg.members[k], derive_seed({cfg.seed, tag_hash("voting-member"), k}));
    members[k] = cfg.cap_kernel_rows ? fit_with_row_cap(X, y, member) : fit_classifier(X, y, member);
  });
  auto model = std::make_shared<VotingModel>(std::move(members), cfg.weights);
  model->set_training({cfg.seed, 0});
  return model;
}

std::shared_ptr<const StackingModel> fit_stacking(const PixelMatrix& X,
                                                  std::span<const std::uint8_t> y,
                                                  const StackingConfig& cfg,
                                                  StackingTrace* trace) {
  cfg.check();
  check_training_inputs(X, y);
  const auto positives =
      static_cast<std::size_t>(std::count(y.begin(), y.end(), std::uint8_t{1}));
  if (positives < cfg.folds || y.size() - positives < cfg.folds) {
    throw InvalidArgument("stacking: each class needs at least " + std::to_string(cfg.folds) +
                          " rows for stratified folds");
  }

  const std::size_t n_bases = cfg.bases.size();
  const auto fold_of_row =
      stratified_folds(y, cfg.folds, derive_seed({cfg.seed, tag_hash("stacking-folds")}));
  std::vector<std::vector<std::size_t>> held(cfg.folds), kept(cfg.folds);
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t f = 0; f < cfg.folds; ++f) (fold_of_row[i] == f ? held : kept)[f].push_back(i);
  }

  PixelMatrix meta_x(X.rows, n_bases);
  parallel_for(n_bases * cfg.folds, [&](std::size_t task) {
    const std::size_t b = task / cfg.folds;
    const std::size_t f = task % cfg.folds;
    const PixelMatrix train_x = X.select_rows(kept[f]);
    std::vector<std::uint8_t> train_y;
    train_y.reserve(kept[f].size());
    for (const std::size_t i : kept[f]) train_y.push_back(y[i]);
    const ClassifierConfig base =
        reseeded(cfg.bases[b], derive_seed({cfg.seed, tag_hash("stacking-fold"), b, f}));
    const ModelPtr model = fit_with_row_cap(train_x, train_y, base);
    const PixelMatrix held_x = X.select_rows(held[f]);
    const auto scores = predict_scores(*model, held_x);
    for (std::size_t k = 0; k < held[f].size(); ++k) {
      meta_x(held[f][k], b) = static_cast<float>(scores[k]);
    }
  });

  std::vector<ModelPtr> bases(n_bases);
  parallel_for(n_bases, [&](std::size_t b) {
    const ClassifierConfig base =
        reseeded(cfg.bases[b], derive_seed({cfg.seed, tag_hash("stacking-full"), b}));
    bases[b] = fit_with_row_cap(X, y, base);
  });
  const ModelPtr meta = fit_logistic_regression(
      meta_x, y, reseeded(cfg.meta, derive_seed({cfg.seed, tag_hash("stacking-meta")})));

  if (trace != nullptr) {
    trace->fold_of_row = fold_of_row;
    trace->trained_rows.assign(n_bases, kept);
    trace->scored_rows.assign(n_bases, held);
    trace->meta_features = meta_x;
  }

  auto model = std::make_shared<StackingModel>(std::move(bases), meta);
  model->set_training({cfg.seed, 0});
  return model;
}

}  // namespace hypercol
