#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hypercol/classifiers.hpp"

namespace hypercol {

struct VotingConfig {
  std::vector<ClassifierConfig> members;
  std::vector<double> weights;
  std::uint64_t seed = 42;
  /// Train kernel SVM members on a seeded stratified subset of
  /// rbf_row_cap rows when the input is larger, instead of failing.
  bool cap_kernel_rows = true;

  /// RF, SVC, LR weighted 0.4, 0.4, 0.2.
  static VotingConfig defaults();

  /// Throws InvalidArgument unless weights are non-negative, one per member,
  /// and sum to 1 within 1e-9.
  void check() const;
};

struct StackingConfig {
  std::vector<ClassifierConfig> bases;
  ClassifierConfig meta;
  std::size_t folds = 5;
  std::uint64_t seed = 42;

  /// Bases RF and LinearSVC, logistic-regression meta-learner, 5 folds.
  static StackingConfig defaults();

  void check() const;
};

/// Weighted soft vote: score = sum_k weight_k * score_k, clamped to the
/// members' [min, max] so rounding can never leave the convex hull.
class VotingModel final : public Classifier {
 public:
  VotingModel(std::vector<ModelPtr> members, std::vector<double> weights);

  const std::vector<ModelPtr>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }

  std::size_t parameter_count() const override;
  void write_payload(ByteWriter& w) const override;

 protected:
  void score_rows(std::span<const float> rows, std::span<double> out) const override;

 private:
  std::vector<ModelPtr> members_;
  std::vector<double> weights_;
};

/// Meta-learner over base-model scores.
class StackingModel final : public Classifier {
 public:
  StackingModel(std::vector<ModelPtr> bases, ModelPtr meta);

  const std::vector<ModelPtr>& bases() const { return bases_; }
  const ModelPtr& meta() const { return meta_; }

  /// Base scores for each row as a rows x bases matrix (the meta-features).
  PixelMatrix meta_features(std::span<const float> rows) const;

  std::size_t parameter_count() const override;
  void write_payload(ByteWriter& w) const override;

 protected:
  void score_rows(std::span<const float> rows, std::span<double> out) const override;

 private:
  std::vector<ModelPtr> bases_;
  ModelPtr meta_;
};

/// Bookkeeping from the out-of-fold stage of fit_stacking.
struct StackingTrace {
  std::vector<std::size_t> fold_of_row;
  /// trained_rows[b][f] / scored_rows[b][f]: rows used to fit base b on fold
  /// f, and rows that model produced meta-features for.
  std::vector<std::vector<std::vector<std::size_t>>> trained_rows;
  std::vector<std::vector<std::vector<std::size_t>>> scored_rows;
  PixelMatrix meta_features;
};

/// Fits every member on (X, y) with seeds derived from cfg.seed and the
/// member position.
std::shared_ptr<const VotingModel> fit_voting(const PixelMatrix& X,
                                              std::span<const std::uint8_t> y,
                                              const VotingConfig& cfg);

/// Out-of-fold stacking: stratified k-fold meta-features from each base,
/// a meta-learner fitted on them, then bases refitted on all rows.
/// Throws InvalidArgument if either class has fewer rows than folds.
std::shared_ptr<const StackingModel> fit_stacking(const PixelMatrix& X,
                                                  std::span<const std::uint8_t> y,
                                                  const StackingConfig& cfg,
                                                  StackingTrace* trace = nullptr);

/// Fits a base model, first reducing a kernel SVM's training set to
/// cfg.rbf_row_cap rows by seeded stratified selection when needed.
ModelPtr fit_with_row_cap(const PixelMatrix& X, std::span<const std::uint8_t> y,
                          const ClassifierConfig& cfg);

}  // namespace hypercol
