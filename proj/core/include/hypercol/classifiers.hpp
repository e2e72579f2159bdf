#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypercol/tensor.hpp"

namespace hypercol {

class ByteWriter;

enum class ClassifierKind : std::uint8_t {
  LogisticRegression = 1,
  LinearSvc = 2,
  RbfSvc = 3,
  RandomForest = 4,
  Voting = 5,
  Stacking = 6,
};

/// Short names used on the command line and in result files:
/// LR, LinearSVC, SVC, RF, voting, stacking.
std::string_view kind_name(ClassifierKind kind);
/// Inverse of kind_name(); throws InvalidArgument on an unknown name.
ClassifierKind parse_kind(std::string_view name);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::LogisticRegression;
  std::size_t max_iter = 1000;
  std::size_t n_estimators = 10;
  double regularization_c = 1.0;
  double tolerance = 1e-4;
  /// Kernel width; nullopt selects "scale", 1 / (d * Var(X)).
  std::optional<double> rbf_gamma;
  std::uint64_t seed = 42;
  /// z-score features (statistics from the training rows, reused at predict).
  bool standardize = false;
  /// Largest training set the kernel SVM accepts.
  std::size_t rbf_row_cap = 20000;
  /// Folds used to produce out-of-fold decision values for Platt scaling.
  std::size_t platt_folds = 3;
  /// Kernel column cache budget for SMO.
  std::size_t kernel_cache_mb = 256;

  /// Defaults for a kind: SMO uses tolerance 1e-3, the linear solvers 1e-4.
  static ClassifierConfig defaults(ClassifierKind kind);

  /// Throws InvalidArgument when max_iter, n_estimators or C are out of range.
  void check() const;
};

/// Per-feature affine map x -> (x - mean) / scale.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  /// Constant columns get scale 1 so they map to 0.
  static FeatureScaler fit(const PixelMatrix& X);
  void apply(std::span<float> rows) const;

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

struct TrainingInfo {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
};

/// Uniform scoring contract for every trained model.
///
/// Models are immutable after fitting and safe to share across threads.
/// Scores are class-1 probabilities (or, for LinearSVC, the sigmoid of
/// the decision value) and every row is scored independently, so any
/// block decomposition of the input yields bit-identical results.
class Classifier {
 public:
  virtual ~Classifier() = default;

  ClassifierKind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }
  const TrainingInfo& training() const { return training_; }
  const std::optional<FeatureScaler>& scaler() const { return scaler_; }

  virtual std::size_t parameter_count() const = 0;

  /// Scores rows.size() / dimension() contiguous rows into out.
  void score_block(std::span<const float> rows, std::span<double> out) const;

  /// HCM1 payload for this kind (after the common header). Composite models
  /// nest the full blobs of their members.
  virtual void write_payload(ByteWriter& w) const = 0;

  void attach_scaler(FeatureScaler scaler) { scaler_ = std::move(scaler); }
  void set_training(TrainingInfo info) { training_ = info; }

 protected:
  Classifier(ClassifierKind kind, std::size_t dimension) : kind_(kind), dimension_(dimension) {}

  virtual void score_rows(std::span<const float> rows, std::span<double> out) const = 0;

 private:
  ClassifierKind kind_;
  std::size_t dimension_;
  TrainingInfo training_;
  std::optional<FeatureScaler> scaler_;
};

using ModelPtr = std::shared_ptr<const Classifier>;

/// Logistic regression or linear SVC: score = sigmoid(w.x + b).
class LinearModel final : public Classifier {
 public:
  LinearModel(ClassifierKind kind, std::vector<double> weights, double intercept);

  const std::vector<double>& weights() const { return weights_; }
  double intercept() const { return intercept_; }
  double decision(std::span<const float> x) const;

  std::size_t parameter_count() const override { return weights_.size() + 1; }
  void write_payload(ByteWriter& w) const override;

 protected:
  void score_rows(std::span<const float> rows, std::span<double> out) const override;

 private:
  std::vector<double> weights_;
  double intercept_;
};

/// Kernel SVM with RBF kernel and Platt-calibrated output:
/// f(x) = sum_i coef_i exp(-gamma |sv_i - x|^2) + b,
/// score = 1 / (1 + exp(A f(x) + B)).
class RbfSvcModel final : public Classifier {
 public:
  RbfSvcModel(PixelMatrix support_vectors, std::vector<double> dual_coef, double intercept,
              double gamma, double platt_a, double platt_b, double c);

  const PixelMatrix& support_vectors() const { return support_; }
  /// alpha_i * y_i for each support vector; |coef| <= C.
  const std::vector<double>& dual_coef() const { return coef_; }
  double intercept() const { return intercept_; }
  double gamma() const { return gamma_; }
  double platt_a() const { return platt_a_; }
  double platt_b() const { return platt_b_; }
  double regularization_c() const { return c_; }
  double decision(std::span<const float> x) const;

  std::size_t parameter_count() const override;
  void write_payload(ByteWriter& w) const override;

 protected:
  void score_rows(std::span<const float> rows, std::span<double> out) const override;

 private:
  PixelMatrix support_;
  std::vector<double> coef_;
  double intercept_;
  double gamma_;
  double platt_a_;
  double platt_b_;
  double c_;
};

struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;
  std::int32_t feature = kLeaf;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  /// Fraction of class-1 training samples reaching this node (used at leaves).
  double value = 0.0;

  bool is_leaf() const { return feature == kLeaf; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// CART tree stored as a flat node array; node 0 is the root and
/// x[feature] <= threshold descends left.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const float> x) const;
  std::size_t depth() const;
  std::size_t internal_count() const;
  std::size_t leaf_count() const { return nodes.size() - internal_count(); }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

class ForestModel final : public Classifier {
 public:
  ForestModel(std::size_t dimension, std::vector<DecisionTree> trees);

  const std::vector<DecisionTree>& trees() const { return trees_; }

  /// 2 per internal node (feature, threshold) plus 1 per leaf.
  std::size_t parameter_count() const override;
  void write_payload(ByteWriter& w) const override;

 protected:
  void score_rows(std::span<const float> rows, std::span<double> out) const override;

 private:
  std::vector<DecisionTree> trees_;
};

// Fitting. All fits require X.rows == y.size() >= 2, X.cols >= 1, labels in
// {0, 1} with both classes present, and throw InvalidArgument otherwise.
// Results are deterministic in (X, y, cfg) regardless of thread count.

/// L2-regularised logistic regression by L-BFGS; intercept unpenalised.
std::shared_ptr<const LinearModel> fit_logistic_regression(const PixelMatrix& X,
                                                           std::span<const std::uint8_t> y,
                                                           const ClassifierConfig& cfg);

/// L2-regularised squared-hinge SVM by dual coordinate descent.
std::shared_ptr<const LinearModel> fit_linear_svc(const PixelMatrix& X,
                                                  std::span<const std::uint8_t> y,
                                                  const ClassifierConfig& cfg);

/// Soft-margin RBF SVM by SMO plus Platt scaling on out-of-fold decision
/// values. Throws ResourceLimitError when X.rows > cfg.rbf_row_cap.
std::shared_ptr<const RbfSvcModel> fit_rbf_svc(const PixelMatrix& X,
                                               std::span<const std::uint8_t> y,
                                               const ClassifierConfig& cfg);

/// Bagged CART trees with Gini splits and ceil(sqrt(d)) candidate features.
std::shared_ptr<const ForestModel> fit_random_forest(const PixelMatrix& X,
                                                     std::span<const std::uint8_t> y,
                                                     const ClassifierConfig& cfg);

/// Dispatches on cfg.kind for the four base kinds.
ModelPtr fit_classifier(const PixelMatrix& X, std::span<const std::uint8_t> y,
                        const ClassifierConfig& cfg);

inline constexpr std::size_t kDefaultBlockRows = 8192;

/// Class-1 scores for every row, evaluated in blocks of block_rows.
/// Throws InvalidArgument if X.cols != model.dimension().
std::vector<double> predict_scores(const Classifier& model, const PixelMatrix& X,
                                   std::size_t block_rows = kDefaultBlockRows);

/// 1 where score >= threshold. threshold must lie in [0, 1].
std::vector<std::uint8_t> predict_labels(const Classifier& model, const PixelMatrix& X,
                                         double threshold = 0.5,
                                         std::size_t block_rows = kDefaultBlockRows);

/// Thresholding rule shared by predict_labels and the harness.
std::vector<std::uint8_t> threshold_scores(std::span<const double> scores, double threshold);

std::size_t count_parameters(const Classifier& model);

/// Throws InvalidArgument unless the training inputs meet the common
/// preconditions listed above.
void check_training_inputs(const PixelMatrix& X, std::span<const std::uint8_t> y);

double sigmoid(double z);

}  // namespace hypercol
