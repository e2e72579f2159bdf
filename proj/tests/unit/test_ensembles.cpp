#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hypercol/ensembles.hpp"
#include "hypercol/error.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/solvers.hpp"
#include "support.hpp"

namespace hypercol {
namespace {

ModelPtr constant_model(double score, std::size_t d = 2) {
  return std::make_shared<LinearModel>(ClassifierKind::LogisticRegression,
                                       std::vector<double>(d, 0.0),
                                       std::log(score / (1.0 - score)));
}

ModelPtr random_linear(Rng& rng, std::size_t d) {
  std::vector<double> w(d);
  for (auto& v : w) v = rng.normal();
  return std::make_shared<LinearModel>(ClassifierKind::LogisticRegression, w, rng.normal());
}

ModelPtr random_stump_forest(Rng& rng, std::size_t d) {
  std::vector<DecisionTree> trees(3);
  for (auto& t : trees) {
    t.nodes = {TreeNode{static_cast<std::int32_t>(rng.uniform_index(d)), rng.normal(), 1, 2, 0.5},
               TreeNode{TreeNode::kLeaf, 0, -1, -1, rng.uniform01()},
               TreeNode{TreeNode::kLeaf, 0, -1, -1, rng.uniform01()}};
  }
  return std::make_shared<ForestModel>(d, std::move(trees));
}

std::vector<double> random_weights(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  double sum = 0;
  for (auto& v : w) sum += v = rng.uniform01();
  for (auto& v : w) v /= sum;
  return w;
}

PixelMatrix random_rows(Rng& rng, std::size_t n, std::size_t d) {
  PixelMatrix X(n, d);
  for (auto& v : X.data) v = static_cast<float>(2.0 * rng.normal());
  return X;
}

TEST(Voting, WeightedArithmetic) {
  const VotingModel v({constant_model(0.6), constant_model(0.8), constant_model(0.5)},
                      {0.4, 0.4, 0.2});
  const PixelMatrix X(3, 2);
  const auto scores = predict_scores(v, X);
  for (const double s : scores) EXPECT_NEAR(s, 0.66, 1e-12);
  EXPECT_EQ(predict_labels(v, X), (std::vector<std::uint8_t>{1, 1, 1}));
}

TEST(Voting, IdenticalMembersGiveMemberScores) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelPtr m = random_linear(rng, 3);
    const VotingModel v({m, m, m}, random_weights(rng, 3));
    const PixelMatrix X = random_rows(rng, 50, 3);
    const auto member = predict_scores(*m, X);
    const auto ensemble = predict_scores(v, X);
    for (std::size_t i = 0; i < X.rows; ++i) EXPECT_EQ(ensemble[i], member[i]);
  }
}

TEST(Voting, ConvexCombinationBounds) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = testing::between(rng, 1, 5);
    const std::size_t k = testing::between(rng, 1, 5);
    std::vector<ModelPtr> members;
    for (std::size_t j = 0; j < k; ++j) {
      members.push_back(rng.uniform01() < 0.5 ? random_linear(rng, d) : random_stump_forest(rng, d));
    }
    const VotingModel v(members, random_weights(rng, k));
    const PixelMatrix X = random_rows(rng, 40, d);
    const auto ensemble = predict_scores(v, X);
    std::vector<std::vector<double>> per(k);
    for (std::size_t j = 0; j < k; ++j) per[j] = predict_scores(*members[j], X);
    for (std::size_t i = 0; i < X.rows; ++i) {
      double lo = 1, hi = 0;
      for (std::size_t j = 0; j < k; ++j) {
        lo = std::min(lo, per[j][i]);
        hi = std::max(hi, per[j][i]);
      }
      ASSERT_GE(ensemble[i], lo);
      ASSERT_LE(ensemble[i], hi);
    }
  }
}

TEST(Voting, DegenerateWeightsSelectMember) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<ModelPtr> members{random_stump_forest(rng, 3), random_linear(rng, 3),
                                        random_linear(rng, 3)};
    const std::size_t pick = rng.uniform_index(3);
    std::vector<double> w(3, 0.0);
    w[pick] = 1.0;
    const VotingModel v(members, w);
    const PixelMatrix X = random_rows(rng, 30, 3);
    EXPECT_EQ(predict_scores(v, X), predict_scores(*members[pick], X));
  }
}

TEST(Voting, PermutingMembersWithWeights) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = testing::between(rng, 2, 5);
    std::vector<ModelPtr> members;
    for (std::size_t j = 0; j < k; ++j) members.push_back(random_linear(rng, 4));
    const auto w = random_weights(rng, k);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = k; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    std::vector<ModelPtr> pm;
    std::vector<double> pw;
    for (const auto p : perm) {
      pm.push_back(members[p]);
      pw.push_back(w[p]);
    }
    const PixelMatrix X = random_rows(rng, 40, 4);
    EXPECT_EQ(predict_scores(VotingModel(members, w), X), predict_scores(VotingModel(pm, pw), X));
  }
}

TEST(Voting, ConfigChecks) {
  auto cfg = VotingConfig::defaults();
  EXPECT_NO_THROW(cfg.check());
  EXPECT_EQ(cfg.weights, (std::vector<double>{0.4, 0.4, 0.2}));
  EXPECT_EQ(cfg.members[0].kind, ClassifierKind::RandomForest);
  EXPECT_EQ(cfg.members[1].kind, ClassifierKind::RbfSvc);
  EXPECT_EQ(cfg.members[2].kind, ClassifierKind::LogisticRegression);
  cfg.weights = {0.5, 0.4, 0.2};
  EXPECT_THROW(cfg.check(), InvalidArgument);
  cfg.weights = {1.2, -0.2, 0.0};
  EXPECT_THROW(cfg.check(), InvalidArgument);
  cfg.weights = {0.5, 0.5};
  EXPECT_THROW(cfg.check(), InvalidArgument);
}

TEST(Voting, FitAndParameterCount) {
  Rng rng(5);
  PixelMatrix X;
  std::vector<std::uint8_t> y;
  testing::gaussian_blobs(rng, 300, 3, 1.0, X, y);
  const auto v = fit_voting(X, y, VotingConfig::defaults());
  ASSERT_EQ(v->members().size(), 3u);
  std::size_t expected = 3;
  for (const auto& m : v->members()) expected += m->parameter_count();
  EXPECT_EQ(count_parameters(*v), expected);
  const auto labels = predict_labels(*v, X);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += labels[i] == y[i];
  EXPECT_GT(ok, 250u);
}

TEST(Voting, KernelMemberTrainsOnCappedRows) {
  Rng rng(6);
  PixelMatrix X;
  std::vector<std::uint8_t> y;
  testing::gaussian_blobs(rng, 400, 2, 1.0, X, y);
  auto cfg = VotingConfig::defaults();
  cfg.members[1].rbf_row_cap = 60;
  const auto v = fit_voting(X, y, cfg);
  const auto& svc = dynamic_cast<const RbfSvcModel&>(*v->members()[1]);
  EXPECT_LE(svc.support_vectors().rows, 60u);
  cfg.cap_kernel_rows = false;
  EXPECT_THROW(fit_voting(X, y, cfg), ResourceLimitError);
}

TEST(Voting, DeterministicAcrossThreadCounts) {
  Rng rng(7);
  PixelMatrix X;
  std::vector<std::uint8_t> y;
  testing::gaussian_blobs(rng, 400, 3, 0.5, X, y);
  std::vector<double> ref;
  {
    ScopedThreadCount one(1);
    ref = predict_scores(*fit_voting(X, y, VotingConfig::defaults()), X);
  }
  ScopedThreadCount four(4);
  EXPECT_EQ(predict_scores(*fit_voting(X, y, VotingConfig::defaults()), X), ref);
}

TEST(Stacking, OutOfFoldBookkeeping) {
  Rng rng(8);
  PixelMatrix X;
  std::vector<std::uint8_t> y;
  testing::gaussian_blobs(rng, 250, 3, 0.8, X, y);
  StackingTrace trace;
  const auto m = fit_stacking(X, y, StackingConfig::defaults(), &trace);
  ASSERT_EQ(trace.fold_of_row.size(), X.rows);
  ASSERT_EQ(trace.trained_rows.size(), 2u);
  for (std::size_t b = 0; b < 2; ++b) {
    ASSERT_EQ(trace.trained_rows[b].size(), 5u);
    std::vector<int> scored_count(X.rows, 0);
    for (std::size_t f = 0; f < 5; ++f) {
      const std::set<std::size_t> trained(trace.trained_rows[b][f].begin(),
                                          trace.trained_rows[b][f].end());
      for (const auto r : trace.scored_rows[b][f]) {
        EXPECT_FALSE(trained.contains(r)) << "base " << b << " fold " << f << " row " << r;
        EXPECT_EQ(trace.fold_of_row[r], f);
        scored_count[r]++;
      }
      EXPECT_EQ(trained.size() + trace.scored_rows[b][f].size(), X.rows);
    }
    for (const int c : scored_count) EXPECT_EQ(c, 1);
  }
  EXPECT_EQ(trace.meta_features.rows, X.rows);
  EXPECT_EQ(trace.meta_features.cols, 2u);
  EXPECT_EQ(m->bases().size(), 2u);
  EXPECT_EQ(m->meta()->dimension(), 2u);
}

TEST(Stacking, FoldsAreStratified) {
  Rng rng(9);
  const auto y = testing::random_bits(rng, 103, 0.3);
  const auto folds = stratified_folds(y, 5, 11);
  const std::size_t m1 = std::count(y.begin(), y.end(), 1);
  for (std::size_t f = 0; f < 5; ++f) {
    std::size_t pos = 0, all = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (folds[i] != f) continue;
      ++all;
      pos += y[i];
    }
    EXPECT_TRUE(pos == m1 / 5 || pos == (m1 + 4) / 5);
    EXPECT_TRUE(all - pos == (103 - m1) / 5 || all - pos == (103 - m1 + 4) / 5);
  }
}

TEST(Stacking, MetaFeaturesAreProbabilities) {
  Rng rng(10);
  PixelMatrix X;
  std::vector<std::uint8_t> y;
  testing::gaussian_blobs(rng, 200, 4, 0.5, X, y);
  StackingTrace trace;
  const auto m = fit_stacking(X, y, StackingConfig::defaults(), &trace);
  for (const float v : trace.meta_features.data) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  const PixelMatrix meta = m->meta_features(X.data);
  EXPECT_EQ(meta.rows, X.rows);
  EXPECT_EQ(meta.cols, 2u);
  for (const float v : meta.data) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Stacking, LabelRevealingBasesGivePerfectMetaFit) {
  Rng rng(11);
  PixelMatrix X(200, 3);
  std::vector<std::uint8_t> y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    y[i] = rng.uniform01() < 0.4 ? 1 : 0;
    X(i, 0) = static_cast<float>(y[i]);
    X(i, 1) = static_cast<float>(rng.normal());
    X(i, 2) = static_cast<float>(rng.normal());
  }
  // One tree on the label column alone scores every held-out row with its label.
  auto cfg = StackingConfig::defaults();
  cfg.bases = {cfg.bases[0]};
  cfg.bases[0].n_estimators = 1;
  PixelMatrix X1(200, 1);
  for (std::size_t i = 0; i < 200; ++i) X1(i, 0) = X(i, 0);
  StackingTrace trace;
  const auto m = fit_stacking(X1, y, cfg, &trace);
  for (std::size_t i = 0; i < 200; ++i) ASSERT_EQ(trace.meta_features(i, 0), y[i]);
  EXPECT_EQ(predict_labels(*m, X1), y);

  const auto full = fit_stacking(X, y, StackingConfig::defaults());
  EXPECT_EQ(predict_labels(*full, X), y);
}

TEST(Stacking, TooFewRowsPerClass) {
  PixelMatrix X(20, 1);
  std::vector<std::uint8_t> y(20, 0);
  for (std::size_t i = 0; i < 20; ++i) X(i, 0) = static_cast<float>(i);
  y[0] = y[1] = y[2] = y[3] = 1;
  EXPECT_THROW(fit_stacking(X, y, StackingConfig::defaults()), InvalidArgument);
  auto cfg = StackingConfig::defaults();
  cfg.folds = 4;
  EXPECT_NO_THROW(fit_stacking(X, y, cfg));
  cfg.folds = 1;
  EXPECT_THROW(cfg.check(), InvalidArgument);
}

TEST(Stacking, DeterministicAcrossThreadCounts) {
  Rng rng(12);
  PixelMatrix X;
  std::vector<std::uint8_t> y;
  testing::gaussian_blobs(rng, 500, 3, 0.5, X, y);
  std::vector<double> ref;
  {
    ScopedThreadCount one(1);
    ref = predict_scores(*fit_stacking(X, y, StackingConfig::defaults()), X);
  }
  ScopedThreadCount three(3);
  EXPECT_EQ(predict_scores(*fit_stacking(X, y, StackingConfig::defaults()), X), ref);
}

TEST(Stacking, ParameterCount) {
  Rng rng(13);
  PixelMatrix X;
  std::vector<std::uint8_t> y;
  testing::gaussian_blobs(rng, 100, 3, 1.0, X, y);
  const auto m = fit_stacking(X, y, StackingConfig::defaults());
  EXPECT_EQ(count_parameters(*m), m->bases()[0]->parameter_count() +
                                      m->bases()[1]->parameter_count() + 3);
}

}  // namespace
}  // namespace hypercol
