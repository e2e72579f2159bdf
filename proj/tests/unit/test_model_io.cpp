#include <gtest/gtest.h>

#include "hypercol/ensembles.hpp"
#include "hypercol/error.hpp"
#include "hypercol/model_io.hpp"
#include "support.hpp"

namespace hypercol {
namespace {

struct Data {
  PixelMatrix X;
  std::vector<std::uint8_t> y;
};

Data blobs(std::uint64_t seed) {
  Rng rng(seed);
  Data d;
  testing::gaussian_blobs(rng, 240, 3, 0.7, d.X, d.y);
  return d;
}

std::vector<ModelPtr> every_kind(const Data& d) {
  std::vector<ModelPtr> out;
  for (const auto kind : {ClassifierKind::LogisticRegression, ClassifierKind::LinearSvc,
                          ClassifierKind::RbfSvc, ClassifierKind::RandomForest}) {
    out.push_back(fit_classifier(d.X, d.y, ClassifierConfig::defaults(kind)));
  }
  out.push_back(fit_voting(d.X, d.y, VotingConfig::defaults()));
  out.push_back(fit_stacking(d.X, d.y, StackingConfig::defaults()));
  auto scaled = ClassifierConfig::defaults(ClassifierKind::LogisticRegression);
  scaled.standardize = true;
  out.push_back(fit_classifier(d.X, d.y, scaled));
  return out;
}

TEST(ModelIo, RoundTripEveryKind) {
  const Data d = blobs(1);
  for (const auto& m : every_kind(d)) {
    const auto bytes = encode_model(*m);
    const ModelPtr back = decode_model(bytes);
    EXPECT_EQ(back->kind(), m->kind());
    EXPECT_EQ(back->dimension(), m->dimension());
    EXPECT_EQ(back->training().seed, m->training().seed);
    EXPECT_EQ(back->training().iterations, m->training().iterations);
    EXPECT_EQ(back->scaler(), m->scaler());
    EXPECT_EQ(count_parameters(*back), count_parameters(*m));
    EXPECT_EQ(predict_scores(*back, d.X), predict_scores(*m, d.X)) << kind_name(m->kind());
    EXPECT_EQ(encode_model(*back), bytes);
  }
}

TEST(ModelIo, LinearLayout) {
  const LinearModel m(ClassifierKind::LinearSvc, {1.5, -2.0}, 0.25);
  const auto bytes = encode_model(m);
  // magic 4, version 2, kind 1, dim 8, seed 8, iterations 8, scaler flag 1, 2 weights, intercept.
  ASSERT_EQ(bytes.size(), 4u + 2 + 1 + 8 + 8 + 8 + 1 + 3 * 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HCM1");
  EXPECT_EQ(bytes[6], static_cast<std::uint8_t>(ClassifierKind::LinearSvc));
  EXPECT_EQ(bytes[7], 2);
}

TEST(ModelIo, FileRoundTrip) {
  const Data d = blobs(2);
  testing::TempDir dir("model");
  const auto m = fit_classifier(d.X, d.y, ClassifierConfig::defaults(ClassifierKind::RandomForest));
  save_model_file(*m, dir.path() / "rf.hcm");
  EXPECT_EQ(predict_scores(*load_model_file(dir.path() / "rf.hcm"), d.X), predict_scores(*m, d.X));
}

TEST(ModelIo, CorruptInputs) {
  const Data d = blobs(3);
  for (const auto& m : every_kind(d)) {
    const auto bytes = encode_model(*m);
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_model(bad), FormatError);
    bad = bytes;
    bad[4] = 9;
    EXPECT_THROW(decode_model(bad), UnsupportedError);
    bad = bytes;
    bad[6] = 77;
    EXPECT_THROW(decode_model(bad), UnsupportedError);
    bad = bytes;
    bad.push_back(0);
    EXPECT_THROW(decode_model(bad), FormatError);
    for (std::size_t cut = 0; cut < bytes.size(); cut += 1 + bytes.size() / 97) {
      EXPECT_THROW(decode_model(std::span(bytes).first(cut)), FormatError)
          << kind_name(m->kind()) << " cut " << cut;
    }
  }
}

TEST(ModelIo, RandomByteFlipsNeverCrash) {
  const Data d = blobs(4);
  Rng rng(5);
  for (const auto& m : every_kind(d)) {
    const auto bytes = encode_model(*m);
    for (int trial = 0; trial < 200; ++trial) {
      auto bad = bytes;
      bad[rng.uniform_index(bad.size())] ^= static_cast<std::uint8_t>(1 + rng.uniform_index(255));
      try {
        // Anything that decodes must also score without faulting.
        const ModelPtr back = decode_model(bad);
        if (back->dimension() == d.X.cols) predict_scores(*back, d.X);
      } catch (const FormatError&) {
      } catch (const UnsupportedError&) {
      }
    }
  }
}

TEST(ModelIo, BadTreeReferences) {
  DecisionTree t;
  t.nodes = {TreeNode{0, 0.0, 1, 5, 0.5}, TreeNode{TreeNode::kLeaf, 0, -1, -1, 1.0}};
  const ForestModel m(1, {t});
  EXPECT_THROW(decode_model(encode_model(m)), FormatError);
}

}  // namespace
}  // namespace hypercol
