#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hypercol/error.hpp"
#include "hypercol/harness.hpp"
#include "hypercol/hypercolumn.hpp"
#include "hypercol/parallel.hpp"
#include "support.hpp"

namespace hypercol {
namespace {

HypercolumnConfig small_config(std::size_t h, std::size_t w, std::vector<std::size_t> channels) {
  HypercolumnConfig cfg;
  cfg.input_h = h;
  cfg.input_w = w;
  cfg.expected_taps = channels.size();
  cfg.expected_channels = std::accumulate(channels.begin(), channels.end(), std::size_t{0});
  cfg.tap_channels = std::move(channels);
  return cfg;
}

std::size_t count_ones(std::span<const std::uint8_t> labels, std::span<const std::size_t> rows) {
  std::size_t n = 0;
  for (const auto r : rows) n += labels[r];
  return n;
}

TEST(DenseHypercolumn, DefaultGeometry) {
  Rng rng(1);
  HypercolumnConfig cfg;
  const Sample s = testing::random_sample(rng, 224, 224, {64, 128, 256, 512, 512});
  ASSERT_TRUE(validate_sample(s, cfg).empty());
  const LabeledPixels lp = build_dense_hypercolumn(s, cfg);
  EXPECT_EQ(lp.rows(), 50176u);
  EXPECT_EQ(lp.cols(), 1472u);
  EXPECT_EQ(lp.labels, s.mask.data);
  // Tap 4 column block starts at 64 + 128 + 256 + 512; pixel (0, 0) clamps to its corner.
  EXPECT_EQ(lp.features(0, 960), s.taps[4].at(0, 0, 0));
  EXPECT_EQ(lp.provenance[50175].pixel_index, 50175u);
}

TEST(DenseHypercolumn, SingleTapSmall) {
  Sample s;
  s.image_id = "a";
  s.taps.push_back(FeatureMap(1, 2, 2, {1, 2, 3, 4}));
  s.mask = Mask(2, 2, {1, 0, 0, 0});
  const LabeledPixels lp = build_dense_hypercolumn(s, small_config(2, 2, {1}));
  EXPECT_EQ(lp.features, PixelMatrix(4, 1, {1, 2, 3, 4}));
  EXPECT_EQ(lp.labels, (std::vector<std::uint8_t>{1, 0, 0, 0}));
  EXPECT_EQ(lp.provenance[2], (PixelOrigin{"a", 2}));
}

TEST(DenseHypercolumn, EmptyMaskGivesZeroLabels) {
  Rng rng(2);
  Sample s = testing::random_sample(rng, 8, 8, {2, 3});
  s.mask = Mask(8, 8);
  const LabeledPixels lp = build_dense_hypercolumn(s, small_config(8, 8, {2, 3}));
  EXPECT_EQ(lp.rows(), 64u);
  EXPECT_TRUE(std::ranges::all_of(lp.labels, [](auto v) { return v == 0; }));
}

TEST(DenseHypercolumn, MatchesTensorPipeline) {
  Rng rng(3);
  const Sample s = testing::random_sample(rng, 16, 8, {2, 1, 3});
  std::vector<FeatureMap> ups;
  for (const auto& t : s.taps) ups.push_back(bilinear_upsample(t, 16, 8));
  const LabeledPixels lp = build_dense_hypercolumn(s, small_config(16, 8, {2, 1, 3}));
  EXPECT_EQ(lp.features, flatten_pixels(concat_channels(ups)));
  EXPECT_EQ(dense_features(s, 16, 8), lp.features);
}

TEST(DenseHypercolumn, RejectsInvalidSample) {
  Rng rng(4);
  const Sample s = testing::random_sample(rng, 8, 8, {2, 3});
  EXPECT_THROW(build_dense_hypercolumn(s, small_config(8, 8, {2, 2})), InvalidArgument);
}

TEST(ConcatHypercolumns, RowCountForTenImages) {
  std::vector<LabeledPixels> parts(10);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    parts[i].features = PixelMatrix(50176, 1);
    parts[i].labels.assign(50176, 0);
    parts[i].provenance.assign(50176, {"img" + std::to_string(i), 0});
  }
  const LabeledPixels all = concat_hypercolumns(parts);
  EXPECT_EQ(all.rows(), 501760u);
  EXPECT_EQ(all.provenance[50176].image_id, "img1");
}

TEST(ConcatHypercolumns, OrderAndIdentity) {
  Rng rng(5);
  const auto a = testing::random_labeled_pixels(rng, 5, 3, 0.5);
  const auto b = testing::random_labeled_pixels(rng, 4, 3, 0.5);
  const std::vector<LabeledPixels> one{a};
  EXPECT_EQ(concat_hypercolumns(one), a);
  const std::vector<LabeledPixels> two{a, b};
  const LabeledPixels ab = concat_hypercolumns(two);
  ASSERT_EQ(ab.rows(), 9u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(ab.features(5, j), b.features(0, j));
  EXPECT_EQ(ab.labels[7], b.labels[2]);
}

TEST(ConcatHypercolumns, ColumnMismatch) {
  Rng rng(6);
  const std::vector<LabeledPixels> parts{testing::random_labeled_pixels(rng, 3, 5, 0.5),
                                         testing::random_labeled_pixels(rng, 3, 6, 0.5)};
  EXPECT_THROW(concat_hypercolumns(parts), InvalidArgument);
  EXPECT_THROW(concat_hypercolumns(std::span<const LabeledPixels>{}), InvalidArgument);
}

TEST(StratifiedSubsample, TenPercentOfThousand) {
  Rng rng(7);
  LabeledPixels lp = testing::random_labeled_pixels(rng, 1000, 2, 0.0);
  for (std::size_t i = 0; i < 100; ++i) lp.labels[i * 10] = 1;
  const LabeledPixels s = stratified_subsample(lp, 0.10, 42);
  EXPECT_EQ(s.rows(), 100u);
  EXPECT_EQ(std::count(s.labels.begin(), s.labels.end(), 1), 10);
}

TEST(StratifiedSubsample, RateOneIsIdentity) {
  Rng rng(8);
  const auto lp = testing::random_labeled_pixels(rng, 50, 3, 0.3);
  EXPECT_EQ(stratified_subsample(lp, 1.0, 1), lp);
}

TEST(StratifiedSubsample, FullScaleCounts) {
  std::vector<std::uint8_t> labels(501760, 0);
  Rng place(9);
  std::size_t placed = 0;
  while (placed < 507) {
    const auto i = place.uniform_index(labels.size());
    if (!labels[i]) {
      labels[i] = 1;
      ++placed;
    }
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rows = stratified_select(labels, 0.01, seed);
    const std::size_t pos = count_ones(labels, rows);
    ASSERT_EQ(pos, 5u);
    ASSERT_EQ(rows.size() - pos, 5013u);
    ASSERT_TRUE(std::is_sorted(rows.begin(), rows.end()));
    ASSERT_EQ(std::adjacent_find(rows.begin(), rows.end()), rows.end());
  }
}

TEST(StratifiedSubsample, CountRule) {
  EXPECT_EQ(stratified_count(0, 0.1), 0u);
  EXPECT_EQ(stratified_count(3, 0.01), 1u);
  EXPECT_EQ(stratified_count(25, 0.1), 3u);  // 2.5 rounds away from zero
  EXPECT_EQ(stratified_count(507, 0.01), 5u);
  EXPECT_EQ(stratified_count(501253, 0.01), 5013u);
}

TEST(StratifiedSubsample, CountsAcrossRandomInputsAndSeeds) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = testing::between(rng, 1, 400);
    const auto labels = testing::random_bits(rng, n, testing::uniform(rng, 0.0, 1.0));
    const double rate = testing::uniform(rng, 0.001, 1.0);
    const std::size_t m1 = std::count(labels.begin(), labels.end(), 1);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto rows = stratified_select(labels, rate, rng.next());
      const std::size_t pos = count_ones(labels, rows);
      ASSERT_EQ(pos, stratified_count(m1, rate));
      ASSERT_EQ(rows.size() - pos, stratified_count(n - m1, rate));
    }
  }
}

TEST(StratifiedSubsample, InclusionIsUniform) {
  std::vector<std::uint8_t> labels(100, 0);
  for (std::size_t i = 0; i < 20; ++i) labels[i * 5 + 2] = 1;
  const std::size_t trials = 10000;
  std::vector<std::size_t> hits(100, 0);
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    for (const auto r : stratified_select(labels, 0.1, seed)) hits[r]++;
  }
  // Positives: 2 of 20; negatives: 8 of 80. Both give inclusion probability 0.1.
  const double p = 0.1;
  const double mean = trials * p;
  const double sd = std::sqrt(trials * p * (1 - p));
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_LE(std::abs(static_cast<double>(hits[i]) - mean), 5 * sd) << "row " << i;
  }
}

TEST(StratifiedSubsample, DeterministicAcrossThreadCounts) {
  Rng rng(11);
  const auto lp = testing::random_labeled_pixels(rng, 5000, 4, 0.1);
  const LabeledPixels ref = [&] {
    ScopedThreadCount one(1);
    return stratified_subsample(lp, 0.05, 77);
  }();
  for (std::size_t t = 2; t <= 8; ++t) {
    ScopedThreadCount scoped(t);
    EXPECT_EQ(stratified_subsample(lp, 0.05, 77), ref);
  }
}

TEST(StratifiedSubsample, RowsMatchProvenance) {
  Rng rng(12);
  const auto lp = testing::random_labeled_pixels(rng, 300, 5, 0.2);
  const auto s = stratified_subsample(lp, 0.2, 5);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto src = s.provenance[i].pixel_index;
    EXPECT_TRUE(std::ranges::equal(s.features.row(i), lp.features.row(src)));
    EXPECT_EQ(s.labels[i], lp.labels[src]);
  }
}

TEST(StratifiedSubsample, SeedsDifferButCountsAgree) {
  Rng rng(13);
  const auto lp = testing::random_labeled_pixels(rng, 1000, 2, 0.3);
  const auto a = stratified_subsample(lp, 0.1, 1);
  const auto b = stratified_subsample(lp, 0.1, 2);
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_NE(a.provenance, b.provenance);
}

TEST(StratifiedSubsample, RateOutOfRange) {
  Rng rng(14);
  const auto lp = testing::random_labeled_pixels(rng, 10, 2, 0.5);
  EXPECT_THROW(stratified_subsample(lp, 0.0, 1), InvalidArgument);
  EXPECT_THROW(stratified_subsample(lp, 1.5, 1), InvalidArgument);
  EXPECT_THROW(stratified_subsample(lp, std::nan(""), 1), InvalidArgument);
}

TEST(StratifiedSelectTotal, Budget) {
  std::vector<std::uint8_t> labels(1000, 0);
  for (std::size_t i = 0; i < 100; ++i) labels[i] = 1;
  const auto rows = stratified_select_total(labels, 200, 3);
  EXPECT_EQ(rows.size(), 200u);
  EXPECT_EQ(count_ones(labels, rows), 20u);
  EXPECT_EQ(stratified_select_total(labels, 5000, 3).size(), 1000u);
}

TEST(SparseTrainingSet, TwoPassEqualsConcatThenSubsample) {
  Rng rng(15);
  testing::TempDir dir("sparse");
  std::vector<std::filesystem::path> paths;
  std::vector<LabeledPixels> dense;
  const auto cfg = small_config(16, 16, {3, 2, 2});
  for (int i = 0; i < 4; ++i) {
    const Sample s = testing::random_sample(rng, 16, 16, {3, 2, 2}, "s" + std::to_string(i));
    paths.push_back(dir.path() / (s.image_id + ".hcf"));
    write_container_file(s, paths.back());
    dense.push_back(build_dense_hypercolumn(s, cfg));
  }
  for (const double rate : {0.05, 0.3, 1.0}) {
    const auto expected = stratified_subsample(concat_hypercolumns(dense), rate, 99);
    EXPECT_EQ(build_sparse_training_set(paths, cfg, rate, 99), expected);
  }
}

}  // namespace
}  // namespace hypercol
