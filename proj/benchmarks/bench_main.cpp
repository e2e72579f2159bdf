#include <benchmark/benchmark.h>

#include "hypercol/classifiers.hpp"
#include "hypercol/harness.hpp"
#include "hypercol/hypercolumn.hpp"
#include "hypercol/random.hpp"
#include "hypercol/synthetic.hpp"
#include "hypercol/tensor.hpp"

namespace {

using namespace hypercol;

FeatureMap random_map(std::size_t c, std::size_t h, std::size_t w) {
  Rng rng(1);
  FeatureMap fm(c, h, w);
  for (auto& v : fm.data) v = static_cast<float>(rng.normal());
  return fm;
}

// Upsampling one tap of the given source side to 224x224.
void BM_Upsample(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const FeatureMap fm = random_map(64, side, side);
  for (auto _ : state) benchmark::DoNotOptimize(bilinear_upsample(fm, 224, 224));
  state.SetItemsProcessed(state.iterations() * 64 * 224 * 224);
}
BENCHMARK(BM_Upsample)->Arg(14)->Arg(56)->Arg(112)->Unit(benchmark::kMillisecond);

void BM_StratifiedSelect(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<std::uint8_t> labels(n);
  for (auto& v : labels) v = rng.uniform01() < 0.02;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(stratified_select(labels, 0.1, seed++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_StratifiedSelect)->Arg(50176)->Arg(501760)->Unit(benchmark::kMicrosecond);

struct Training {
  PixelMatrix X;
  std::vector<std::uint8_t> y;
};

const Training& training() {
  static const Training t = [] {
    SyntheticConfig cfg;
    const Sample s = synthetic_sample(cfg, 0);
    const LabeledPixels lp = build_dense_hypercolumn(s, HypercolumnConfig::describing(s));
    const LabeledPixels sub = select_rows(lp, stratified_select(lp.labels, 0.1, 3));
    return Training{sub.features, sub.labels};
  }();
  return t;
}

void BM_FitLogistic(benchmark::State& state) {
  const Training& t = training();
  const auto cfg = ClassifierConfig::defaults(ClassifierKind::LogisticRegression);
  for (auto _ : state) benchmark::DoNotOptimize(fit_classifier(t.X, t.y, cfg));
}
BENCHMARK(BM_FitLogistic)->Unit(benchmark::kMillisecond);

void BM_PredictImage(benchmark::State& state) {
  const Training& t = training();
  const auto model = fit_classifier(t.X, t.y, ClassifierConfig::defaults(ClassifierKind::LogisticRegression));
  const Sample s = synthetic_sample(SyntheticConfig{}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(predict_image(*model, s));
}
BENCHMARK(BM_PredictImage)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
