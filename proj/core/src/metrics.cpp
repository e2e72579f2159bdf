#include "hypercol/metrics.hpp"

#include <cmath>
#include <limits>

#include "hypercol/error.hpp"

namespace hypercol {
namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool empty_ok) {
  if (den == 0) return empty_ok ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double MetricVector::operator[](std::size_t i) const {
  switch (i) {
    case 0: return accuracy;
    case 1: return precision;
    case 2: return recall;
    case 3: return jaccard;
    case 4: return dice;
  }
  throw InvalidArgument("metric index out of range");
}

double& MetricVector::operator[](std::size_t i) {
  switch (i) {
    case 0: return accuracy;
    case 1: return precision;
    case 2: return recall;
    case 3: return jaccard;
    case 4: return dice;
  }
  throw InvalidArgument("metric index out of range");
}

ConfusionCounts confusion_counts(std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size()) {
    throw InvalidArgument("prediction and ground truth differ in size");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (t) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MetricVector segmentation_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw InvalidArgument("confusion counts are empty");
  MetricVector m;
  m.accuracy = ratio(c.tp + c.tn, c.total(), true);
  m.precision = ratio(c.tp, c.tp + c.fp, c.fn == 0);
  m.recall = ratio(c.tp, c.tp + c.fn, c.fp == 0);
  m.jaccard = ratio(c.tp, c.tp + c.fp + c.fn, true);
  m.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, true);
  return m;
}

RunSummary aggregate_runs(std::span<const std::vector<MetricVector>> per_run) {
  if (per_run.empty()) throw InvalidArgument("aggregate_runs: no runs");
  RunSummary s;
  for (const auto& run : per_run) {
    if (run.empty()) throw InvalidArgument("aggregate_runs: run without images");
    MetricVector mean;
    for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
      double sum = 0.0;
      for (const auto& m : run) sum += m[k];
      mean[k] = sum / static_cast<double>(run.size());
    }
    s.run_means.push_back(mean);
  }
  const auto runs = static_cast<double>(s.run_means.size());
  for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
    double sum = 0.0;
    for (const auto& m : s.run_means) sum += m[k];
    const double mean = sum / runs;
    double ss = 0.0;
    for (const auto& m : s.run_means) ss += (m[k] - mean) * (m[k] - mean);
    s.mean[k] = mean;
    s.stddev[k] = std::sqrt(ss / runs);
  }
  return s;
}

double relative_gain(double candidate_mean, double baseline_mean) {
  if (baseline_mean == 0.0) throw InvalidArgument("relative_gain: baseline mean is zero");
  const double gain = 100.0 * (candidate_mean - baseline_mean) / baseline_mean;
  // A few ulps of headroom so decimal halves are not lost to representation error.
  return std::round(gain * 100.0 * (1.0 + 4 * std::numeric_limits<double>::epsilon())) / 100.0;
}

}  // namespace hypercol
