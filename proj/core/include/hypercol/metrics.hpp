#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hypercol {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct MetricVector {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double jaccard = 0.0;
  double dice = 0.0;

  static constexpr std::size_t kCount = 5;
  static constexpr std::array<std::string_view, kCount> kNames = {"accuracy", "precision",
                                                                 "recall", "jaccard", "dice"};
  double operator[](std::size_t i) const;
  double& operator[](std::size_t i);

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

struct RunSummary {
  std::vector<MetricVector> run_means;
  MetricVector mean;
  /// Population standard deviation of the per-run means.
  MetricVector stddev;

  std::size_t runs() const { return run_means.size(); }
};

/// Counts over flattened binary grids of equal length (values 0 / non-zero).
/// Throws InvalidArgument on a length mismatch.
ConfusionCounts confusion_counts(std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth);

/// Accuracy, precision, recall, Jaccard and Dice. A zero denominator means
/// both sides of that comparison are empty; the metric is then 1 when
/// nothing was missed (fn == 0 for precision, fp == 0 for recall) and 0
/// otherwise. Throws InvalidArgument when the total is 0.
MetricVector segmentation_metrics(const ConfusionCounts& c);

/// per_run[r] holds one MetricVector per image. Each run is averaged over
/// its images; the summary holds the mean and population std of those run
/// means. Throws InvalidArgument on an empty run list or an empty run.
RunSummary aggregate_runs(std::span<const std::vector<MetricVector>> per_run);

enum class WilcoxonMode { Auto, Exact, Normal };

struct WilcoxonResult {
  /// min(W+, W-).
  double statistic = 0.0;
  double p_value = 1.0;
  /// Pairs left after dropping zero differences.
  std::size_t n_effective = 0;
  bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Two-sided Wilcoxon signed-rank test on a - b. Zero differences are
/// dropped and tied |d| get average ranks. Auto uses the exact null
/// distribution for n_effective <= 25 and the tie- and continuity-corrected
/// normal approximation above it.
///
/// Throws InvalidArgument on a length mismatch or empty input and
/// DegenerateSampleError when every difference is zero.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMode mode = WilcoxonMode::Auto);

/// 100 * (candidate - baseline) / baseline rounded to two decimals.
/// Throws InvalidArgument when baseline is 0.
double relative_gain(double candidate_mean, double baseline_mean);

}  // namespace hypercol
