#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hypercol/feature_io.hpp"
#include "hypercol/tensor.hpp"

namespace hypercol {

/// Geometry of the hypercolumns and the training subsampling rate.
struct HypercolumnConfig {
  std::size_t input_h = 224;
  std::size_t input_w = 224;
  std::size_t expected_taps = 5;
  std::size_t expected_channels = 1472;
  /// Optional per-tap channel counts; when non-empty its size must equal
  /// expected_taps and its sum expected_channels.
  std::vector<std::size_t> tap_channels = {64, 128, 256, 512, 512};
  double subsample_rate = 0.1;

  /// Throws InvalidArgument when an invariant does not hold.
  void check() const;

  /// Configuration matching a Sample's own shape (used at prediction time).
  static HypercolumnConfig describing(const Sample& sample);
};

/// Where a hypercolumn row came from.
struct PixelOrigin {
  std::string image_id;
  std::uint32_t pixel_index = 0;

  friend bool operator==(const PixelOrigin&, const PixelOrigin&) = default;
};

/// Feature rows with binary labels and provenance. Dense (one image, every
/// pixel) and sparse (subsampled) hypercolumns are both LabeledPixels.
struct LabeledPixels {
  PixelMatrix features;
  std::vector<std::uint8_t> labels;
  std::vector<PixelOrigin> provenance;

  std::size_t rows() const { return features.rows; }
  std::size_t cols() const { return features.cols; }

  /// Throws InvalidArgument when label/provenance lengths or label values
  /// are inconsistent.
  void check() const;

  friend bool operator==(const LabeledPixels&, const LabeledPixels&) = default;
};

/// Upsamples every tap to the input resolution, concatenates channels in tap
/// order and flattens; labels follow the same y*W + x pixel order.
/// Throws InvalidArgument if validate_sample() reports violations.
LabeledPixels build_dense_hypercolumn(const Sample& sample, const HypercolumnConfig& cfg);

/// Features only; skips validation against a config. Used at inference
/// where the geometry comes from the sample itself.
PixelMatrix dense_features(const Sample& sample, std::size_t input_h, std::size_t input_w);

/// Row-wise concatenation in list order.
LabeledPixels concat_hypercolumns(std::span<const LabeledPixels> parts);

/// Per-class draw counts for a stratified sample: round(rate * M_c),
/// rounded half away from zero, raised to 1 when M_c >= 1.
std::size_t stratified_count(std::size_t class_rows, double rate);

/// Row indices chosen by exact stratified sampling over a label vector,
/// returned in ascending order. Each class is drawn by a seeded partial
/// Fisher-Yates shuffle of that class's row indices; the two classes use
/// independent streams derived from seed.
std::vector<std::size_t> stratified_select(std::span<const std::uint8_t> labels, double rate,
                                           std::uint64_t seed);

/// Same sampler with an absolute budget instead of a rate: the positive
/// class receives round(total * M_1 / M), clamped to [1, M_1] when present,
/// and the negative class the remainder. Returns every row when
/// labels.size() <= total.
std::vector<std::size_t> stratified_select_total(std::span<const std::uint8_t> labels,
                                                 std::size_t total, std::uint64_t seed);

/// Sparse hypercolumn: the rows named by stratified_select().
/// Throws InvalidArgument if rate is outside (0, 1].
LabeledPixels stratified_subsample(const LabeledPixels& lp, double rate, std::uint64_t seed);

/// Copies the listed rows (features, labels, provenance).
LabeledPixels select_rows(const LabeledPixels& lp, std::span<const std::size_t> indices);

}  // namespace hypercol
