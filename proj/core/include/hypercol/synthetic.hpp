#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hypercol/feature_io.hpp"
#include "hypercol/harness.hpp"

namespace hypercol {

/// Generator for blob-segmentation datasets. Each image holds one random
/// ellipse; tap k has resolution size / 2^k and its channels are the
/// block-averaged mask scaled by a per-channel gain plus Gaussian noise.
struct SyntheticConfig {
  std::size_t images = 60;
  std::size_t train = 50;
  std::size_t size = 224;
  std::vector<std::size_t> tap_channels = {4, 4, 3, 3, 2};
  /// Channel gains are drawn from signal * [0.5, 1.5).
  double signal = 0.125;
  /// Noise standard deviation at tap 0; tap k uses noise / 2^k.
  double noise = 1.0;
  /// Semi-axis range as a fraction of size.
  double min_axis = 0.10;
  double max_axis = 0.25;
  std::uint64_t seed = 42;
};

/// Deterministic in (cfg, index). Image ids are "synth_<index>".
Sample synthetic_sample(const SyntheticConfig& cfg, std::size_t index);

/// Writes synth_NNN.hcf (zero-padded index) for every image plus manifest.txt (first cfg.train
/// images as training, the rest as test) and returns the manifest path.
std::filesystem::path write_synthetic_dataset(const SyntheticConfig& cfg,
                                              const std::filesystem::path& dir);

}  // namespace hypercol
