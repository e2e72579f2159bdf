#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hypercol {

/// One activation tensor (channels x height x width) for one image at one tap.
/// Storage is channel-major, row-major within a channel:
/// index = c*H*W + y*W + x.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  FeatureMap() = default;
  /// Zero-filled map. Throws InvalidArgument on a zero dimension.
  FeatureMap(std::size_t c, std::size_t h, std::size_t w);
  FeatureMap(std::size_t c, std::size_t h, std::size_t w, std::vector<float> values);

  std::size_t plane_size() const { return height * width; }

  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[c * plane_size() + y * width + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[c * plane_size() + y * width + x];
  }

  std::span<const float> channel(std::size_t c) const {
    return {data.data() + c * plane_size(), plane_size()};
  }
  std::span<float> channel(std::size_t c) {
    return {data.data() + c * plane_size(), plane_size()};
  }

  bool all_finite() const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

/// Row-major float matrix; one row per pixel, one column per feature.
struct PixelMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  PixelMatrix() = default;
  PixelMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}
  /// Throws InvalidArgument when values.size() != r * c.
  PixelMatrix(std::size_t r, std::size_t c, std::vector<float> values);

  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }

  float operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  float& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }

  /// Copies the listed rows, in the order given.
  PixelMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const PixelMatrix&, const PixelMatrix&) = default;
};

/// Bilinear resize to (target_h, target_w) with half-pixel centres and edge
/// clamping: src = (dst + 0.5) * (src_size / dst_size) - 0.5, clamped to
/// [0, src_size - 1]. Interpolation weights and blends are evaluated in
/// double and stored as float.
///
/// Throws InvalidArgument if the target is smaller than the source in
/// either dimension.
FeatureMap bilinear_upsample(const FeatureMap& fm, std::size_t target_h, std::size_t target_w);

/// Stacks maps along the channel axis, preserving list order.
FeatureMap concat_channels(std::span<const FeatureMap> maps);

/// Reshapes (C, H, W) into an (H*W) x C matrix; row y*W + x holds pixel (y, x).
PixelMatrix flatten_pixels(const FeatureMap& fm);

}  // namespace hypercol
