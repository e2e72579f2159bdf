#include "hypercol/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypercol/error.hpp"
#include "hypercol/parallel.hpp"

namespace hypercol {
namespace {

// Source sample positions for one axis: lower index, upper index and the
// weight of the upper neighbour.
struct AxisTaps {
  std::vector<std::size_t> lo;
  std::vector<std::size_t> hi;
  std::vector<double> frac;
};

AxisTaps half_pixel_taps(std::size_t src, std::size_t dst) {
  AxisTaps taps;
  taps.lo.resize(dst);
  taps.hi.resize(dst);
  taps.frac.resize(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const double max_pos = static_cast<double>(src - 1);
  for (std::size_t i = 0; i < dst; ++i) {
    double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, max_pos);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    taps.lo[i] = lo;
    taps.hi[i] = std::min(lo + 1, src - 1);
    taps.frac[i] = pos - static_cast<double>(lo);
  }
  return taps;
}

}  // namespace

FeatureMap::FeatureMap(std::size_t c, std::size_t h, std::size_t w)
    : channels(c), height(h), width(w) {
  if (c == 0 || h == 0 || w == 0) {
    throw InvalidArgument("FeatureMap dimensions must be positive");
  }
  data.assign(c * h * w, 0.0f);
}

FeatureMap::FeatureMap(std::size_t c, std::size_t h, std::size_t w, std::vector<float> values)
    : channels(c), height(h), width(w), data(std::move(values)) {
  if (c == 0 || h == 0 || w == 0) {
    throw InvalidArgument("FeatureMap dimensions must be positive");
  }
  if (data.size() != c * h * w) {
    throw InvalidArgument("FeatureMap data length " + std::to_string(data.size()) +
                          " does not match " + std::to_string(c) + "x" + std::to_string(h) +
                          "x" + std::to_string(w));
  }
}

bool FeatureMap::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); });
}

PixelMatrix::PixelMatrix(std::size_t r, std::size_t c, std::vector<float> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw InvalidArgument("PixelMatrix data length mismatch");
}

PixelMatrix PixelMatrix::select_rows(std::span<const std::size_t> indices) const {
  PixelMatrix out(indices.size(), cols);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

FeatureMap bilinear_upsample(const FeatureMap& fm, std::size_t target_h, std::size_t target_w) {
  if (target_h < fm.height || target_w < fm.width) {
    throw InvalidArgument("bilinear_upsample: target " + std::to_string(target_h) + "x" +
                          std::to_string(target_w) + " is smaller than source " +
                          std::to_string(fm.height) + "x" + std::to_string(fm.width));
  }
  if (target_h == fm.height && target_w == fm.width) return fm;

  const AxisTaps ys = half_pixel_taps(fm.height, target_h);
  const AxisTaps xs = half_pixel_taps(fm.width, target_w);

  FeatureMap out(fm.channels, target_h, target_w);
  parallel_for(fm.channels, [&](std::size_t c) {
    const auto src = fm.channel(c);
    auto dst = out.channel(c);
    for (std::size_t y = 0; y < target_h; ++y) {
      const double fy = ys.frac[y];
      const float* r0 = src.data() + ys.lo[y] * fm.width;
      const float* r1 = src.data() + ys.hi[y] * fm.width;
      float* o = dst.data() + y * target_w;
      for (std::size_t x = 0; x < target_w; ++x) {
        const double fx = xs.frac[x];
        const std::size_t x0 = xs.lo[x];
        const std::size_t x1 = xs.hi[x];
        const double top = r0[x0] + fx * (static_cast<double>(r0[x1]) - r0[x0]);
        const double bottom = r1[x0] + fx * (static_cast<double>(r1[x1]) - r1[x0]);
        o[x] = static_cast<float>(top + fy * (bottom - top));
      }
    }
  });
  return out;
}

FeatureMap concat_channels(std::span<const FeatureMap> maps) {
  if (maps.empty()) throw InvalidArgument("concat_channels: empty list");
  const std::size_t h = maps.front().height;
  const std::size_t w = maps.front().width;
  std::size_t total = 0;
  for (const auto& m : maps) {
    if (m.height != h || m.width != w) {
      throw InvalidArgument("concat_channels: spatial dimensions differ (" + std::to_string(h) +
                            "x" + std::to_string(w) + " vs " + std::to_string(m.height) + "x" +
                            std::to_string(m.width) + ")");
    }
    total += m.channels;
  }
  std::vector<float> data;
  data.reserve(total * h * w);
  for (const auto& m : maps) data.insert(data.end(), m.data.begin(), m.data.end());
  return FeatureMap(total, h, w, std::move(data));
}

PixelMatrix flatten_pixels(const FeatureMap& fm) {
  const std::size_t pixels = fm.plane_size();
  PixelMatrix out(pixels, fm.channels);
  for (std::size_t c = 0; c < fm.channels; ++c) {
    const auto plane = fm.channel(c);
    for (std::size_t p = 0; p < pixels; ++p) out.data[p * fm.channels + c] = plane[p];
  }
  return out;
}

}  // namespace hypercol
