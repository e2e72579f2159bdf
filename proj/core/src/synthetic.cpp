#include "hypercol/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "hypercol/error.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/random.hpp"

namespace hypercol {
namespace {

std::string image_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_%03zu", index);
  return buf;
}

}  // namespace

Sample synthetic_sample(const SyntheticConfig& cfg, std::size_t index) {
  if (cfg.size == 0 || cfg.tap_channels.empty()) {
    throw InvalidArgument("synthetic: size and tap_channels must be non-empty");
  }
  if (!(cfg.min_axis > 0.0 && cfg.min_axis <= cfg.max_axis)) {
    throw InvalidArgument("synthetic: need 0 < min_axis <= max_axis");
  }
  const std::size_t s = cfg.size;
  for (std::size_t k = 0; k < cfg.tap_channels.size(); ++k) {
    if (s % (std::size_t{1} << k) != 0) {
      throw InvalidArgument("synthetic: size must be divisible by 2^(taps-1)");
    }
  }
  Rng rng(derive_seed({cfg.seed, tag_hash("synthetic"), index}));

  const double fs = static_cast<double>(s);
  const double cx = (0.3 + 0.4 * rng.uniform01()) * fs;
  const double cy = (0.3 + 0.4 * rng.uniform01()) * fs;
  const double span = cfg.max_axis - cfg.min_axis;
  const double ax = (cfg.min_axis + span * rng.uniform01()) * fs;
  const double ay = (cfg.min_axis + span * rng.uniform01()) * fs;
  const double theta = std::numbers::pi * rng.uniform01();
  const double ct = std::cos(theta);
  const double st = std::sin(theta);

  Sample sample;
  sample.image_id = image_id(index);
  sample.source_h = s;
  sample.source_w = s;
  sample.mask = Mask(s, s);
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - cx;
      const double dy = static_cast<double>(y) + 0.5 - cy;
      const double u = (dx * ct + dy * st) / ax;
      const double v = (-dx * st + dy * ct) / ay;
      sample.mask.at(y, x) = u * u + v * v <= 1.0 ? 1 : 0;
    }
  }

  for (std::size_t k = 0; k < cfg.tap_channels.size(); ++k) {
    const std::size_t f = std::size_t{1} << k;
    const std::size_t h = s / f;
    const double sigma = cfg.noise / static_cast<double>(f);
    std::vector<double> gains(cfg.tap_channels[k]);
    for (auto& g : gains) g = cfg.signal * (0.5 + rng.uniform01());
    FeatureMap tap(cfg.tap_channels[k], h, h);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < h; ++x) {
        double inside = 0.0;
        for (std::size_t yy = y * f; yy < (y + 1) * f; ++yy) {
          for (std::size_t xx = x * f; xx < (x + 1) * f; ++xx) inside += sample.mask.at(yy, xx);
        }
        const double m = inside / static_cast<double>(f * f);
        for (std::size_t c = 0; c < gains.size(); ++c) {
          tap.at(c, y, x) = static_cast<float>(gains[c] * (2.0 * m - 1.0) + sigma * rng.normal());
        }
      }
    }
    sample.taps.push_back(std::move(tap));
  }
  return sample;
}

std::filesystem::path write_synthetic_dataset(const SyntheticConfig& cfg,
                                              const std::filesystem::path& dir) {
  if (cfg.train == 0 || cfg.train >= cfg.images) {
    throw InvalidArgument("synthetic: need 1 <= train < images");
  }
  std::filesystem::create_directories(dir);
  Manifest manifest;
  manifest.input_size = std::pair{cfg.size, cfg.size};
  manifest.tap_channels = cfg.tap_channels;
  std::vector<std::filesystem::path> paths(cfg.images);
  for (std::size_t i = 0; i < cfg.images; ++i) paths[i] = dir / (image_id(i) + ".hcf");
  parallel_for(cfg.images,
               [&](std::size_t i) { write_container_file(synthetic_sample(cfg, i), paths[i]); });
  for (std::size_t i = 0; i < cfg.images; ++i) {
    (i < cfg.train ? manifest.train : manifest.test).push_back(paths[i]);
  }
  const auto manifest_path = dir / "manifest.txt";
  write_manifest(manifest, manifest_path);
  return manifest_path;
}

}  // namespace hypercol
