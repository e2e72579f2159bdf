#include "hypercol/hypercolumn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "hypercol/error.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/random.hpp"

namespace hypercol {
namespace {

// Draws `count` distinct entries of `pool` by partial Fisher-Yates; the
// chosen entries end up in pool[0, count).
void partial_shuffle(std::vector<std::size_t>& pool, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
}

std::vector<std::size_t> draw_per_class(std::span<const std::uint8_t> labels,
                                        std::array<std::size_t, 2> counts, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> pools;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw InvalidArgument("labels must be 0 or 1");
    pools[labels[i]].push_back(i);
  }
  parallel_for(2, [&](std::size_t c) {
    if (counts[c] < pools[c].size()) {
      partial_shuffle(pools[c], counts[c], derive_seed({seed, tag_hash("stratum"), c}));
    }
  });
  std::vector<std::size_t> out;
  out.reserve(pools[0].size() + pools[1].size());
  out.insert(out.end(), pools[0].begin(), pools[0].end());
  out.insert(out.end(), pools[1].begin(), pools[1].end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void HypercolumnConfig::check() const {
  if (input_h == 0 || input_w == 0) throw InvalidArgument("input size must be positive");
  if (expected_channels == 0) throw InvalidArgument("expected_channels must be positive");
  if (!(subsample_rate > 0.0 && subsample_rate <= 1.0)) {
    throw InvalidArgument("subsample_rate must lie in (0, 1]");
  }
  if (!tap_channels.empty()) {
    if (tap_channels.size() != expected_taps) {
      throw InvalidArgument("tap_channels length differs from expected_taps");
    }
    if (std::accumulate(tap_channels.begin(), tap_channels.end(), std::size_t{0}) !=
        expected_channels) {
      throw InvalidArgument("tap_channels do not sum to expected_channels");
    }
  }
}

HypercolumnConfig HypercolumnConfig::describing(const Sample& sample) {
  HypercolumnConfig cfg;
  cfg.input_h = sample.mask.height;
  cfg.input_w = sample.mask.width;
  cfg.expected_taps = sample.taps.size();
  cfg.tap_channels.clear();
  for (const auto& t : sample.taps) cfg.tap_channels.push_back(t.channels);
  cfg.expected_channels = sample.total_channels();
  return cfg;
}

void LabeledPixels::check() const {
  if (labels.size() != features.rows || provenance.size() != features.rows) {
    throw InvalidArgument("LabeledPixels: labels/provenance length differs from row count");
  }
  if (std::any_of(labels.begin(), labels.end(), [](std::uint8_t v) { return v > 1; })) {
    throw InvalidArgument("LabeledPixels: labels must be 0 or 1");
  }
}

PixelMatrix dense_features(const Sample& sample, std::size_t input_h, std::size_t input_w) {
  std::vector<FeatureMap> upsampled;
  upsampled.reserve(sample.taps.size());
  for (const auto& tap : sample.taps) upsampled.push_back(bilinear_upsample(tap, input_h, input_w));
  return flatten_pixels(concat_channels(upsampled));
}

LabeledPixels build_dense_hypercolumn(const Sample& sample, const HypercolumnConfig& cfg) {
  if (auto violations = validate_sample(sample, cfg); !violations.empty()) {
    std::string msg = "sample '" + sample.image_id + "' is invalid:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw InvalidArgument(msg);
  }
  LabeledPixels lp;
  lp.features = dense_features(sample, cfg.input_h, cfg.input_w);
  lp.labels = sample.mask.data;
  lp.provenance.reserve(lp.features.rows);
  for (std::size_t p = 0; p < lp.features.rows; ++p) {
    lp.provenance.push_back({sample.image_id, static_cast<std::uint32_t>(p)});
  }
  return lp;
}

LabeledPixels concat_hypercolumns(std::span<const LabeledPixels> parts) {
  if (parts.empty()) throw InvalidArgument("concat_hypercolumns: empty list");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw InvalidArgument("concat_hypercolumns: column counts differ (" + std::to_string(cols) +
                            " vs " + std::to_string(p.cols()) + ")");
    }
    p.check();
    rows += p.rows();
  }
  LabeledPixels out;
  out.features.rows = rows;
  out.features.cols = cols;
  out.features.data.reserve(rows * cols);
  out.labels.reserve(rows);
  out.provenance.reserve(rows);
  for (const auto& p : parts) {
    out.features.data.insert(out.features.data.end(), p.features.data.begin(),
                             p.features.data.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.provenance.insert(out.provenance.end(), p.provenance.begin(), p.provenance.end());
  }
  return out;
}

std::size_t stratified_count(std::size_t class_rows, double rate) {
  if (class_rows == 0) return 0;
  const auto n = static_cast<std::size_t>(std::llround(rate * static_cast<double>(class_rows)));
  return std::clamp<std::size_t>(n, 1, class_rows);
}

std::vector<std::size_t> stratified_select(std::span<const std::uint8_t> labels, double rate,
                                           std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw InvalidArgument("stratified subsampling rate must lie in (0, 1], got " +
                          std::to_string(rate));
  }
  const auto positives =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  const std::size_t negatives = labels.size() - positives;
  return draw_per_class(labels, {stratified_count(negatives, rate), stratified_count(positives, rate)},
                        seed);
}

std::vector<std::size_t> stratified_select_total(std::span<const std::uint8_t> labels,
                                                 std::size_t total, std::uint64_t seed) {
  if (total == 0) throw InvalidArgument("stratified_select_total: total must be positive");
  if (labels.size() <= total) {
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  const auto positives =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  const std::size_t negatives = labels.size() - positives;
  std::size_t pos_take = 0;
  if (positives > 0) {
    pos_take = static_cast<std::size_t>(std::llround(static_cast<double>(total) *
                                                     static_cast<double>(positives) /
                                                     static_cast<double>(labels.size())));
    pos_take = std::clamp<std::size_t>(pos_take, 1, std::min(positives, total));
  }
  const std::size_t neg_take = std::min(negatives, total - pos_take);
  return draw_per_class(labels, {neg_take, pos_take}, seed);
}

LabeledPixels select_rows(const LabeledPixels& lp, std::span<const std::size_t> indices) {
  LabeledPixels out;
  out.features = lp.features.select_rows(indices);
  out.labels.reserve(indices.size());
  out.provenance.reserve(indices.size());
  for (const std::size_t i : indices) {
    out.labels.push_back(lp.labels[i]);
    out.provenance.push_back(lp.provenance[i]);
  }
  return out;
}

LabeledPixels stratified_subsample(const LabeledPixels& lp, double rate, std::uint64_t seed) {
  lp.check();
  const auto indices = stratified_select(lp.labels, rate, seed);
  return select_rows(lp, indices);
}

}  // namespace hypercol
