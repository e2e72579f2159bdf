#pragma once

// Generators and slow reference implementations shared by the unit and
// acceptance tests. Oracles are written directly from the definitions and
// deliberately share no code with the library.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hypercol/feature_io.hpp"
#include "hypercol/hypercolumn.hpp"
#include "hypercol/metrics.hpp"
#include "hypercol/random.hpp"
#include "hypercol/tensor.hpp"

namespace hypercol::testing {

// ---- generators -----------------------------------------------------------

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }

inline std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.uniform_index(hi - lo + 1);
}

inline FeatureMap random_map(Rng& rng, std::size_t c, std::size_t h, std::size_t w,
                             double lo = -10.0, double hi = 10.0) {
  FeatureMap fm(c, h, w);
  for (auto& v : fm.data) v = static_cast<float>(uniform(rng, lo, hi));
  return fm;
}

inline std::vector<std::uint8_t> random_bits(Rng& rng, std::size_t n, double p_one = 0.5) {
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = rng.uniform01() < p_one ? 1 : 0;
  return v;
}

inline Mask random_mask(Rng& rng, std::size_t h, std::size_t w, double p_one = 0.5) {
  return Mask(h, w, random_bits(rng, h * w, p_one));
}

/// Sample with tap k at (h >> k, w >> k) for the given channel counts.
inline Sample random_sample(Rng& rng, std::size_t h, std::size_t w,
                            const std::vector<std::size_t>& channels,
                            const std::string& id = "img") {
  Sample s;
  s.image_id = id;
  for (std::size_t k = 0; k < channels.size(); ++k) {
    s.taps.push_back(random_map(rng, channels[k], h >> k, w >> k));
  }
  s.mask = random_mask(rng, h, w, 0.3);
  return s;
}

inline LabeledPixels random_labeled_pixels(Rng& rng, std::size_t rows, std::size_t cols,
                                           double p_one) {
  LabeledPixels lp;
  lp.features = PixelMatrix(rows, cols);
  for (auto& v : lp.features.data) v = static_cast<float>(uniform(rng, -1.0, 1.0));
  lp.labels = random_bits(rng, rows, p_one);
  for (std::size_t i = 0; i < rows; ++i) {
    lp.provenance.push_back({"img", static_cast<std::uint32_t>(i)});
  }
  return lp;
}

/// Two Gaussian blobs in d dimensions centred at +/- offset on axis 0.
inline void gaussian_blobs(Rng& rng, std::size_t n, std::size_t d, double offset, PixelMatrix& X,
                           std::vector<std::uint8_t>& y) {
  X = PixelMatrix(n, d);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? 1 : 0;
    for (std::size_t j = 0; j < d; ++j) {
      double v = rng.normal();
      if (j == 0) v += y[i] ? offset : -offset;
      X(i, j) = static_cast<float>(v);
    }
  }
}

/// Sample whose single 1-channel tap equals the mask.
inline Sample label_channel_sample(const Mask& mask, const std::string& id) {
  Sample s;
  s.image_id = id;
  FeatureMap tap(1, mask.height, mask.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) tap.data[i] = mask.data[i];
  s.taps.push_back(std::move(tap));
  s.mask = mask;
  return s;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("hypercol_" + tag + "_" + std::to_string(stamp) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---- oracles --------------------------------------------------------------

/// Per-pixel half-pixel-centre bilinear resize in double precision.
inline std::vector<double> bilinear_oracle(const FeatureMap& fm, std::size_t H, std::size_t W) {
  std::vector<double> out(fm.channels * H * W);
  const double h = static_cast<double>(fm.height);
  const double w = static_cast<double>(fm.width);
  for (std::size_t c = 0; c < fm.channels; ++c) {
    for (std::size_t y = 0; y < H; ++y) {
      double sy = (y + 0.5) * (h / static_cast<double>(H)) - 0.5;
      sy = std::clamp(sy, 0.0, h - 1.0);
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t y1 = std::min(y0 + 1, fm.height - 1);
      const double wy = sy - static_cast<double>(y0);
      for (std::size_t x = 0; x < W; ++x) {
        double sx = (x + 0.5) * (w / static_cast<double>(W)) - 0.5;
        sx = std::clamp(sx, 0.0, w - 1.0);
        const auto x0 = static_cast<std::size_t>(std::floor(sx));
        const std::size_t x1 = std::min(x0 + 1, fm.width - 1);
        const double wx = sx - static_cast<double>(x0);
        const double top = (1 - wx) * fm.at(c, y0, x0) + wx * fm.at(c, y0, x1);
        const double bottom = (1 - wx) * fm.at(c, y1, x0) + wx * fm.at(c, y1, x1);
        out[(c * H + y) * W + x] = (1 - wy) * top + wy * bottom;
      }
    }
  }
  return out;
}

struct LoopCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline LoopCounts confusion_oracle(const std::vector<std::uint8_t>& pred,
                                   const std::vector<std::uint8_t>& truth) {
  LoopCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && truth[i] == 1) c.tp++;
    if (pred[i] == 1 && truth[i] == 0) c.fp++;
    if (pred[i] == 0 && truth[i] == 0) c.tn++;
    if (pred[i] == 0 && truth[i] == 1) c.fn++;
  }
  return c;
}

/// Metrics straight from the definitions, with the both-empty convention.
inline MetricVector metrics_oracle(const LoopCounts& c) {
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  MetricVector m;
  m.accuracy = (tp + tn) / (tp + fp + tn + fn);
  m.precision = (c.tp + c.fp == 0) ? (c.fn == 0 ? 1.0 : 0.0) : tp / (tp + fp);
  m.recall = (c.tp + c.fn == 0) ? (c.fp == 0 ? 1.0 : 0.0) : tp / (tp + fn);
  m.jaccard = (c.tp + c.fp + c.fn == 0) ? 1.0 : tp / (tp + fp + fn);
  m.dice = (c.tp + c.fp + c.fn == 0) ? 1.0 : 2 * tp / (2 * tp + fp + fn);
  return m;
}

/// Two-sided exact Wilcoxon p by listing all 2^n sign assignments.
inline double wilcoxon_enumeration_p(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (const double v : diffs) {
    if (v != 0.0) d.push_back(v);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) less++;
      if (std::abs(d[j]) == std::abs(d[i])) equal++;
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double total = 0, plus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += rank[i];
    if (d[i] > 0) plus += rank[i];
  }
  const double w = std::min(plus, total - plus);
  std::uint64_t extreme = 0;
  const std::uint64_t assignments = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < assignments; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) s += rank[i];
    }
    if (s <= w + 1e-9) extreme++;
  }
  return std::min(1.0, 2.0 * static_cast<double>(extreme) / static_cast<double>(assignments));
}

/// Accelerated projected gradient on the RBF SVM dual
///   min a'Qa/2 - sum a,  0 <= a <= C,  s'a = 0,
/// projecting by bisection on the equality multiplier. Returns the
/// objective value.
inline double projected_gradient_dual(const PixelMatrix& X, const std::vector<std::uint8_t>& y,
                                      double c, double gamma, std::size_t iterations = 50000) {
  const std::size_t n = X.rows;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = y[i] ? 1.0 : -1.0;
  std::vector<double> Q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sq = 0;
      for (std::size_t k = 0; k < X.cols; ++k) {
        const double diff = static_cast<double>(X(i, k)) - X(j, k);
        sq += diff * diff;
      }
      Q[i * n + j] = s[i] * s[j] * std::exp(-gamma * sq);
    }
  }
  // Lipschitz constant by power iteration.
  std::vector<double> v(n, 1.0), t(n);
  double lip = 1.0;
  for (int it = 0; it < 200; ++it) {
    double norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = 0;
      for (std::size_t j = 0; j < n; ++j) t[i] += Q[i * n + j] * v[j];
      norm += t[i] * t[i];
    }
    norm = std::sqrt(norm);
    lip = norm;
    for (std::size_t i = 0; i < n; ++i) v[i] = t[i] / norm;
  }
  lip *= 1.01;

  auto project = [&](std::vector<double>& a) {
    auto excess = [&](double nu) {
      double sum = 0;
      for (std::size_t i = 0; i < n; ++i) sum += s[i] * std::clamp(a[i] - nu * s[i], 0.0, c);
      return sum;
    };
    double lo = -1e6, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) > 0 ? lo : hi) = mid;
    }
    const double nu = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(a[i] - nu * s[i], 0.0, c);
  };
  auto objective = [&](const std::vector<double>& a) {
    double f = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double qa = 0;
      for (std::size_t j = 0; j < n; ++j) qa += Q[i * n + j] * a[j];
      f += 0.5 * a[i] * qa - a[i];
    }
    return f;
  };

  std::vector<double> a(n, 0.0), prev(n, 0.0), z(n, 0.0), grad(n);
  double momentum = 1.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double qa = 0;
      for (std::size_t j = 0; j < n; ++j) qa += Q[i * n + j] * z[j];
      grad[i] = qa - 1.0;
    }
    prev = a;
    for (std::size_t i = 0; i < n; ++i) a[i] = z[i] - grad[i] / lip;
    project(a);
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + (momentum - 1.0) / next * (a[i] - prev[i]);
    momentum = next;
  }
  return objective(a);
}

/// Largest |.| of the squared-hinge KKT residuals for a LinearSVC dual
/// solution: stationarity w~ = sum a_i s_i x~_i, a >= 0, and
/// G_i = s_i w~.x~_i - 1 + a_i / (2C) with G_i = 0 where a_i > 0 and
/// G_i >= 0 where a_i = 0.
struct KktReport {
  double min_alpha = 0;
  double stationarity = 0;
  double complementarity = 0;
};

inline KktReport linear_svc_kkt(const PixelMatrix& X, const std::vector<std::uint8_t>& y,
                                double c, const std::vector<double>& w, double b,
                                const std::vector<double>& alpha) {
  KktReport r;
  r.min_alpha = *std::min_element(alpha.begin(), alpha.end());
  std::vector<double> rebuilt(X.cols + 1, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const double s = y[i] ? 1.0 : -1.0;
    for (std::size_t j = 0; j < X.cols; ++j) rebuilt[j] += alpha[i] * s * X(i, j);
    rebuilt[X.cols] += alpha[i] * s;
  }
  for (std::size_t j = 0; j < X.cols; ++j) {
    r.stationarity = std::max(r.stationarity, std::abs(rebuilt[j] - w[j]));
  }
  r.stationarity = std::max(r.stationarity, std::abs(rebuilt[X.cols] - b));
  for (std::size_t i = 0; i < X.rows; ++i) {
    const double s = y[i] ? 1.0 : -1.0;
    double z = b;
    for (std::size_t j = 0; j < X.cols; ++j) z += w[j] * X(i, j);
    const double g = s * z - 1.0 + alpha[i] / (2.0 * c);
    const double violation = alpha[i] > 0 ? std::abs(g) : std::max(0.0, -g);
    r.complementarity = std::max(r.complementarity, violation);
  }
  return r;
}

}  // namespace hypercol::testing
