#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hypercol/error.hpp"
#include "hypercol/metrics.hpp"

namespace hypercol {
namespace {

struct SignedRanks {
  // Ranks doubled so average ranks of ties stay integral.
  std::vector<std::uint64_t> doubled_ranks;
  std::vector<bool> positive;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
};

SignedRanks rank_differences(std::span<const double> d) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  SignedRanks r;
  r.doubled_ranks.resize(d.size());
  r.positive.resize(d.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    // Ranks i+1 .. j averaged, doubled: (i+1) + j.
    const std::uint64_t doubled = (i + 1) + j;
    for (std::size_t k = i; k < j; ++k) {
      r.doubled_ranks[order[k]] = doubled;
      r.positive[order[k]] = d[order[k]] > 0.0;
    }
    const auto t = static_cast<double>(j - i);
    r.tie_term += t * t * t - t;
    i = j;
  }
  return r;
}

// P(W+ <= w) under the null, by counting sign assignments with a subset-sum
// table over doubled ranks.
double exact_lower_tail(const std::vector<std::uint64_t>& doubled_ranks, std::uint64_t w2) {
  const std::uint64_t total =
      std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), std::uint64_t{0});
  std::vector<double> ways(total + 1, 0.0);
  ways[0] = 1.0;
  std::uint64_t reach = 0;
  for (const std::uint64_t r : doubled_ranks) {
    reach += r;
    for (std::uint64_t s = reach; s >= r; --s) {
      ways[s] += ways[s - r];
      if (s == r) break;
    }
  }
  double below = 0.0;
  for (std::uint64_t s = 0; s <= std::min(w2, total); ++s) below += ways[s];
  return below / std::ldexp(1.0, static_cast<int>(doubled_ranks.size()));
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMode mode) {
  if (a.size() != b.size()) throw InvalidArgument("wilcoxon: samples differ in length");
  if (a.empty()) throw InvalidArgument("wilcoxon: empty samples");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (!std::isfinite(diff)) throw InvalidArgument("wilcoxon: non-finite difference");
    if (diff != 0.0) d.push_back(diff);
  }
  if (d.empty()) throw DegenerateSampleError("wilcoxon: all paired differences are zero");

  const SignedRanks ranks = rank_differences(d);
  std::uint64_t plus2 = 0;
  std::uint64_t total2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total2 += ranks.doubled_ranks[i];
    if (ranks.positive[i]) plus2 += ranks.doubled_ranks[i];
  }
  const std::uint64_t w2 = std::min(plus2, total2 - plus2);

  WilcoxonResult result;
  result.n_effective = d.size();
  result.statistic = static_cast<double>(w2) / 2.0;
  const bool exact = mode == WilcoxonMode::Exact ||
                     (mode == WilcoxonMode::Auto && d.size() <= kWilcoxonExactLimit);
  result.exact = exact;
  if (exact) {
    if (d.size() > 60) throw InvalidArgument("wilcoxon: exact mode supports at most 60 pairs");
    result.p_value = std::min(1.0, 2.0 * exact_lower_tail(ranks.doubled_ranks, w2));
    return result;
  }

  const auto n = static_cast<double>(d.size());
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ranks.tie_term / 48.0;
  if (!(var > 0.0)) {
    result.p_value = 1.0;
    return result;
  }
  const double dev = std::max(0.0, std::abs(result.statistic - mean) - 0.5);
  result.p_value = std::min(1.0, std::erfc(dev / std::sqrt(2.0 * var)));
  return result;
}

}  // namespace hypercol
