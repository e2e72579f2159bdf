#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace hypercol {

/// 64-bit FNV-1a of a tag string; used to turn stage/model names into seeds.
std::uint64_t tag_hash(std::string_view tag);

/// Hierarchical seed derivation: folds each part through splitmix64.
/// derive_seed({base, run, tag_hash("fit"), tag_hash("LR")}) yields an
/// independent stream per (run, stage, model) that does not shift when
/// unrelated streams are added.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// std:: distributions are not, so bounded draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound); bound must be > 0.
  std::size_t uniform_index(std::size_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (no cached spare, so draws are stateless).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace hypercol
