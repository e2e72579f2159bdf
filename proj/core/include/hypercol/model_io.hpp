#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hypercol/classifiers.hpp"

namespace hypercol {

inline constexpr char kModelMagic[4] = {'H', 'C', 'M', '1'};
inline constexpr std::uint16_t kModelVersion = 1;

/// HCM1 blob, little-endian:
///   "HCM1", u16 version, u8 kind, u64 dimension, u64 training seed,
///   u64 iterations, u8 has_scaler [, f64 mean[d], f64 scale[d]],
///   kind payload.
/// Payloads:
///   LR / LinearSVC  f64 weights[d], f64 intercept
///   SVC             f64 gamma, f64 C, f64 intercept, f64 A, f64 B,
///                   u64 n_sv, f32 sv[n_sv*d], f64 coef[n_sv]
///   RF              u32 trees, per tree u32 nodes, per node
///                   i32 feature, f64 threshold, i32 left, i32 right, f64 value
///   voting          u32 members, per member f64 weight, u64 size, blob
///   stacking        u32 bases, per base u64 size, blob; then meta u64 size, blob
std::vector<std::uint8_t> encode_model(const Classifier& model);

/// Inverse of encode_model. Throws FormatError on bad magic, truncation,
/// trailing bytes or inconsistent sizes; UnsupportedError on an unknown
/// version or kind tag.
ModelPtr decode_model(std::span<const std::uint8_t> bytes);

void save_model_file(const Classifier& model, const std::filesystem::path& path);
ModelPtr load_model_file(const std::filesystem::path& path);

}  // namespace hypercol
