#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hypercol/tensor.hpp"

namespace hypercol {

struct HypercolumnConfig;

/// Binary label grid, row-major, values in {0, 1}.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(std::size_t h, std::size_t w) : height(h), width(w), data(h * w, 0) {}
  Mask(std::size_t h, std::size_t w, std::vector<std::uint8_t> values);

  std::uint8_t at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
  std::uint8_t& at(std::size_t y, std::size_t x) { return data[y * width + x]; }

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// One image worth of tap activations plus its ground-truth mask.
///
/// source_h/source_w describe the image before resizing. They are
/// informative only and are not part of the HCF byte layout, so a decoded
/// Sample always carries 0 for both.
struct Sample {
  std::string image_id;
  std::vector<FeatureMap> taps;
  Mask mask;
  std::size_t source_h = 0;
  std::size_t source_w = 0;

  std::size_t total_channels() const;

  friend bool operator==(const Sample&, const Sample&) = default;
};

inline constexpr char kContainerMagic[4] = {'H', 'C', 'F', '1'};
inline constexpr std::uint16_t kContainerVersion = 1;

enum class DType : std::uint8_t { Float32 = 0, UInt8 = 1 };

/// Configuration-free structural problems of a Sample (empty id, no taps,
/// taps whose spatial size does not divide the mask size, non-binary mask,
/// non-finite activations). Empty result means the Sample can be encoded.
std::vector<std::string> structural_violations(const Sample& sample);

/// Encodes a Sample as HCF1 bytes. Deterministic: equal Samples encode to
/// identical bytes. Throws InvalidArgument if structural_violations() is
/// non-empty.
std::vector<std::uint8_t> encode_container(const Sample& sample);

/// Writes HCF1 bytes to a stream and returns the byte count. Stream
/// failures raise std::ios_base::failure.
std::size_t write_container(const Sample& sample, std::ostream& out);
void write_container_file(const Sample& sample, const std::filesystem::path& path);

/// Decodes HCF1 bytes.
///
/// Throws FormatError on bad magic, truncation, trailing bytes or a wrong
/// tensor layout; UnsupportedError on an unknown version or dtype code;
/// ValidationError when the decoded Sample breaks a structural invariant.
Sample decode_container(std::span<const std::uint8_t> bytes);
Sample read_container(std::istream& in);
Sample read_container_file(const std::filesystem::path& path);

/// Checks a Sample against a hypercolumn configuration: tap count,
/// per-tap and total channel counts, mask size, spatial divisibility,
/// mask binarity and finiteness. Returns readable descriptions; empty
/// means valid.
std::vector<std::string> validate_sample(const Sample& sample, const HypercolumnConfig& cfg);

}  // namespace hypercol
