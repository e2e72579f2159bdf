#include "hypercol/feature_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "hypercol/binary_io.hpp"
#include "hypercol/error.hpp"
#include "hypercol/hypercolumn.hpp"

namespace hypercol {
namespace {

std::string tap_name(std::size_t k) { return "tap" + std::to_string(k); }

bool mask_is_binary(const Mask& m) {
  return std::all_of(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v <= 1; });
}

std::string dims_string(std::size_t h, std::size_t w) {
  return std::to_string(h) + "x" + std::to_string(w);
}

// Parses "tapN"; returns false for anything else.
bool parse_tap_index(const std::string& name, std::size_t& index) {
  if (name.size() < 4 || name.compare(0, 3, "tap") != 0) return false;
  std::size_t v = 0;
  for (std::size_t i = 3; i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9') return false;
    v = v * 10 + static_cast<std::size_t>(name[i] - '0');
    if (v > 0xFFFF) return false;
  }
  if (name.size() > 4 && name[3] == '0') return false;
  index = v;
  return true;
}

}  // namespace

Mask::Mask(std::size_t h, std::size_t w, std::vector<std::uint8_t> values)
    : height(h), width(w), data(std::move(values)) {
  if (data.size() != h * w) throw InvalidArgument("Mask data length mismatch");
}

std::size_t Sample::total_channels() const {
  std::size_t n = 0;
  for (const auto& t : taps) n += t.channels;
  return n;
}

std::vector<std::string> structural_violations(const Sample& s) {
  std::vector<std::string> out;
  if (s.image_id.empty()) out.emplace_back("image_id is empty");
  if (s.image_id.size() > 0xFFFF) out.emplace_back("image_id longer than 65535 bytes");
  if (s.taps.empty()) out.emplace_back("sample has no taps");
  if (s.mask.height == 0 || s.mask.width == 0) {
    out.emplace_back("mask has a zero dimension");
  } else if (s.mask.data.size() != s.mask.height * s.mask.width) {
    out.emplace_back("mask data length does not match its dimensions");
  } else if (!mask_is_binary(s.mask)) {
    out.emplace_back("mask contains values other than 0 and 1");
  }
  for (std::size_t k = 0; k < s.taps.size(); ++k) {
    const auto& t = s.taps[k];
    if (t.channels == 0 || t.height == 0 || t.width == 0 ||
        t.data.size() != t.channels * t.height * t.width) {
      out.push_back(tap_name(k) + " has inconsistent dimensions");
      continue;
    }
    if (s.mask.height != 0 && s.mask.width != 0 &&
        (t.height > s.mask.height || t.width > s.mask.width || s.mask.height % t.height != 0 ||
         s.mask.width % t.width != 0)) {
      out.push_back(tap_name(k) + " spatial size " + dims_string(t.height, t.width) +
                    " does not divide mask size " + dims_string(s.mask.height, s.mask.width));
    }
    if (!t.all_finite()) out.push_back(tap_name(k) + " contains non-finite values");
  }
  return out;
}

std::vector<std::uint8_t> encode_container(const Sample& sample) {
  if (auto v = structural_violations(sample); !v.empty()) {
    throw InvalidArgument("cannot encode sample '" + sample.image_id + "': " + v.front());
  }
  ByteWriter w;
  for (const char c : kContainerMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kContainerVersion);
  w.str16(sample.image_id);
  w.u32(static_cast<std::uint32_t>(sample.taps.size() + 1));

  for (std::size_t k = 0; k < sample.taps.size(); ++k) {
    const auto& t = sample.taps[k];
    w.str16(tap_name(k));
    w.u8(static_cast<std::uint8_t>(DType::Float32));
    w.u8(3);
    w.u32(static_cast<std::uint32_t>(t.channels));
    w.u32(static_cast<std::uint32_t>(t.height));
    w.u32(static_cast<std::uint32_t>(t.width));
    for (const float v : t.data) w.f32(v);
  }

  w.str16("mask");
  w.u8(static_cast<std::uint8_t>(DType::UInt8));
  w.u8(2);
  w.u32(static_cast<std::uint32_t>(sample.mask.height));
  w.u32(static_cast<std::uint32_t>(sample.mask.width));
  w.raw(sample.mask.data);
  return w.take();
}

std::size_t write_container(const Sample& sample, std::ostream& out) {
  const auto bytes = encode_container(sample);
  const auto old_mask = out.exceptions();
  out.exceptions(std::ios::badbit | std::ios::failbit);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  out.exceptions(old_mask);
  return bytes.size();
}

void write_container_file(const Sample& sample, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  write_container(sample, out);
}

Sample decode_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
    throw FormatError("bad magic: not an HCF1 container");
  }
  r.raw(4);
  if (const auto version = r.u16(); version != kContainerVersion) {
    throw UnsupportedError("unsupported HCF version " + std::to_string(version));
  }

  Sample s;
  s.image_id = r.str16();
  const std::uint32_t tensor_count = r.u32();

  std::map<std::size_t, FeatureMap> taps;
  bool have_mask = false;
  for (std::uint32_t t = 0; t < tensor_count; ++t) {
    const std::string name = r.str16();
    const std::uint8_t dtype = r.u8();
    if (dtype > static_cast<std::uint8_t>(DType::UInt8)) {
      throw UnsupportedError("tensor '" + name + "' has unknown dtype code " +
                             std::to_string(dtype));
    }
    const std::uint8_t rank = r.u8();
    std::vector<std::size_t> dims(rank);
    std::uint64_t count = 1;
    for (auto& d : dims) {
      d = r.u32();
      count *= d;
      if (count > std::numeric_limits<std::uint32_t>::max() * 4ULL) {
        throw FormatError("tensor '" + name + "' declares an implausible size");
      }
    }
    const std::size_t elem = dtype == static_cast<std::uint8_t>(DType::Float32) ? 4 : 1;
    const std::uint64_t payload = count * elem;
    if (payload > r.remaining()) {
      throw FormatError("truncated payload for tensor '" + name + "': declared " +
                        std::to_string(payload) + " bytes, " + std::to_string(r.remaining()) +
                        " present");
    }

    std::size_t tap_index = 0;
    if (name == "mask") {
      if (have_mask) throw FormatError("duplicate mask tensor");
      if (dtype != static_cast<std::uint8_t>(DType::UInt8) || rank != 2) {
        throw FormatError("mask tensor must be uint8 with rank 2");
      }
      const auto raw = r.raw(payload);
      s.mask = Mask(dims[0], dims[1], {raw.begin(), raw.end()});
      have_mask = true;
    } else if (parse_tap_index(name, tap_index)) {
      if (dtype != static_cast<std::uint8_t>(DType::Float32) || rank != 3) {
        throw FormatError("tensor '" + name + "' must be float32 with rank 3");
      }
      if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
        throw FormatError("tensor '" + name + "' has a zero dimension");
      }
      std::vector<float> values(count);
      for (auto& v : values) v = r.f32();
      if (!taps.emplace(tap_index, FeatureMap(dims[0], dims[1], dims[2], std::move(values))).second) {
        throw FormatError("duplicate tensor '" + name + "'");
      }
    } else {
      throw FormatError("unexpected tensor name '" + name + "'");
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last tensor");
  }
  if (!have_mask) throw FormatError("container has no mask tensor");
  std::size_t expect = 0;
  for (auto& [index, fm] : taps) {
    if (index != expect++) throw FormatError("tap tensors are not numbered consecutively");
    s.taps.push_back(std::move(fm));
  }
  if (auto v = structural_violations(s); !v.empty()) {
    throw ValidationError("container '" + s.image_id + "': " + v.front());
  }
  return s;
}

Sample read_container(std::istream& in) {
  const auto bytes = read_all(in);
  return decode_container(bytes);
}

Sample read_container_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return read_container(in);
}

std::vector<std::string> validate_sample(const Sample& s, const HypercolumnConfig& cfg) {
  std::vector<std::string> out;
  if (s.taps.size() != cfg.expected_taps) {
    out.push_back("expected " + std::to_string(cfg.expected_taps) + " taps, found " +
                  std::to_string(s.taps.size()));
  }
  if (s.mask.height != cfg.input_h || s.mask.width != cfg.input_w) {
    out.push_back("mask size " + dims_string(s.mask.height, s.mask.width) +
                  " differs from input size " + dims_string(cfg.input_h, cfg.input_w));
  } else if (s.mask.data.size() != s.mask.height * s.mask.width) {
    out.emplace_back("mask data length does not match its dimensions");
  } else if (!mask_is_binary(s.mask)) {
    out.emplace_back("mask contains values other than 0 and 1");
  }

  std::size_t total = 0;
  for (std::size_t k = 0; k < s.taps.size(); ++k) {
    const auto& t = s.taps[k];
    total += t.channels;
    if (t.channels == 0 || t.height == 0 || t.width == 0 ||
        t.data.size() != t.channels * t.height * t.width) {
      out.push_back(tap_name(k) + " has inconsistent dimensions");
      continue;
    }
    if (!cfg.tap_channels.empty() && k < cfg.tap_channels.size() &&
        t.channels != cfg.tap_channels[k]) {
      out.push_back(tap_name(k) + " has " + std::to_string(t.channels) + " channels, expected " +
                    std::to_string(cfg.tap_channels[k]));
    }
    if (t.height > cfg.input_h || t.width > cfg.input_w || cfg.input_h % t.height != 0 ||
        cfg.input_w % t.width != 0) {
      out.push_back(tap_name(k) + " spatial size " + dims_string(t.height, t.width) +
                    " does not divide input size " + dims_string(cfg.input_h, cfg.input_w));
    }
    if (!t.all_finite()) out.push_back(tap_name(k) + " contains non-finite values");
  }
  if (total != cfg.expected_channels) {
    out.push_back("total channel count " + std::to_string(total) + " differs from expected " +
                  std::to_string(cfg.expected_channels));
  }
  return out;
}

}  // namespace hypercol
