#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hypercol/error.hpp"
#include "hypercol/harness.hpp"
#include "hypercol/random.hpp"

namespace hypercol {
namespace {

std::size_t parse_count(const std::string& token, std::size_t line_no) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || token.empty() || token[0] == '-' || v == 0) {
    throw FormatError("manifest line " + std::to_string(line_no) + ": '" + token +
                      "' is not a positive integer");
  }
  return static_cast<std::size_t>(v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto space = line.find_first_of(" \t");
    const std::string key = line.substr(0, space);
    const std::string rest = space == std::string::npos ? "" : trim(line.substr(space));
    if (key == "train" || key == "test") {
      if (rest.empty()) {
        throw FormatError("manifest line " + std::to_string(line_no) + ": missing path");
      }
      std::filesystem::path p(rest);
      if (p.is_relative()) p = base_dir / p;
      (key == "train" ? m.train : m.test).push_back(p.lexically_normal());
    } else if (key == "size") {
      std::istringstream fields(rest);
      std::string h, w, extra;
      fields >> h >> w;
      if (h.empty() || w.empty() || (fields >> extra)) {
        throw FormatError("manifest line " + std::to_string(line_no) + ": expected 'size H W'");
      }
      m.input_size = std::pair{parse_count(h, line_no), parse_count(w, line_no)};
    } else if (key == "taps") {
      std::istringstream fields(rest);
      std::string tok;
      m.tap_channels.clear();
      while (fields >> tok) m.tap_channels.push_back(parse_count(tok, line_no));
      if (m.tap_channels.empty()) {
        throw FormatError("manifest line " + std::to_string(line_no) + ": empty taps list");
      }
    } else {
      throw FormatError("manifest line " + std::to_string(line_no) + ": unknown directive '" +
                        key + "'");
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.parent_path());
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open '" + path.string() + "' for writing");
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    const auto r = p.lexically_relative(base.empty() ? "." : base);
    return (r.empty() ? p : r).generic_string();
  };
  if (manifest.input_size) {
    out << "size " << manifest.input_size->first << ' ' << manifest.input_size->second << '\n';
  }
  if (!manifest.tap_channels.empty()) {
    out << "taps";
    for (const auto c : manifest.tap_channels) out << ' ' << c;
    out << '\n';
  }
  for (const auto& p : manifest.train) out << "train " << rel(p) << '\n';
  for (const auto& p : manifest.test) out << "test " << rel(p) << '\n';
  if (!out) throw std::ios_base::failure("write to '" + path.string() + "' failed");
}

HypercolumnConfig manifest_geometry(const Manifest& manifest) {
  HypercolumnConfig cfg;
  if (manifest.input_size && !manifest.tap_channels.empty()) {
    cfg.input_h = manifest.input_size->first;
    cfg.input_w = manifest.input_size->second;
    cfg.tap_channels = manifest.tap_channels;
    cfg.expected_taps = cfg.tap_channels.size();
    cfg.expected_channels = 0;
    for (const auto c : cfg.tap_channels) cfg.expected_channels += c;
    return cfg;
  }
  if (manifest.train.empty()) throw InvalidArgument("manifest has no training images");
  cfg = HypercolumnConfig::describing(read_container_file(manifest.train.front()));
  if (manifest.input_size) {
    cfg.input_h = manifest.input_size->first;
    cfg.input_w = manifest.input_size->second;
  }
  return cfg;
}

std::vector<std::string> validate_manifest(const Manifest& manifest) {
  std::vector<std::string> problems;
  if (manifest.train.empty()) problems.push_back("manifest: no training images");
  if (manifest.test.empty()) problems.push_back("manifest: no test images");
  const std::set<std::filesystem::path> train(manifest.train.begin(), manifest.train.end());
  for (const auto& p : manifest.test) {
    if (train.contains(p)) problems.push_back(p.string() + ": listed in both train and test");
  }
  for (const auto* split : {&manifest.train, &manifest.test}) {
    std::set<std::filesystem::path> seen;
    for (const auto& p : *split) {
      if (!seen.insert(p).second) problems.push_back(p.string() + ": listed more than once");
    }
  }

  HypercolumnConfig geometry;
  try {
    geometry = manifest_geometry(manifest);
  } catch (const std::exception& e) {
    problems.push_back(std::string("manifest: cannot determine geometry: ") + e.what());
    return problems;
  }
  for (const auto* split : {&manifest.train, &manifest.test}) {
    for (const auto& p : *split) {
      if (!std::filesystem::exists(p)) {
        problems.push_back(p.string() + ": file does not exist");
        continue;
      }
      try {
        const Sample s = read_container_file(p);
        for (const auto& v : validate_sample(s, geometry)) problems.push_back(p.string() + ": " + v);
      } catch (const std::exception& e) {
        problems.push_back(p.string() + ": " + e.what());
      }
    }
  }
  return problems;
}

std::vector<std::filesystem::path> sample_training_subset(const Manifest& manifest,
                                                          std::size_t n,
                                                          std::size_t run_index,
                                                          std::uint64_t base_seed) {
  const std::size_t total = manifest.train.size();
  if (n == 0 || n > total) {
    throw InvalidArgument("training subset size " + std::to_string(n) + " outside [1, " +
                          std::to_string(total) + "]");
  }
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng(derive_seed({base_seed, run_index, tag_hash("subset")}));
  for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.uniform_index(total - i)]);
  std::vector<std::filesystem::path> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(manifest.train[order[i]]);
  return out;
}

}  // namespace hypercol
