#include "hypercol/model_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "hypercol/binary_io.hpp"
#include "hypercol/ensembles.hpp"
#include "hypercol/error.hpp"

namespace hypercol {
namespace {

void write_nested(ByteWriter& w, const Classifier& model) {
  const auto blob = encode_model(model);
  w.u64(blob.size());
  w.raw(blob);
}

ModelPtr read_nested(ByteReader& r) {
  const std::uint64_t size = r.u64();
  if (size > r.remaining()) throw FormatError("nested model blob exceeds remaining bytes");
  return decode_model(r.raw(static_cast<std::size_t>(size)));
}

// Guards allocations against sizes the remaining bytes cannot hold.
std::size_t checked_count(const ByteReader& r, std::uint64_t count, std::size_t element_bytes,
                          const char* what) {
  if (element_bytes != 0 && count > r.remaining() / element_bytes) {
    throw FormatError(std::string(what) + " count exceeds remaining bytes");
  }
  return static_cast<std::size_t>(count);
}

std::vector<double> read_f64s(ByteReader& r, std::size_t n) {
  checked_count(r, n, 8, "f64");
  std::vector<double> v(n);
  for (auto& x : v) x = r.f64();
  return v;
}

std::shared_ptr<Classifier> decode_payload(ByteReader& r, ClassifierKind kind, std::size_t d) {
  switch (kind) {
    case ClassifierKind::LogisticRegression:
    case ClassifierKind::LinearSvc: {
      auto weights = read_f64s(r, d);
      const double b = r.f64();
      return std::make_shared<LinearModel>(kind, std::move(weights), b);
    }
    case ClassifierKind::RbfSvc: {
      const double gamma = r.f64();
      const double c = r.f64();
      const double b = r.f64();
      const double pa = r.f64();
      const double pb = r.f64();
      const std::size_t n_sv = checked_count(r, r.u64(), 4 * d + 8, "support vector");
      std::vector<float> sv(n_sv * d);
      for (auto& x : sv) x = r.f32();
      auto coef = read_f64s(r, n_sv);
      return std::make_shared<RbfSvcModel>(PixelMatrix(n_sv, d, std::move(sv)), std::move(coef),
                                           b, gamma, pa, pb, c);
    }
    case ClassifierKind::RandomForest: {
      const std::size_t n_trees = checked_count(r, r.u32(), 4, "tree");
      std::vector<DecisionTree> trees(n_trees);
      for (auto& t : trees) {
        const std::size_t n_nodes = checked_count(r, r.u32(), 28, "node");
        if (n_nodes == 0) throw FormatError("tree with no nodes");
        t.nodes.resize(n_nodes);
        for (auto& node : t.nodes) {
          node.feature = static_cast<std::int32_t>(r.u32());
          node.threshold = r.f64();
          node.left = static_cast<std::int32_t>(r.u32());
          node.right = static_cast<std::int32_t>(r.u32());
          node.value = r.f64();
        }
        for (std::size_t k = 0; k < n_nodes; ++k) {
          const TreeNode& node = t.nodes[k];
          if (node.is_leaf()) continue;
          const auto n = static_cast<std::int64_t>(n_nodes);
          if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= d ||
              node.left <= static_cast<std::int64_t>(k) || node.left >= n ||
              node.right <= static_cast<std::int64_t>(k) || node.right >= n) {
            throw FormatError("tree node " + std::to_string(k) + " is malformed");
          }
        }
      }
      return std::make_shared<ForestModel>(d, std::move(trees));
    }
    case ClassifierKind::Voting: {
      const std::size_t n = checked_count(r, r.u32(), 16, "member");
      std::vector<ModelPtr> members;
      std::vector<double> weights;
      for (std::size_t k = 0; k < n; ++k) {
        weights.push_back(r.f64());
        members.push_back(read_nested(r));
      }
      return std::make_shared<VotingModel>(std::move(members), std::move(weights));
    }
    case ClassifierKind::Stacking: {
      const std::size_t n = checked_count(r, r.u32(), 8, "base");
      std::vector<ModelPtr> bases;
      for (std::size_t k = 0; k < n; ++k) bases.push_back(read_nested(r));
      ModelPtr meta = read_nested(r);
      return std::make_shared<StackingModel>(std::move(bases), std::move(meta));
    }
  }
  throw UnsupportedError("unknown model kind tag " + std::to_string(static_cast<int>(kind)));
}

}  // namespace

void LinearModel::write_payload(ByteWriter& w) const {
  for (const double v : weights_) w.f64(v);
  w.f64(intercept_);
}

void RbfSvcModel::write_payload(ByteWriter& w) const {
  w.f64(gamma_);
  w.f64(c_);
  w.f64(intercept_);
  w.f64(platt_a_);
  w.f64(platt_b_);
  w.u64(support_.rows);
  for (const float v : support_.data) w.f32(v);
  for (const double v : coef_) w.f64(v);
}

void ForestModel::write_payload(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(trees_.size()));
  for (const auto& t : trees_) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.u32(static_cast<std::uint32_t>(n.feature));
      w.f64(n.threshold);
      w.u32(static_cast<std::uint32_t>(n.left));
      w.u32(static_cast<std::uint32_t>(n.right));
      w.f64(n.value);
    }
  }
}

void VotingModel::write_payload(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(members_.size()));
  for (std::size_t k = 0; k < members_.size(); ++k) {
    w.f64(weights_[k]);
    write_nested(w, *members_[k]);
  }
}

void StackingModel::write_payload(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(bases_.size()));
  for (const auto& b : bases_) write_nested(w, *b);
  write_nested(w, *meta_);
}

std::vector<std::uint8_t> encode_model(const Classifier& model) {
  ByteWriter w;
  for (const char c : kModelMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kModelVersion);
  w.u8(static_cast<std::uint8_t>(model.kind()));
  w.u64(model.dimension());
  w.u64(model.training().seed);
  w.u64(model.training().iterations);
  const auto& scaler = model.scaler();
  w.u8(scaler ? 1 : 0);
  if (scaler) {
    for (const double v : scaler->mean) w.f64(v);
    for (const double v : scaler->scale) w.f64(v);
  }
  model.write_payload(w);
  return w.take();
}

ModelPtr decode_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kModelMagic),
                  [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); })) {
    throw FormatError("bad magic: not an HCM1 model");
  }
  const std::uint16_t version = r.u16();
  if (version != kModelVersion) {
    throw UnsupportedError("unsupported HCM version " + std::to_string(version));
  }
  const std::uint8_t tag = r.u8();
  if (tag < 1 || tag > 6) throw UnsupportedError("unknown model kind tag " + std::to_string(tag));
  const auto kind = static_cast<ClassifierKind>(tag);
  const std::uint64_t dim = r.u64();
  if (dim == 0 || dim > 0xFFFFFFFFull) throw FormatError("implausible model dimension");
  const auto d = static_cast<std::size_t>(dim);
  TrainingInfo info;
  info.seed = r.u64();
  info.iterations = static_cast<std::size_t>(r.u64());
  std::optional<FeatureScaler> scaler;
  const std::uint8_t has_scaler = r.u8();
  if (has_scaler > 1) throw FormatError("bad scaler flag");
  if (has_scaler == 1) {
    FeatureScaler s;
    s.mean = read_f64s(r, d);
    s.scale = read_f64s(r, d);
    scaler = std::move(s);
  }
  std::shared_ptr<Classifier> model;
  try {
    model = decode_payload(r, kind, d);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("inconsistent model payload: ") + e.what());
  }
  if (model->dimension() != d) throw FormatError("payload dimension differs from header");
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after model payload");
  }
  model->set_training(info);
  if (scaler) model->attach_scaler(std::move(*scaler));
  return model;
}

void save_model_file(const Classifier& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::ios_base::failure("write to '" + path.string() + "' failed");
}

ModelPtr load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path.string() + "'");
  const auto bytes = read_all(in);
  return decode_model(bytes);
}

}  // namespace hypercol
