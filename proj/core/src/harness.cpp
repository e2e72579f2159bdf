#include "hypercol/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "hypercol/error.hpp"
#include "hypercol/model_io.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/random.hpp"

namespace hypercol {
namespace {

std::string canonical_name(const std::string& name) {
  return std::string(kind_name(parse_kind(name)));
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_config(const ExperimentConfig& cfg, const std::vector<std::string>& roster,
                  const HypercolumnConfig& geometry, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  out << "key\tvalue\n";
  out << "manifest\t" << cfg.manifest.filename().string() << '\n';
  out << "models\t";
  for (std::size_t i = 0; i < roster.size(); ++i) out << (i ? "," : "") << roster[i];
  out << '\n';
  out << "n\t" << cfg.n_train << '\n';
  out << "rate\t" << full(cfg.subsample_rate) << '\n';
  out << "runs\t" << cfg.runs << '\n';
  out << "seed\t" << cfg.base_seed << '\n';
  out << "threshold\t" << full(cfg.threshold) << '\n';
  out << "input_size\t" << geometry.input_h << 'x' << geometry.input_w << '\n';
  out << "channels\t" << geometry.expected_channels << '\n';
  out << "subset_seed_depends_on\tseed,run,n\n";
  out << "wilcoxon_pairing\tper-image dice pooled over runs\n";
  if (!out) throw std::ios_base::failure("cannot write '" + path.string() + "'");
}

// Per-image failures carry the image path; run_experiment fills in the run.
template <class F>
auto with_image(const std::filesystem::path& path, const char* stage, F&& f) {
  try {
    return f();
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentError(0, "", path.string(), stage, e.what());
  }
}

}  // namespace

void ExperimentConfig::check() const {
  if (roster.empty()) throw InvalidArgument("experiment roster is empty");
  for (const auto& name : roster) parse_kind(name);
  if (n_train == 0) throw InvalidArgument("N must be >= 1");
  if (!(subsample_rate > 0.0 && subsample_rate <= 1.0)) {
    throw InvalidArgument("subsample rate must lie in (0, 1]");
  }
  if (runs == 0) throw InvalidArgument("runs must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
  if (block_rows == 0) throw InvalidArgument("block_rows must be positive");
  if (out_dir.empty()) throw InvalidArgument("output directory is required");
}

ExperimentError::ExperimentError(std::size_t run, std::string model, std::string image,
                                 std::string stage, const std::string& cause)
    : std::runtime_error("run " + std::to_string(run) + ", stage " + stage +
                         (model.empty() ? "" : ", model " + model) +
                         (image.empty() ? "" : ", image " + image) + ": " + cause),
      run_(run),
      model_(std::move(model)),
      image_(std::move(image)),
      stage_(std::move(stage)),
      cause_(cause) {}

const ModelResults& ResultBundle::model(const std::string& name) const {
  for (const auto& m : models) {
    if (m.model == name) return m;
  }
  throw InvalidArgument("no results for model '" + name + "'");
}

std::uint64_t stage_seed(std::uint64_t base_seed, std::size_t run, std::string_view stage,
                         std::string_view model) {
  return derive_seed({base_seed, run, tag_hash(stage), tag_hash(model)});
}

LabeledPixels build_sparse_training_set(std::span<const std::filesystem::path> paths,
                                        const HypercolumnConfig& geometry, double rate,
                                        std::uint64_t seed) {
  if (paths.empty()) throw InvalidArgument("no training images");
  geometry.check();
  std::vector<std::vector<std::uint8_t>> labels(paths.size());
  parallel_for(paths.size(), [&](std::size_t k) {
    labels[k] = with_image(paths[k], "load", [&] {
      const Sample s = read_container_file(paths[k]);
      const auto problems = validate_sample(s, geometry);
      if (!problems.empty()) throw ValidationError(problems.front());
      return s.mask.data;
    });
  });
  std::vector<std::uint8_t> all;
  std::vector<std::size_t> offset{0};
  for (const auto& l : labels) {
    all.insert(all.end(), l.begin(), l.end());
    offset.push_back(all.size());
  }
  const auto selected = stratified_select(all, rate, seed);

  std::vector<LabeledPixels> parts(paths.size());
  parallel_for(paths.size(), [&](std::size_t k) {
    const auto lo = std::lower_bound(selected.begin(), selected.end(), offset[k]);
    const auto hi = std::lower_bound(lo, selected.end(), offset[k + 1]);
    std::vector<std::size_t> local;
    local.reserve(static_cast<std::size_t>(hi - lo));
    for (auto it = lo; it != hi; ++it) local.push_back(*it - offset[k]);
    parts[k] = with_image(paths[k], "hypercolumn", [&] {
      const Sample s = read_container_file(paths[k]);
      return select_rows(build_dense_hypercolumn(s, geometry), local);
    });
  });
  return concat_hypercolumns(parts);
}

ModelPtr fit_roster_model(const std::string& name, const PixelMatrix& X,
                          std::span<const std::uint8_t> y, const ExperimentConfig& cfg,
                          std::uint64_t seed) {
  auto base = [&](ClassifierConfig c) {
    c.seed = seed;
    return fit_classifier(X, y, c);
  };
  switch (parse_kind(name)) {
    case ClassifierKind::LogisticRegression: return base(cfg.lr);
    case ClassifierKind::LinearSvc: return base(cfg.linear_svc);
    case ClassifierKind::RbfSvc: return base(cfg.svc);
    case ClassifierKind::RandomForest: return base(cfg.rf);
    case ClassifierKind::Voting: {
      VotingConfig v = cfg.voting;
      v.seed = seed;
      return fit_voting(X, y, v);
    }
    case ClassifierKind::Stacking: {
      StackingConfig s = cfg.stacking;
      s.seed = seed;
      return fit_stacking(X, y, s);
    }
  }
  throw InvalidArgument("unknown model '" + name + "'");
}

Mask predict_image(const Classifier& model, const Sample& sample, double threshold,
                   std::size_t block_rows) {
  const std::size_t h = sample.mask.height;
  const std::size_t w = sample.mask.width;
  if (sample.total_channels() != model.dimension()) {
    throw InvalidArgument("sample hypercolumn width " + std::to_string(sample.total_channels()) +
                          " does not match model dimension " + std::to_string(model.dimension()));
  }
  const PixelMatrix X = dense_features(sample, h, w);
  return Mask(h, w, predict_labels(model, X, threshold, block_rows));
}

ResultBundle run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  const Manifest manifest = load_manifest(cfg.manifest);
  if (const auto problems = validate_manifest(manifest); !problems.empty()) {
    std::string msg = "manifest failed validation (" + std::to_string(problems.size()) +
                      " problems): " + problems.front();
    throw ValidationError(msg);
  }
  if (cfg.n_train > manifest.train.size()) {
    throw InvalidArgument("N = " + std::to_string(cfg.n_train) + " exceeds the " +
                          std::to_string(manifest.train.size()) + " training images");
  }
  const HypercolumnConfig geometry = manifest_geometry(manifest);

  std::vector<std::string> roster;
  for (const auto& name : cfg.roster) {
    const std::string c = canonical_name(name);
    if (std::find(roster.begin(), roster.end(), c) != roster.end()) {
      throw InvalidArgument("model '" + c + "' listed twice");
    }
    roster.push_back(c);
  }

  std::filesystem::create_directories(cfg.out_dir);
  if (cfg.save_models) std::filesystem::create_directories(cfg.out_dir / "models");
  write_config(cfg, roster, geometry, cfg.out_dir / "config.tsv");

  ResultBundle bundle;
  for (const auto& name : roster) {
    ModelResults m;
    m.model = name;
    m.per_run.resize(cfg.runs);
    bundle.models.push_back(std::move(m));
  }
  std::ofstream params(cfg.out_dir / "models.tsv", std::ios::trunc);
  params << "run\tmodel\tparameters\n";

  for (std::size_t run = 0; run < cfg.runs; ++run) {
    const auto subset = sample_training_subset(manifest, cfg.n_train, run, cfg.base_seed);
    LabeledPixels train;
    try {
      train = build_sparse_training_set(subset, geometry, cfg.subsample_rate,
                                        stage_seed(cfg.base_seed, run, "subsample"));
    } catch (const ExperimentError& e) {
      throw ExperimentError(run, "", e.image(), e.stage(), e.cause());
    }

    std::vector<ModelPtr> models;
    for (std::size_t m = 0; m < roster.size(); ++m) {
      try {
        models.push_back(fit_roster_model(roster[m], train.features, train.labels, cfg,
                                          stage_seed(cfg.base_seed, run, "fit", roster[m])));
        if (cfg.save_models) {
          save_model_file(*models.back(), cfg.out_dir / "models" /
                                              ("run" + std::to_string(run) + "_" + roster[m] +
                                               ".hcm"));
        }
      } catch (const std::exception& e) {
        throw ExperimentError(run, roster[m], "", "fit", e.what());
      }
      params << run << '\t' << roster[m] << '\t' << models.back()->parameter_count() << '\n';
      if (run == 0) bundle.models[m].parameters = models.back()->parameter_count();
    }

    std::vector<ImageResult> rows;
    for (const auto& path : manifest.test) {
      const Sample sample = with_image(path, "load", [&] { return read_container_file(path); });
      const PixelMatrix X =
          with_image(path, "hypercolumn", [&] { return dense_features(sample, geometry.input_h,
                                                                      geometry.input_w); });
      for (std::size_t m = 0; m < roster.size(); ++m) {
        ImageResult r;
        try {
          const auto pred = predict_labels(*models[m], X, cfg.threshold, cfg.block_rows);
          r.counts = confusion_counts(pred, sample.mask.data);
          r.metrics = segmentation_metrics(r.counts);
        } catch (const std::exception& e) {
          throw ExperimentError(run, roster[m], sample.image_id, "predict", e.what());
        }
        r.run = run;
        r.model = roster[m];
        r.image_id = sample.image_id;
        bundle.models[m].per_run[run].push_back(r.metrics);
        rows.push_back(std::move(r));
      }
    }
    std::ofstream out(cfg.out_dir / ("run_" + std::to_string(run) + ".tsv"), std::ios::trunc);
    write_image_rows(out, rows);
    if (!out) throw std::ios_base::failure("cannot write results for run " + std::to_string(run));
    bundle.images.insert(bundle.images.end(), rows.begin(), rows.end());
  }

  for (auto& m : bundle.models) m.summary = aggregate_runs(m.per_run);
  write_summary(bundle, cfg.out_dir);
  return bundle;
}

}  // namespace hypercol
