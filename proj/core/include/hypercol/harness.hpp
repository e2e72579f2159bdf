#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hypercol/classifiers.hpp"
#include "hypercol/ensembles.hpp"
#include "hypercol/feature_io.hpp"
#include "hypercol/hypercolumn.hpp"
#include "hypercol/metrics.hpp"

namespace hypercol {

/// Dataset listing. Text format, one directive per line, '#' starts a comment:
///   train <path>
///   test <path>
///   size <H> <W>          optional input resolution echo
///   taps <c0> <c1> ...    optional per-tap channel counts echo
/// Relative paths resolve against the manifest's directory.
struct Manifest {
  std::vector<std::filesystem::path> train;
  std::vector<std::filesystem::path> test;
  std::optional<std::pair<std::size_t, std::size_t>> input_size;
  std::vector<std::size_t> tap_channels;
};

/// Throws FormatError (with the line number) on an unknown directive or a
/// malformed line.
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest with paths relative to base_dir where possible.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Hypercolumn geometry for a manifest: the echoed size/taps when present,
/// otherwise the shape of the first training container.
HypercolumnConfig manifest_geometry(const Manifest& manifest);

/// Checks split disjointness, file existence, container decoding and
/// validate_sample() against manifest_geometry(). One line per problem,
/// prefixed with the offending path.
std::vector<std::string> validate_manifest(const Manifest& manifest);

/// n training paths drawn uniformly without replacement, in draw order.
/// The draw depends only on (base_seed, run_index, n) and the path list.
/// Throws InvalidArgument when n is 0 or exceeds the training-set size.
std::vector<std::filesystem::path> sample_training_subset(const Manifest& manifest,
                                                          std::size_t n,
                                                          std::size_t run_index,
                                                          std::uint64_t base_seed);

struct ExperimentConfig {
  std::filesystem::path manifest;
  /// Model names as accepted by parse_kind: LR, LinearSVC, SVC, RF, voting,
  /// stacking. Order is the reporting order.
  std::vector<std::string> roster;
  std::size_t n_train = 10;
  double subsample_rate = 0.1;
  std::size_t runs = 5;
  std::uint64_t base_seed = 42;
  double threshold = 0.5;
  std::filesystem::path out_dir;
  std::size_t block_rows = kDefaultBlockRows;
  /// Write each trained model under out_dir/models.
  bool save_models = true;

  /// Per-kind base configurations; seeds are replaced by derived ones.
  ClassifierConfig lr = ClassifierConfig::defaults(ClassifierKind::LogisticRegression);
  ClassifierConfig linear_svc = ClassifierConfig::defaults(ClassifierKind::LinearSvc);
  ClassifierConfig svc = ClassifierConfig::defaults(ClassifierKind::RbfSvc);
  ClassifierConfig rf = ClassifierConfig::defaults(ClassifierKind::RandomForest);
  VotingConfig voting = VotingConfig::defaults();
  StackingConfig stacking = StackingConfig::defaults();

  void check() const;
};

/// Raised when a stage of run_experiment fails; the message names the run,
/// model, image and stage that were being processed.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::size_t run, std::string model, std::string image, std::string stage,
                  const std::string& cause);

  std::size_t run() const { return run_; }
  const std::string& model() const { return model_; }
  const std::string& image() const { return image_; }
  const std::string& stage() const { return stage_; }
  const std::string& cause() const { return cause_; }

 private:
  std::size_t run_;
  std::string model_;
  std::string image_;
  std::string stage_;
  std::string cause_;
};

struct ImageResult {
  std::size_t run = 0;
  std::string model;
  std::string image_id;
  ConfusionCounts counts;
  MetricVector metrics;
};

struct ModelResults {
  std::string model;
  /// per_run[r][i]: metrics of test image i in run r.
  std::vector<std::vector<MetricVector>> per_run;
  RunSummary summary;
  std::size_t parameters = 0;
};

struct ResultBundle {
  std::vector<ImageResult> images;
  std::vector<ModelResults> models;

  const ModelResults& model(const std::string& name) const;
};

/// Derived seed for one (run, stage, model) stream.
std::uint64_t stage_seed(std::uint64_t base_seed, std::size_t run, std::string_view stage,
                         std::string_view model = {});

/// Sparse training hypercolumn for a set of containers: equal to
/// stratified_subsample(concat_hypercolumns(dense...), rate, seed) but
/// built with two passes so only the selected rows plus one dense image are
/// resident at a time.
LabeledPixels build_sparse_training_set(std::span<const std::filesystem::path> paths,
                                        const HypercolumnConfig& geometry, double rate,
                                        std::uint64_t seed);

/// Fits one roster entry with the configuration held in cfg.
ModelPtr fit_roster_model(const std::string& name, const PixelMatrix& X,
                          std::span<const std::uint8_t> y, const ExperimentConfig& cfg,
                          std::uint64_t seed);

/// Scores every pixel of the sample in blocks and thresholds into a mask of
/// the sample's resolution. Throws InvalidArgument on a dimension mismatch.
Mask predict_image(const Classifier& model, const Sample& sample, double threshold = 0.5,
                   std::size_t block_rows = kDefaultBlockRows);

/// Runs every configured run, writes results into cfg.out_dir and returns
/// them. Output files:
///   config.tsv          configuration echo
///   run_<r>.tsv         per-image rows for run r (full precision)
///   summary.tsv         per-model mean and std of every metric
///   summary.txt         the same table as "mean ± std" with 2 decimals
///   models/run<r>_<model>.hcm
ResultBundle run_experiment(const ExperimentConfig& cfg);

/// Rebuilds a bundle from the run_<r>.tsv files of an output directory.
ResultBundle load_bundle(const std::filesystem::path& dir);

struct Comparison {
  std::string candidate;
  std::string baseline;
  /// Empty when the test was degenerate (all differences zero).
  std::optional<WilcoxonResult> wilcoxon;
  double gain_percent = 0.0;
  std::size_t pairs = 0;
};

/// Wilcoxon on per-image Dice pooled over runs (paired by run and image)
/// and relative gain of the across-run mean Dice.
Comparison compare_models(const ResultBundle& bundle, const std::string& candidate,
                          const std::string& baseline);

/// Writes summary.tsv and summary.txt into dir.
void write_summary(const ResultBundle& bundle, const std::filesystem::path& dir);

/// Human-readable table: one row per model, "mean ± std" per metric.
std::string format_summary(const ResultBundle& bundle);
std::string format_comparison(const Comparison& c);

/// Per-image result rows as tab-separated text with a header line.
void write_image_rows(std::ostream& out, std::span<const ImageResult> rows);

}  // namespace hypercol
