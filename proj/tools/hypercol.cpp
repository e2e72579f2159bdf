#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "hypercol/error.hpp"
#include "hypercol/harness.hpp"
#include "hypercol/model_io.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/synthetic.hpp"

namespace {

using namespace hypercol;

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    std::string item = s.substr(start, end - start);
    if (!item.empty()) out.push_back(item);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

// Binary PGM with foreground 255 so the mask is viewable as-is.
void write_pgm(const Mask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  for (const auto v : mask.data) out.put(v ? static_cast<char>(255) : '\0');
  if (!out) throw std::ios_base::failure("write to '" + path.string() + "' failed");
}

int cmd_validate(const std::filesystem::path& manifest_path) {
  const Manifest m = load_manifest(manifest_path);
  const auto problems = validate_manifest(m);
  for (const auto& p : problems) std::cout << p << '\n';
  if (problems.empty()) {
    const auto g = manifest_geometry(m);
    std::cout << "ok: " << m.train.size() << " train, " << m.test.size() << " test, "
              << g.input_h << 'x' << g.input_w << ", " << g.expected_channels << " channels\n";
    return 0;
  }
  std::cout << problems.size() << " problem(s)\n";
  return 1;
}

int cmd_report(const std::filesystem::path& dir, const std::vector<std::string>& compare) {
  const ResultBundle bundle = load_bundle(dir);
  write_summary(bundle, dir);
  std::cout << format_summary(bundle);
  if (compare.empty()) return 0;
  std::ofstream tsv(dir / "comparisons.tsv", std::ios::trunc);
  tsv << "candidate\tbaseline\tpairs\tdice_gain_percent\twilcoxon_w\tp_value\tmethod\n";
  std::cout << '\n';
  for (const auto& spec : compare) {
    const auto parts = split_list(spec, ':');
    if (parts.size() != 2) throw InvalidArgument("--compare expects A:B, got '" + spec + "'");
    const std::string a(kind_name(parse_kind(parts[0])));
    const std::string b(kind_name(parse_kind(parts[1])));
    const Comparison c = compare_models(bundle, a, b);
    std::cout << format_comparison(c) << '\n';
    char gain[32];
    std::snprintf(gain, sizeof gain, "%.2f", c.gain_percent);
    tsv << a << '\t' << b << '\t' << c.pairs << '\t' << gain << '\t';
    if (c.wilcoxon) {
      char p[40];
      std::snprintf(p, sizeof p, "%.17g", c.wilcoxon->p_value);
      tsv << c.wilcoxon->statistic << '\t' << p << '\t'
          << (c.wilcoxon->exact ? "exact" : "normal") << '\n';
    } else {
      tsv << "NA\tNA\tdegenerate\n";
    }
  }
  return 0;
}

int cmd_params(const std::filesystem::path& path) {
  const ModelPtr model = load_model_file(path);
  std::cout << kind_name(model->kind()) << '\t' << "d=" << model->dimension() << '\t'
            << "parameters=" << count_parameters(*model) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-hypercolumn segmentation toolkit"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = HYPERCOL_THREADS or auto)");

  std::string validate_manifest_path;
  auto* validate = app.add_subcommand("validate", "Check a manifest and every container it lists");
  validate->add_option("manifest", validate_manifest_path)->required();

  ExperimentConfig exp;
  std::string models = "LR,RF,SVC,stacking,voting";
  auto* run = app.add_subcommand("run", "Run the Monte Carlo experiment");
  run->add_option("--manifest", exp.manifest)->required();
  run->add_option("--models", models, "Comma-separated roster")->capture_default_str();
  run->add_option("--n", exp.n_train, "Training images per run")->capture_default_str();
  run->add_option("--rate", exp.subsample_rate, "Stratified subsampling rate")
      ->capture_default_str();
  run->add_option("--runs", exp.runs)->capture_default_str();
  run->add_option("--seed", exp.base_seed)->capture_default_str();
  run->add_option("--threshold", exp.threshold)->capture_default_str();
  run->add_option("--block-rows", exp.block_rows)->capture_default_str();
  run->add_option("--out", exp.out_dir)->required();
  bool no_models = false;
  run->add_flag("--no-save-models", no_models, "Skip writing trained models");

  std::string report_dir;
  std::vector<std::string> compare;
  auto* report = app.add_subcommand("report", "Summarise a results directory");
  report->add_option("dir", report_dir)->required();
  report->add_option("--compare", compare, "Model pair A:B (repeatable)");

  std::string params_file;
  auto* params = app.add_subcommand("params", "Print a saved model's parameter count");
  params->add_option("model", params_file)->required();

  std::string model_file, sample_file, mask_file;
  double threshold = 0.5;
  std::size_t block_rows = kDefaultBlockRows;
  auto* predict = app.add_subcommand("predict", "Predict a mask (PGM) for one container");
  predict->add_option("--model", model_file)->required();
  predict->add_option("--sample", sample_file)->required();
  predict->add_option("--out", mask_file)->required();
  predict->add_option("--threshold", threshold)->capture_default_str();
  predict->add_option("--block-rows", block_rows)->capture_default_str();

  SyntheticConfig synth_cfg;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "Write a synthetic blob dataset and manifest");
  synth->add_option("--out", synth_dir)->required();
  synth->add_option("--images", synth_cfg.images)->capture_default_str();
  synth->add_option("--train", synth_cfg.train)->capture_default_str();
  synth->add_option("--size", synth_cfg.size)->capture_default_str();
  synth->add_option("--signal", synth_cfg.signal)->capture_default_str();
  synth->add_option("--noise", synth_cfg.noise)->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (threads != 0) set_thread_count(threads);

  try {
    if (*validate) return cmd_validate(validate_manifest_path);
    if (*run) {
      exp.roster = split_list(models, ',');
      exp.save_models = !no_models;
      const ResultBundle bundle = run_experiment(exp);
      std::cout << format_summary(bundle);
      return 0;
    }
    if (*report) return cmd_report(report_dir, compare);
    if (*params) return cmd_params(params_file);
    if (*predict) {
      const ModelPtr model = load_model_file(model_file);
      const Sample sample = read_container_file(sample_file);
      write_pgm(predict_image(*model, sample, threshold, block_rows), mask_file);
      return 0;
    }
    if (*synth) {
      std::cout << write_synthetic_dataset(synth_cfg, synth_dir).string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
