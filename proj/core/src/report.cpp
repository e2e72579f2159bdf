#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hypercol/error.hpp"
#include "hypercol/harness.hpp"

namespace hypercol {
namespace {

constexpr const char* kRowHeader =
    "run\tmodel\timage_id\ttp\tfp\ttn\tfn\taccuracy\tprecision\trecall\tjaccard\tdice";

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw FormatError(where + ": bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw FormatError(where + ": bad integer '" + s + "'");
  return v;
}

std::string pad(const std::string& s, std::size_t width) {
  // Width counts code points so "±" lines up.
  std::size_t visible = 0;
  for (const unsigned char c : s) visible += (c & 0xC0) != 0x80;
  return s + std::string(width > visible ? width - visible : 0, ' ');
}

}  // namespace

void write_image_rows(std::ostream& out, std::span<const ImageResult> rows) {
  out << kRowHeader << '\n';
  for (const auto& r : rows) {
    out << r.run << '\t' << r.model << '\t' << r.image_id << '\t' << r.counts.tp << '\t'
        << r.counts.fp << '\t' << r.counts.tn << '\t' << r.counts.fn;
    for (std::size_t k = 0; k < MetricVector::kCount; ++k) out << '\t' << full(r.metrics[k]);
    out << '\n';
  }
}

ResultBundle load_bundle(const std::filesystem::path& dir) {
  std::map<std::size_t, std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) {
    throw InvalidArgument("'" + dir.string() + "' is not a directory");
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_", 0) != 0 || entry.path().extension() != ".tsv") continue;
    const std::string index = name.substr(4, name.size() - 8);
    files[parse_u64(index, name)] = entry.path();
  }
  if (files.empty()) throw InvalidArgument("no run_<r>.tsv files in '" + dir.string() + "'");

  ResultBundle bundle;
  std::map<std::string, std::size_t> slot;
  const std::size_t runs = files.rbegin()->first + 1;
  for (const auto& [run, path] : files) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || line != kRowHeader) {
      throw FormatError(path.string() + ": missing or unexpected header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = path.filename().string() + ":" + std::to_string(line_no);
      const auto f = split_tabs(line);
      if (f.size() != 12) throw FormatError(where + ": expected 12 fields");
      ImageResult r;
      r.run = static_cast<std::size_t>(parse_u64(f[0], where));
      if (r.run != run) throw FormatError(where + ": run column does not match file name");
      r.model = f[1];
      r.image_id = f[2];
      r.counts = {parse_u64(f[3], where), parse_u64(f[4], where), parse_u64(f[5], where),
                  parse_u64(f[6], where)};
      for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
        r.metrics[k] = parse_double(f[7 + k], where);
      }
      auto [it, inserted] = slot.try_emplace(r.model, bundle.models.size());
      if (inserted) {
        ModelResults m;
        m.model = r.model;
        m.per_run.resize(runs);
        bundle.models.push_back(std::move(m));
      }
      bundle.models[it->second].per_run[run].push_back(r.metrics);
      bundle.images.push_back(std::move(r));
    }
  }
  for (auto& m : bundle.models) {
    std::erase_if(m.per_run, [](const auto& v) { return v.empty(); });
    m.summary = aggregate_runs(m.per_run);
  }

  std::ifstream params(dir / "models.tsv");
  std::string line;
  if (params && std::getline(params, line)) {
    while (std::getline(params, line)) {
      const auto f = split_tabs(line);
      if (f.size() != 3 || f[0] != "0") continue;
      if (const auto it = slot.find(f[1]); it != slot.end()) {
        bundle.models[it->second].parameters =
            static_cast<std::size_t>(parse_u64(f[2], "models.tsv"));
      }
    }
  }
  return bundle;
}

Comparison compare_models(const ResultBundle& bundle, const std::string& candidate,
                          const std::string& baseline) {
  Comparison c;
  c.candidate = candidate;
  c.baseline = baseline;
  std::map<std::pair<std::size_t, std::string>, double> base_dice;
  for (const auto& r : bundle.images) {
    if (r.model == baseline) base_dice[{r.run, r.image_id}] = r.metrics.dice;
  }
  std::vector<double> a, b;
  for (const auto& r : bundle.images) {
    if (r.model != candidate) continue;
    const auto it = base_dice.find({r.run, r.image_id});
    if (it == base_dice.end()) {
      throw InvalidArgument("model '" + baseline + "' has no result for run " +
                            std::to_string(r.run) + " image " + r.image_id);
    }
    a.push_back(r.metrics.dice);
    b.push_back(it->second);
  }
  if (a.size() != base_dice.size() || a.empty()) {
    throw InvalidArgument("models '" + candidate + "' and '" + baseline +
                          "' were not evaluated on the same images");
  }
  c.pairs = a.size();
  try {
    c.wilcoxon = wilcoxon_signed_rank(a, b);
  } catch (const DegenerateSampleError&) {
    c.wilcoxon.reset();
  }
  const double base_mean = bundle.model(baseline).summary.mean.dice;
  c.gain_percent = base_mean == 0.0
                       ? std::nan("")
                       : relative_gain(bundle.model(candidate).summary.mean.dice, base_mean);
  return c;
}

std::string format_summary(const ResultBundle& bundle) {
  std::size_t name_width = 5;
  for (const auto& m : bundle.models) name_width = std::max(name_width, m.model.size());
  std::ostringstream out;
  out << pad("model", name_width + 2);
  for (const auto name : MetricVector::kNames) out << pad(std::string(name), 15);
  out << "runs\n";
  for (const auto& m : bundle.models) {
    out << pad(m.model, name_width + 2);
    for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
      out << pad(fixed2(m.summary.mean[k]) + " ± " + fixed2(m.summary.stddev[k]), 15);
    }
    out << m.summary.runs() << '\n';
  }
  return out.str();
}

std::string format_comparison(const Comparison& c) {
  std::ostringstream out;
  out << c.candidate << " vs " << c.baseline << ": pairs " << c.pairs << ", dice gain ";
  if (std::isnan(c.gain_percent)) {
    out << "n/a (baseline mean dice is 0)";
  } else {
    out << fixed2(c.gain_percent) << "%";
  }
  if (c.wilcoxon) {
    char p[32];
    std::snprintf(p, sizeof p, "%.3g", c.wilcoxon->p_value);
    out << ", wilcoxon W = " << fixed2(c.wilcoxon->statistic) << ", p = " << p << " ("
        << (c.wilcoxon->exact ? "exact" : "normal approximation") << ", n_eff "
        << c.wilcoxon->n_effective << ")";
  } else {
    out << ", wilcoxon: degenerate sample (all paired differences are zero)";
  }
  return out.str();
}

void write_summary(const ResultBundle& bundle, const std::filesystem::path& dir) {
  std::ofstream tsv(dir / "summary.tsv", std::ios::trunc);
  tsv << "model\truns\tparameters";
  for (const auto name : MetricVector::kNames) tsv << '\t' << name << "_mean\t" << name << "_std";
  tsv << '\n';
  for (const auto& m : bundle.models) {
    tsv << m.model << '\t' << m.summary.runs() << '\t' << m.parameters;
    for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
      tsv << '\t' << full(m.summary.mean[k]) << '\t' << full(m.summary.stddev[k]);
    }
    tsv << '\n';
  }
  std::ofstream txt(dir / "summary.txt", std::ios::trunc);
  txt << format_summary(bundle);
  if (!tsv || !txt) throw std::ios_base::failure("cannot write summary in '" + dir.string() + "'");
}

}  // namespace hypercol
