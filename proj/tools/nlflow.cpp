// nlflow: command-line front end for segmentation, scheme comparison,
// timing sweeps, phantom synthesis and metrics.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlflow/brats.hpp"
#include "nlflow/config.hpp"
#include "nlflow/errors.hpp"
#include "nlflow/io.hpp"
#include "nlflow/metrics.hpp"
#include "nlflow/phantom.hpp"
#include "nlflow/pipeline.hpp"
#include "nlflow/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nlflow;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInternal = 1;

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::input_range: return 3;
    case ErrorCategory::parameter: return 4;
    case ErrorCategory::dimension: return 5;
    case ErrorCategory::degenerate: return 6;
    case ErrorCategory::contract: return 7;
    case ErrorCategory::format: return 8;
    case ErrorCategory::solver: return 9;
    case ErrorCategory::io: return 10;
  }
  return kExitInternal;
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
};

void add_config_options(CLI::App* app, ConfigArgs& args) {
  app->add_option("--config", args.path, "INI config file")->check(CLI::ExistingFile);
  app->add_option("--set", args.sets, "override as section.key=value (repeatable)");
  for (const auto& key : config_keys()) {
    const std::string name = key.section + "." + key.name;
    app->add_option_function<std::string>(
           "--" + key.name, [&args, name](const std::string& v) { args.flags[name] = v; }, key.help)
        ->group("Parameters");
  }
}

Config build_config(const ConfigArgs& args) {
  Config c = args.path.empty() ? Config{} : load_config(args.path);
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(ErrorCategory::parameter, "--set expects key=value, got '" + s + "'");
    apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : args.flags) apply_setting(c, k, v);
  c.validate();
  return c;
}

struct PhantomArgs {
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t slices = 0;
  PhantomSpec spec;
};

void add_phantom_options(CLI::App* app, PhantomArgs& a, bool with_seed) {
  app->add_option("--rows", a.rows, "phantom rows")->capture_default_str()->group("Phantom");
  app->add_option("--cols", a.cols, "phantom columns")->capture_default_str()->group("Phantom");
  app->add_option("--slices", a.slices, "phantom slices; 0 for a 2D image")->capture_default_str()->group("Phantom");
  app->add_option("--blobs", a.spec.blobs, "blob count")->capture_default_str()->group("Phantom");
  app->add_option("--fg", a.spec.foreground, "foreground mean")->capture_default_str()->group("Phantom");
  app->add_option("--bg", a.spec.background, "background mean")->capture_default_str()->group("Phantom");
  app->add_option("--sigma", a.spec.noise_sigma, "noise standard deviation")->capture_default_str()->group("Phantom");
  if (with_seed) app->add_option("--seed", a.spec.seed, "generator seed")->capture_default_str()->group("Phantom");
}

PhantomSpec phantom_spec(const PhantomArgs& a) {
  PhantomSpec s = a.spec;
  s.shape = a.slices == 0 ? Shape(a.rows, a.cols) : Shape(a.rows, a.cols, a.slices);
  return s;
}

void emit(const json& j, const std::string& report_path) {
  const std::string text = j.dump(2) + "\n";
  if (report_path.empty()) std::cout << text;
  else io::write_file(report_path, text);
}

/// Quantized fields go to PGM with maxval Q-1, so level indices are stored exactly.
void save_output_field(const fs::path& path, const GridField& u, const Config& c) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".pgm" && c.pipeline.scheme == Scheme::quantized && c.params.Q <= 65536)
    io::write_pgm(path, u, static_cast<std::int64_t>(c.params.Q - 1));
  else
    io::save_field(path, u);
}

/// f > 1/delta with each run's delta, restricted to the brain region when one is given.
SegmentationMask naive_mask(const GridField& f, const SegmentResult& r,
                            const std::optional<SegmentationMask>& brain = std::nullopt) {
  SegmentationMask out(f.shape());
  if (f.shape().rank() == 2 || r.runs.size() == 1) {
    out = naive_threshold(f, r.runs.front().delta);
  } else {
    for (const auto& run : r.runs)
      if (!run.skipped) insert_slice(out, run.slice, naive_threshold(extract_slice(f, run.slice), run.delta));
  }
  if (brain)
    for (std::size_t k = 0; k < out.size(); ++k) out.set(k, out[k] && (*brain)[k]);
  return out;
}

/// Parameters for a direct solver run: delta and tau resolved as in the pipeline.
FlowParams pipeline_params(const GridField& f, const Config& c) {
  const double delta = c.pipeline.auto_delta
                           ? estimate_delta(f, default_brain_mask(f), c.pipeline.regression)
                           : c.params.delta;
  return resolve_params(c.params, delta, c.pipeline);
}

// ---- segment ---------------------------------------------------------------

struct SegmentArgs {
  std::string input;
  std::string out_mask;
  std::string out_field;
  std::string truth;
  std::string brain;
  std::string report;
  bool record_energy = false;
  std::optional<std::uint64_t> seed;
  ConfigArgs config;
  PhantomArgs phantom;
};

json segment_one(const GridField& f, const Config& c, const std::optional<SegmentationMask>& truth,
                 const std::optional<SegmentationMask>& brain, bool record_energy, SegmentResult* keep) {
  PipelineOptions opt = c.pipeline;
  opt.record_energy = record_energy;
  if (brain) opt.brain_mask = *brain;
  SegmentResult r = segment(f, c.params, opt);
  json j;
  j["scheme"] = scheme_name(opt.scheme);
  j["mode"] = mode_name(opt.mode);
  j["shape"] = report::shape_json(f.shape());
  j["config"] = report::config_json(c);
  j["result"] = report::segment_json(r);
  if (truth) {
    if (truth->shape() != f.shape()) fail(ErrorCategory::dimension, "truth mask shape differs from the input");
    j["metrics"] = report::metrics_json(confusion(r.mask, *truth));
    bool any_run = false;
    for (const auto& run : r.runs) any_run = any_run || !run.skipped;
    if (any_run) j["naive_metrics"] = report::metrics_json(confusion(naive_mask(f, r, brain), *truth));
  }
  j["timings"] = report::segment_timings_json(r);
  if (keep) *keep = std::move(r);
  return j;
}

int run_segment(const SegmentArgs& a) {
  const Config c = build_config(a.config);
  GridField f;
  std::optional<SegmentationMask> truth;
  json phantom;
  if (a.seed) {
    if (!a.input.empty()) fail(ErrorCategory::parameter, "give either an input file or --seed, not both");
    PhantomSpec spec = phantom_spec(a.phantom);
    spec.seed = *a.seed;
    Phantom ph = make_phantom(spec);
    f = std::move(ph.image);
    truth = std::move(ph.truth);
    phantom = report::phantom_json(spec);
  } else {
    if (a.input.empty()) fail(ErrorCategory::parameter, "segment needs an input file or --seed");
    f = io::load_field(a.input);
  }
  if (!a.truth.empty()) truth = io::load_mask(a.truth);
  std::optional<SegmentationMask> brain;
  if (!a.brain.empty()) brain = io::load_mask(a.brain);

  SegmentResult r;
  json j = segment_one(f, c, truth, brain, a.record_energy, &r);
  j["command"] = "segment";
  if (a.seed) j["phantom"] = phantom;
  else j["input"] = a.input;
  if (!a.out_mask.empty()) io::save_mask(a.out_mask, r.mask);
  if (!a.out_field.empty()) save_output_field(a.out_field, r.field, c);
  emit(j, a.report);
  return 0;
}

// ---- compare-schemes -------------------------------------------------------

struct CompareArgs {
  std::string input;
  std::string report;
  std::optional<std::uint64_t> seed;
  ConfigArgs config;
  PhantomArgs phantom;
};

int run_compare(const CompareArgs& a) {
  const Config c = build_config(a.config);
  GridField f;
  json j;
  if (a.seed) {
    PhantomSpec spec = phantom_spec(a.phantom);
    spec.seed = *a.seed;
    f = make_phantom(spec).image;
    j["phantom"] = report::phantom_json(spec);
  } else {
    if (a.input.empty()) fail(ErrorCategory::parameter, "compare-schemes needs an input file or --seed");
    f = io::load_field(a.input);
    j["input"] = a.input;
  }
  const FlowParams p = pipeline_params(f, c);
  const SchemeComparison cmp = compare_schemes(f, p);
  j["command"] = "compare-schemes";
  j["params"] = report::params_json(p);
  j["comparison"] = report::comparison_json(cmp);
  j["timings"] = {{"explicit", report::stats_timings_json(cmp.explicit_stats)},
                  {"yosida", report::stats_timings_json(cmp.yosida_stats)}};
  emit(j, a.report);
  return 0;
}

// ---- bench-sweep -----------------------------------------------------------

struct BenchArgs {
  std::string input;
  std::vector<double> rhos{5, 30};
  std::vector<std::size_t> qs{256};
  std::vector<std::string> schemes{"quantized", "explicit"};
  std::string csv;
  std::string report;
  std::size_t jobs = 1;
  std::uint64_t seed = 1;
  ConfigArgs config;
  PhantomArgs phantom;
};

int run_bench(const BenchArgs& a) {
  const Config c = build_config(a.config);
  GridField f;
  json j;
  if (a.input.empty()) {
    PhantomSpec spec = phantom_spec(a.phantom);
    spec.seed = a.seed;
    f = make_phantom(spec).image;
    j["phantom"] = report::phantom_json(spec);
  } else {
    f = io::load_field(a.input);
    j["input"] = a.input;
  }
  std::vector<Scheme> schemes;
  for (const auto& s : a.schemes) schemes.push_back(parse_scheme(s));
  SweepOptions so;
  so.jobs = a.jobs;
  so.quantized = c.pipeline.quantized;
  const FlowParams p = pipeline_params(f, c);
  const auto records = timing_sweep(f, p, a.rhos, a.qs, schemes, so);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) fail(ErrorCategory::io, "cannot open '" + a.csv + "' for writing");
    write_bench_csv(out, records);
  }
  j["command"] = "bench-sweep";
  j["params"] = report::params_json(p);
  j["timings"] = report::bench_json(records);
  emit(j, a.report);
  return 0;
}

// ---- make-phantom ----------------------------------------------------------

struct PhantomCmdArgs {
  std::string out;
  std::string truth;
  std::string report;
  PhantomArgs phantom;
};

int run_make_phantom(const PhantomCmdArgs& a) {
  const PhantomSpec spec = phantom_spec(a.phantom);
  const Phantom ph = make_phantom(spec);
  io::save_field(a.out, ph.image);
  if (!a.truth.empty()) io::save_mask(a.truth, ph.truth);
  json j;
  j["command"] = "make-phantom";
  j["phantom"] = report::phantom_json(spec);
  j["foreground"] = ph.truth.count();
  j["image"] = a.out;
  if (!a.truth.empty()) j["truth"] = a.truth;
  emit(j, a.report);
  return 0;
}

// ---- metrics ---------------------------------------------------------------

struct MetricsArgs {
  std::string pred;
  std::string truth;
  std::string report;
};

int run_metrics(const MetricsArgs& a) {
  const SegmentationMask pred = io::load_mask(a.pred);
  const SegmentationMask truth = io::load_mask(a.truth);
  json j;
  j["command"] = "metrics";
  j["pred"] = a.pred;
  j["truth"] = a.truth;
  j["metrics"] = report::metrics_json(confusion(pred, truth));
  emit(j, a.report);
  return 0;
}

// ---- batch -----------------------------------------------------------------

struct BatchArgs {
  std::string dir;
  std::string out_dir;
  std::string report;
  std::size_t jobs = 1;
  ConfigArgs config;
};

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  const std::string stem = p.stem().string();
  const bool derived = stem.size() >= 5 && stem.compare(stem.size() - 5, 5, "_mask") == 0;
  return (ext == ".pgm" || ext == ".rvol") && !derived;
}

int run_batch(const BatchArgs& a) {
  const Config c = build_config(a.config);
  if (a.jobs < 1) fail(ErrorCategory::parameter, "--jobs >= 1 required");
  if (!fs::is_directory(a.dir)) fail(ErrorCategory::io, "'" + a.dir + "' is not a directory");
  fs::create_directories(a.out_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.dir))
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<json> items(files.size());
  std::vector<std::optional<ErrorCategory>> failures(files.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const fs::path& in = files[i];
      try {
        const GridField f = io::load_field(in);
        SegmentResult r;
        json j = segment_one(f, c, std::nullopt, std::nullopt, false, &r);
        const fs::path mask_path = fs::path(a.out_dir) / (in.stem().string() + "_mask" + in.extension().string());
        io::save_mask(mask_path, r.mask);
        j["input"] = in.string();
        j["mask"] = mask_path.string();
        items[i] = std::move(j);
      } catch (const Error& e) {
        items[i] = {{"input", in.string()}, {"error", e.what()}, {"category", category_name(e.category())}};
        failures[i] = e.category();
      }
    }
  };
  const std::size_t workers = std::min(a.jobs, std::max<std::size_t>(files.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  json j;
  j["command"] = "batch";
  j["directory"] = a.dir;
  j["files"] = items;
  std::size_t failed = 0;
  std::optional<ErrorCategory> first;
  for (const auto& f : failures)
    if (f) {
      ++failed;
      if (!first) first = f;
    }
  j["failed"] = failed;
  emit(j, a.report);
  return first ? exit_code(*first) : 0;
}

// ---- brats-table -----------------------------------------------------------

struct BratsArgs {
  std::string dir;
  std::string table = "p";
  std::vector<double> p_list{2.0, 1.0, 0.5};
  std::string report;
  ConfigArgs config;
};

struct TableRow {
  std::string label;
  std::optional<double> reference_dice;
  std::vector<MetricsReport> per_case;
};

int run_brats(const BratsArgs& a) {
  const Config base = build_config(a.config);
  if (a.table != "p" && a.table != "dims") fail(ErrorCategory::parameter, "--table must be p or dims");

  // Published dataset-level DICE values the rows are compared against.
  const std::map<std::string, double> reference_p = {
      {"naive", 0.5299}, {"p=2", 0.6484}, {"p=1", 0.7013}, {"p=0.5", 0.7276}};
  const std::map<std::string, double> reference_dims = {{"naive", 0.6393}, {"2d", 0.8308}, {"3d", 0.9125}};

  std::vector<std::pair<std::string, Config>> runs;
  if (a.table == "p") {
    for (double p : a.p_list) {
      Config c = base;
      c.params.p = p;
      c.validate();
      std::ostringstream label;
      label << "p=" << p;
      runs.emplace_back(label.str(), c);
    }
  } else {
    Config c2 = base, c3 = base;
    c2.pipeline.mode = SegmentMode::per_slice;
    c3.pipeline.mode = SegmentMode::volume;
    runs.emplace_back("2d", c2);
    runs.emplace_back("3d", c3);
  }
  const auto& refs = a.table == "p" ? reference_p : reference_dims;

  std::vector<TableRow> rows;
  rows.push_back({"naive", refs.at("naive"), {}});
  for (const auto& [label, c] : runs) {
    TableRow row{label, std::nullopt, {}};
    if (auto it = refs.find(label); it != refs.end()) row.reference_dice = it->second;
    rows.push_back(row);
  }

  io::BratsReader reader(a.dir);
  json cases = json::array();
  while (auto item = reader.next()) {
    json cj = {{"id", item->id}};
    for (std::size_t i = 0; i < runs.size(); ++i) {
      PipelineOptions opt = runs[i].second.pipeline;
      const SegmentResult r = segment(item->volume, runs[i].second.params, opt);
      rows[i + 1].per_case.push_back(confusion(r.mask, item->truth));
      if (i == 0) rows[0].per_case.push_back(confusion(naive_mask(item->volume, r), item->truth));
    }
    cases.push_back(cj);
  }
  for (const auto& w : reader.warnings()) std::clog << "warning: " << w << "\n";

  json table = json::array();
  for (const auto& row : rows) {
    const AggregateMetrics agg = aggregate(row.per_case);
    json rj = {{"label", row.label}, {"metrics", report::aggregate_json(agg)}};
    rj["reference_dice"] = report::optional_number(row.reference_dice);
    if (row.reference_dice && agg.micro.dice) rj["micro_dice_delta"] = *agg.micro.dice - *row.reference_dice;
    if (row.reference_dice && agg.macro.dice) rj["macro_dice_delta"] = *agg.macro.dice - *row.reference_dice;
    table.push_back(rj);
  }
  json j;
  j["command"] = "brats-table";
  j["table"] = a.table;
  j["directory"] = a.dir;
  j["cases"] = cases;
  j["warnings"] = reader.warnings();
  j["rows"] = table;
  j["config"] = report::config_json(base);
  emit(j, a.report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-local reactive flow segmentation"};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* s = app.add_subcommand("segment", "segment an image or a seeded phantom");
  s->add_option("input", seg.input, "input image (.pgm or .rvol)");
  s->add_option("--out-mask", seg.out_mask, "output mask (.pgm or .rvol)");
  s->add_option("--out-field", seg.out_field, "output flow field u^N (.pgm or .rvol)");
  s->add_option("--metrics-against", seg.truth, "ground-truth mask");
  s->add_option("--brain-mask", seg.brain, "brain region for delta estimation (default f > 0)");
  s->add_flag("--record-energy", seg.record_energy, "record the energy after each step");
  s->add_option("--report", seg.report, "write the JSON report here instead of stdout");
  s->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { seg.seed = v; },
                                        "segment a synthetic phantom with this seed");
  add_phantom_options(s, seg.phantom, false);
  add_config_options(s, seg.config);

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare-schemes", "penalty scheme against the truncated scheme");
  c->add_option("input", cmp.input, "input image (.pgm or .rvol)");
  c->add_option("--report", cmp.report, "write the JSON report here instead of stdout");
  c->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { cmp.seed = v; },
                                        "use a synthetic phantom with this seed");
  add_phantom_options(c, cmp.phantom, false);
  add_config_options(c, cmp.config);

  BenchArgs bench;
  bench.phantom.rows = bench.phantom.cols = 128;
  auto* b = app.add_subcommand("bench-sweep", "wall time over rho x Q x scheme");
  b->add_option("input", bench.input, "input image; a seeded 128x128 phantom when omitted");
  b->add_option("--rho-list", bench.rhos, "rho values")->delimiter(',')->capture_default_str();
  b->add_option("--q-list", bench.qs, "Q values")->delimiter(',')->capture_default_str();
  b->add_option("--schemes", bench.schemes, "schemes")->delimiter(',')->capture_default_str();
  b->add_option("--csv", bench.csv, "CSV output path");
  b->add_option("--jobs", bench.jobs, "concurrent cells (distorts timings)")->capture_default_str();
  b->add_option("--seed", bench.seed, "phantom seed when no input is given")->capture_default_str();
  b->add_option("--report", bench.report, "write the JSON report here instead of stdout");
  add_phantom_options(b, bench.phantom, false);
  add_config_options(b, bench.config);

  PhantomCmdArgs ph;
  auto* m = app.add_subcommand("make-phantom", "write a seeded synthetic image and its truth mask");
  m->add_option("--out", ph.out, "image path (.pgm or .rvol)")->required();
  m->add_option("--truth", ph.truth, "truth mask path (.pgm or .rvol)");
  m->add_option("--report", ph.report, "write the JSON report here instead of stdout");
  add_phantom_options(m, ph.phantom, true);

  MetricsArgs met;
  auto* mt = app.add_subcommand("metrics", "precision, recall and DICE of a mask against truth");
  mt->add_option("pred", met.pred, "predicted mask")->required();
  mt->add_option("truth", met.truth, "ground-truth mask")->required();
  mt->add_option("--report", met.report, "write the JSON report here instead of stdout");

  BatchArgs batch;
  auto* bt = app.add_subcommand("batch", "segment every .pgm/.rvol file in a directory");
  bt->add_option("dir", batch.dir, "input directory")->required();
  bt->add_option("--out-dir", batch.out_dir, "mask output directory")->required();
  bt->add_option("--jobs", batch.jobs, "files processed concurrently")->capture_default_str();
  bt->add_option("--report", batch.report, "write the JSON report here instead of stdout");
  add_config_options(bt, batch.config);

  BratsArgs brats;
  auto* br = app.add_subcommand("brats-table", "dataset table over <id>_flair.rvol / <id>_seg.rvol pairs");
  br->add_option("dir", brats.dir, "dataset directory")->required();
  br->add_option("--table", brats.table, "p (exponent rows) or dims (2d vs 3d rows)")->capture_default_str();
  br->add_option("--p-list", brats.p_list, "exponents for --table p")->delimiter(',')->capture_default_str();
  br->add_option("--report", brats.report, "write the JSON report here instead of stdout");
  add_config_options(br, brats.config);

  ConfigArgs printed;
  auto* pc = app.add_subcommand("print-config", "print every config key with its effective value");
  add_config_options(pc, printed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (s->parsed()) return run_segment(seg);
    if (c->parsed()) return run_compare(cmp);
    if (b->parsed()) return run_bench(bench);
    if (m->parsed()) return run_make_phantom(ph);
    if (mt->parsed()) return run_metrics(met);
    if (bt->parsed()) return run_batch(batch);
    if (br->parsed()) return run_brats(brats);
    if (pc->parsed()) {
      std::cout << render_config(build_config(printed));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
