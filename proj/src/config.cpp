#include "nlflow/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nlflow/errors.hpp"

namespace nlflow {

namespace {

constexpr int kConfigVersion = 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorCategory::parameter, "config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

double parse_real(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, raw, "a real number");
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, raw, "a non-negative integer");
  return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, raw, "a boolean");
}

std::string show(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string show(std::size_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

WindowShape parse_window(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "ball") return WindowShape::ball;
  if (v == "square") return WindowShape::square;
  bad_value(key, raw, "ball or square");
}

ConvolutionPath parse_path(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "direct") return ConvolutionPath::direct;
  if (v == "fft") return ConvolutionPath::fft;
  bad_value(key, raw, "direct or fft");
}

RSchedule parse_schedule(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "geometric") return RSchedule::geometric;
  if (v == "super_geometric") return RSchedule::super_geometric;
  if (v == "fixed") return RSchedule::fixed;
  bad_value(key, raw, "geometric, super_geometric or fixed");
}

InnerStop parse_inner_stop(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "fixed_count") return InnerStop::fixed_count;
  if (v == "tolerance") return InnerStop::tolerance;
  bad_value(key, raw, "fixed_count or tolerance");
}

const char* show(WindowShape w) { return w == WindowShape::ball ? "ball" : "square"; }
const char* show(ConvolutionPath c) { return c == ConvolutionPath::direct ? "direct" : "fft"; }
const char* show(InnerStop s) { return s == InnerStop::fixed_count ? "fixed_count" : "tolerance"; }
const char* show(RSchedule s) {
  switch (s) {
    case RSchedule::geometric: return "geometric";
    case RSchedule::super_geometric: return "super_geometric";
    case RSchedule::fixed: return "fixed";
  }
  return "geometric";
}

struct Entry {
  ConfigKey key;
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

#define NLF_REAL(sec, name, field, help)                                                                  \
  Entry{{sec, name, help},                                                                                \
        [](Config& c, const std::string& k, const std::string& v) { c.field = parse_real(k, v); },         \
        [](const Config& c) { return show(c.field); }}
#define NLF_COUNT(sec, name, field, help)                                                                 \
  Entry{{sec, name, help},                                                                                \
        [](Config& c, const std::string& k, const std::string& v) { c.field = parse_count(k, v); },        \
        [](const Config& c) { return show(c.field); }}
#define NLF_BOOL(sec, name, field, help)                                                                  \
  Entry{{sec, name, help},                                                                                \
        [](Config& c, const std::string& k, const std::string& v) { c.field = parse_bool(k, v); },         \
        [](const Config& c) { return show(c.field); }}
#define NLF_ENUM(sec, name, field, parser, help)                                                          \
  Entry{{sec, name, help},                                                                                \
        [](Config& c, const std::string& k, const std::string& v) { c.field = parser(k, v); },             \
        [](const Config& c) { return std::string(show(c.field)); }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      NLF_REAL("model", "p", params.p, "flux exponent, p > 0"),
      NLF_REAL("model", "epsilon", params.epsilon, "flux regularization, epsilon > 0"),
      NLF_REAL("model", "alpha", params.alpha, "diffusion weight, alpha > 0"),
      NLF_REAL("model", "lambda", params.lambda, "fidelity weight, lambda >= 0"),
      NLF_REAL("model", "delta", params.delta, "saliency parameter; replaced when auto_delta is on"),
      NLF_REAL("time", "tau", params.tau, "time step; replaced when auto_tau is on"),
      NLF_COUNT("time", "n_steps", params.n_steps, "outer time steps N"),
      NLF_REAL("time", "outer_tol", params.outer_tol, "early exit on max |u^{n+1} - u^n| below this; 0 disables"),
      NLF_REAL("space", "rho", params.rho, "Gaussian weight scale; window |d| < 2 rho"),
      NLF_ENUM("space", "window", params.window, parse_window, "ball or square"),
      NLF_COUNT("quantized", "Q", params.Q, "quantization levels, Q >= 2"),
      NLF_ENUM("quantized", "convolution", params.convolution, parse_path, "direct or fft"),
      NLF_COUNT("quantized", "level_threads", pipeline.quantized.threads, "threads for the per-level operators"),
      NLF_BOOL("quantized", "skip_empty_levels", pipeline.quantized.skip_empty_levels, "skip unoccupied levels"),
      NLF_REAL("yosida", "r0", params.r0, "initial penalty parameter, r0 > 0"),
      NLF_COUNT("yosida", "J", params.J, "inner iterations (cap in tolerance mode)"),
      NLF_REAL("yosida", "tol", params.tol, "inner stopping tolerance"),
      NLF_ENUM("yosida", "schedule", params.schedule, parse_schedule, "geometric, super_geometric or fixed"),
      NLF_ENUM("yosida", "inner_stop", params.inner_stop, parse_inner_stop, "fixed_count or tolerance"),
      NLF_BOOL("yosida", "penalty", params.penalty, "enable the penalty terms"),
      NLF_REAL("yosida", "cg_tolerance", params.cg_tolerance, "relative residual target of the linear solver"),
      Entry{{"pipeline", "scheme", "explicit, quantized or yosida"},
            [](Config& c, const std::string&, const std::string& v) { c.pipeline.scheme = parse_scheme(trim(v)); },
            [](const Config& c) { return std::string(scheme_name(c.pipeline.scheme)); }},
      Entry{{"pipeline", "mode", "2d (per slice) or 3d"},
            [](Config& c, const std::string&, const std::string& v) { c.pipeline.mode = parse_mode(trim(v)); },
            [](const Config& c) { return std::string(mode_name(c.pipeline.mode)); }},
      NLF_BOOL("pipeline", "auto_delta", pipeline.auto_delta, "estimate delta from the brain mean"),
      NLF_BOOL("pipeline", "global_delta", pipeline.global_delta, "2d mode: one delta for the whole volume"),
      NLF_REAL("pipeline", "regression_slope", pipeline.regression.slope, "delta regression slope"),
      NLF_REAL("pipeline", "regression_intercept", pipeline.regression.intercept, "delta regression intercept"),
      NLF_BOOL("pipeline", "auto_tau", pipeline.auto_tau, "set tau = tau_a / a after delta is known"),
      NLF_REAL("pipeline", "tau_a", pipeline.tau_a, "target tau * a when auto_tau is on, 0 < tau_a < 1"),
      NLF_COUNT("pipeline", "slice_threads", pipeline.slice_threads, "concurrent slices in 2d mode"),
  };
  return table;
}

#undef NLF_REAL
#undef NLF_COUNT
#undef NLF_BOOL
#undef NLF_ENUM

const Entry& find_entry(const std::string& key) {
  const auto dot = key.find('.');
  const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
  const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
  for (const auto& e : entries())
    if (e.key.name == name && (section.empty() || e.key.section == section)) return e;
  fail(ErrorCategory::parameter, "unknown config key '" + key + "'");
}

}  // namespace

void Config::validate() const {
  params.validate();
  pipeline.validate();
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void apply_setting(Config& config, const std::string& key, const std::string& value) {
  const Entry& e = find_entry(key);
  e.set(config, e.key.section + "." + e.key.name, value);
}

std::string config_value(const Config& config, const std::string& key) { return find_entry(key).get(config); }

namespace {

/// Value with a trailing `; ...` or `# ...` comment removed.
std::string strip_inline_comment(const std::string& value) {
  const auto pos = value.find_first_of(";#");
  return trim(pos == std::string::npos ? value : value.substr(0, pos));
}

}  // namespace

Config parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCategory::format, std::string("config: ") + e.what());
  }
  Config config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      bool known_section = section == "meta";
      for (const auto& e : entries()) known_section = known_section || e.key.section == section;
      if (!known_section || !body.data().empty())
        fail(ErrorCategory::parameter, "unknown config key '" + section + "'");
      continue;
    }
    for (const auto& [name, node] : body) {
      if (section == "meta" && name == "version") {
        if (strip_inline_comment(node.data()) != std::to_string(kConfigVersion))
          fail(ErrorCategory::format, "config version '" + node.data() + "' is not supported");
        continue;
      }
      bool known = false;
      for (const auto& e : entries())
        if (e.key.section == section && e.key.name == name) {
          e.set(config, section + "." + name, strip_inline_comment(node.data()));
          known = true;
          break;
        }
      if (!known) fail(ErrorCategory::parameter, "unknown config key '" + section + "." + name + "'");
    }
  }
  config.validate();
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const Config& config) {
  std::ostringstream os;
  os << "[meta]\nversion = " << kConfigVersion << "\n";
  std::string section;
  for (const auto& e : entries()) {
    if (e.key.section != section) {
      section = e.key.section;
      os << "\n[" << section << "]\n";
    }
    os << "; " << e.key.help << "\n" << e.key.name << " = " << e.get(config) << "\n";
  }
  return os.str();
}

}  // namespace nlflow
