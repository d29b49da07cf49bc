#include "nlflow/report.hpp"

namespace nlflow::report {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json params_json(const FlowParams& p) {
  Config c;
  c.params = p;
  return {{"p", p.p},
          {"epsilon", p.epsilon},
          {"alpha", p.alpha},
          {"lambda", p.lambda},
          {"delta", p.delta},
          {"tau", p.tau},
          {"n_steps", p.n_steps},
          {"outer_tol", p.outer_tol},
          {"rho", p.rho},
          {"window", config_value(c, "space.window")},
          {"Q", p.Q},
          {"convolution", config_value(c, "quantized.convolution")},
          {"r0", p.r0},
          {"J", p.J},
          {"tol", p.tol},
          {"schedule", config_value(c, "yosida.schedule")},
          {"inner_stop", config_value(c, "yosida.inner_stop")},
          {"penalty", p.penalty},
          {"cg_tolerance", p.cg_tolerance}};
}

json config_json(const Config& c) {
  json out;
  out["params"] = params_json(c.params);
  const PipelineOptions& o = c.pipeline;
  out["pipeline"] = {{"scheme", scheme_name(o.scheme)},
                     {"mode", mode_name(o.mode)},
                     {"auto_delta", o.auto_delta},
                     {"global_delta", o.global_delta},
                     {"regression_slope", o.regression.slope},
                     {"regression_intercept", o.regression.intercept},
                     {"auto_tau", o.auto_tau},
                     {"tau_a", o.tau_a},
                     {"skip_empty_levels", o.quantized.skip_empty_levels}};
  return out;
}

json metrics_json(const MetricsReport& m) {
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"fn", m.fn},
          {"tn", m.tn},
          {"precision", optional_number(m.precision)},
          {"recall", optional_number(m.recall)},
          {"dice", optional_number(m.dice)}};
}

json aggregate_json(const AggregateMetrics& a) {
  return {{"images", a.images},
          {"micro", metrics_json(a.micro)},
          {"macro",
           {{"precision", optional_number(a.macro.precision)},
            {"recall", optional_number(a.macro.recall)},
            {"dice", optional_number(a.macro.dice)},
            {"precision_count", a.macro.precision_count},
            {"recall_count", a.macro.recall_count},
            {"dice_count", a.macro.dice_count}}}};
}

json shape_json(const Shape& shape) {
  json dims = json::array();
  for (std::size_t i = 0; i < shape.rank(); ++i) dims.push_back(shape.extent(i));
  return dims;
}

json phantom_json(const PhantomSpec& s) {
  return {{"shape", shape_json(s.shape)},
          {"blobs", s.blobs},
          {"foreground", s.foreground},
          {"background", s.background},
          {"noise_sigma", s.noise_sigma},
          {"min_radius", s.min_radius},
          {"max_radius", s.max_radius},
          {"min_axial_radius", s.min_axial_radius},
          {"max_axial_radius", s.max_axial_radius},
          {"seed", s.seed},
          {"generator", "splitmix64+xorshift64*"}};
}

json stats_json(const RunStats& s) {
  json out = {{"steps", s.steps},
              {"stopped_early", s.stopped_early},
              {"max_below", s.max_below},
              {"max_above", s.max_above}};
  if (!s.inner_iterations.empty()) {
    out["inner_iterations"] = s.inner_iterations;
    out["cg_iterations"] = s.cg_iterations;
  }
  if (!s.violation_sq.empty()) out["violation_sq"] = s.violation_sq;
  if (!s.active_levels.empty()) out["active_levels"] = s.active_levels;
  if (!s.energies.empty()) {
    json e = json::array();
    for (const auto& x : s.energies)
      e.push_back({{"nonlocal", x.nonlocal}, {"fidelity", x.fidelity}, {"saliency", x.saliency}, {"total", x.total}});
    out["energies"] = e;
  }
  return out;
}

json stats_timings_json(const RunStats& s) { return {{"seconds", s.seconds}, {"step_seconds", s.step_seconds}}; }

json segment_json(const SegmentResult& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    json j = {{"slice", run.slice}, {"skipped", run.skipped}};
    if (!run.skipped) {
      j["delta"] = run.delta;
      j["tau"] = run.tau;
      j["stats"] = stats_json(run.stats);
    }
    runs.push_back(j);
  }
  return {{"foreground", r.mask.count()}, {"runs", runs}};
}

json segment_timings_json(const SegmentResult& r) {
  json runs = json::array();
  for (const auto& run : r.runs) runs.push_back(run.skipped ? json(nullptr) : stats_timings_json(run.stats));
  return {{"seconds", r.seconds}, {"runs", runs}};
}

json comparison_json(const SchemeComparison& c) {
  json inner = json::array();
  for (const auto& d : c.inner) inner.push_back({{"n", d.step}, {"j", d.inner}, {"relative", optional_number(d.relative)}});
  return {{"final_relative", optional_number(c.final_relative)},
          {"mask_disagreement", c.mask_disagreement},
          {"foreground", c.foreground},
          {"inner", inner},
          {"explicit", stats_json(c.explicit_stats)},
          {"yosida", stats_json(c.yosida_stats)}};
}

json bench_json(const std::vector<BenchRecord>& records) {
  json out = json::array();
  for (const auto& r : records)
    out.push_back({{"scheme", scheme_name(r.scheme)},
                   {"rho", r.rho},
                   {"Q", r.Q},
                   {"pixels", r.pixels},
                   {"steps", r.steps},
                   {"seconds", r.seconds}});
  return out;
}

}  // namespace nlflow::report
