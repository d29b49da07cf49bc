#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"
#include "nlflow/solver_explicit.hpp"
#include "nlflow/solver_quantized.hpp"

namespace nlflow {

enum class Scheme { explicit_truncated, quantized, yosida };
enum class SegmentMode { per_slice, volume };

const char* scheme_name(Scheme s) noexcept;
Scheme parse_scheme(const std::string& name);
const char* mode_name(SegmentMode m) noexcept;
SegmentMode parse_mode(const std::string& name);

/// Linear model mu_tumor = slope * mu_brain + intercept.
struct DeltaRegression {
  double slope = 1.176;
  double intercept = 0.101;
};

/// delta = 2 / ((1 + slope) mu + intercept).
double delta_from_mean(double mu_brain, const DeltaRegression& reg = {});
double estimate_delta(const GridField& f, const SegmentationMask& brain, const DeltaRegression& reg = {});

/// {k : f[k] > 0}.
SegmentationMask default_brain_mask(const GridField& f);
/// {k : f[k] > 1/delta}.
SegmentationMask naive_threshold(const GridField& f, double delta);
/// {k : u[k] >= 0.5}.
SegmentationMask finalize_mask(const GridField& u);

struct PipelineOptions {
  Scheme scheme = Scheme::quantized;
  SegmentMode mode = SegmentMode::per_slice;
  /// Replace params.delta by the regression estimate.
  bool auto_delta = true;
  /// Per-slice mode only: one delta from the whole volume instead of one per slice.
  bool global_delta = false;
  DeltaRegression regression;
  /// Replace params.tau by tau_a / a once delta is known.
  bool auto_tau = true;
  double tau_a = 0.05;
  bool record_energy = false;
  /// Concurrent slices in per-slice mode.
  std::size_t slice_threads = 1;
  QuantizedOptions quantized;
  /// Brain region for delta estimation; default_brain_mask(f) when absent.
  std::optional<SegmentationMask> brain_mask;

  void validate() const;
};

/// Parameters of one solver run after delta and tau resolution.
FlowParams resolve_params(const FlowParams& params, double delta, const PipelineOptions& options);

GridField run_scheme(const GridField& f, const FlowParams& params, Scheme scheme, RunStats* stats = nullptr,
                     const RunOptions& options = {}, const QuantizedOptions& qoptions = {});

struct SliceRun {
  std::size_t slice = 0;
  bool skipped = false;  // empty brain region
  double delta = 0.0;
  double tau = 0.0;
  RunStats stats;
};

struct SegmentResult {
  SegmentationMask mask;
  GridField field;
  /// One entry per solver run: a single entry for 2D input or volume mode.
  std::vector<SliceRun> runs;
  double seconds = 0.0;
};

SegmentResult segment(const GridField& f, const FlowParams& params, const PipelineOptions& options = {});

}  // namespace nlflow
