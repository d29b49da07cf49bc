#pragma once

#include <cstddef>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"

namespace nlflow {

/// Per-run diagnostics filled by every solver.
struct RunStats {
  std::size_t steps = 0;
  bool stopped_early = false;
  double seconds = 0.0;
  std::vector<double> step_seconds;
  /// Energies of u^0 .. u^steps when recording is enabled.
  std::vector<EnergySample> energies;
  /// Penalty scheme only: inner iterations and CG iterations per outer step.
  std::vector<std::size_t> inner_iterations;
  std::vector<std::size_t> cg_iterations;
  /// sum_k (|u^-|^2 + |(u-1)^+|^2) of each u^n, n >= 1 (penalty scheme).
  std::vector<double> violation_sq;
  /// Kernel-based scheme only: populated levels per step.
  std::vector<std::size_t> active_levels;
  double max_below = 0.0;  // ||u^-||_inf of the result
  double max_above = 0.0;  // ||(u-1)^+||_inf of the result
};

struct RunOptions {
  bool record_energy = false;
};

/// K(u)[k] = sum_m w[k,m] flux(u[m] - u[k]), zero-extended at the boundary.
GridField nonlocal_operator(const GridField& u, const WeightKernel& w, double eps, double p);

/// (tau*alpha*K(u)[k] + u[k] - tau*b[k]) / (1 - tau*a), before truncation.
GridField explicit_update(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                          const FlowParams& params);

/// One step of the truncated explicit scheme: clamp01(explicit_update(...)).
GridField explicit_step(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                        const FlowParams& params);

GridField run_explicit(const GridField& f, const FlowParams& params, RunStats* stats = nullptr,
                       const RunOptions& options = {});

/// Kernel matching the field's rank.
WeightKernel kernel_for(const GridField& f, const FlowParams& params);

void record_bounds(const GridField& u, RunStats& stats);
void require_unit_range(const GridField& f, const char* who);

}  // namespace nlflow
