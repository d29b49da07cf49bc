#include "nlflow/solver_explicit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "nlflow/errors.hpp"
#include "window_sum.hpp"

namespace nlflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_stable(const ReactionField& rx, const FlowParams& params) {
  if (!(1.0 - params.tau * rx.a > 0.0)) {
    std::ostringstream os;
    os << "stability violated: tau * a < 1 required (tau * a = " << params.tau * rx.a << ")";
    fail(ErrorCategory::parameter, os.str());
  }
}

}  // namespace

void require_unit_range(const GridField& f, const char* who) {
  for (double v : f.values())
    if (!(v >= 0.0 && v <= 1.0)) {
      std::ostringstream os;
      os << who << ": input values must lie in [0, 1] (found " << v << ")";
      fail(ErrorCategory::input_range, os.str());
    }
}

WeightKernel kernel_for(const GridField& f, const FlowParams& params) {
  const int dim = (f.shape().rank() == 3 && f.shape().extent(2) > 1) ? 3 : 2;
  return gaussian_weights(params.rho, dim, params.window);
}

void record_bounds(const GridField& u, RunStats& stats) {
  stats.max_below = 0.0;
  stats.max_above = 0.0;
  for (double v : u.values()) {
    stats.max_below = std::max(stats.max_below, -std::min(v, 0.0));
    stats.max_above = std::max(stats.max_above, std::max(v - 1.0, 0.0));
  }
}

GridField nonlocal_operator(const GridField& u, const WeightKernel& w, double eps, double p) {
  GridField out(u.shape(), 0.0);
  const auto& offsets = w.offsets();
  const auto& weights = w.weights();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double wi = weights[i];
    detail::for_each_pair(u.shape(), offsets[i], [&](std::size_t k, std::size_t m) {
      out[k] += wi * flux(u[m] - u[k], eps, p);
    });
  }
  return out;
}

GridField explicit_update(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                          const FlowParams& params) {
  require_stable(rx, params);
  if (rx.b.shape() != u_n.shape()) fail(ErrorCategory::dimension, "reaction field shape mismatch");
  GridField out = nonlocal_operator(u_n, w, params.epsilon, params.p);
  const double ta = params.tau * params.alpha;
  const double denom = 1.0 - params.tau * rx.a;
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = (ta * out[k] + u_n[k] - params.tau * rx.b[k]) / denom;
  return out;
}

GridField explicit_step(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                        const FlowParams& params) {
  return clamp01(explicit_update(u_n, rx, w, params));
}

GridField run_explicit(const GridField& f, const FlowParams& params, RunStats* stats,
                       const RunOptions& options) {
  params.validate();
  require_unit_range(f, "run_explicit");
  const auto t0 = Clock::now();
  const ReactionField rx = reaction_coefficients(params, f);
  const WeightKernel w = kernel_for(f, params);
  RunStats local;
  RunStats& st = stats ? *stats : local;
  st = RunStats{};
  if (options.record_energy) st.energies.push_back(energy_breakdown(f, f, w, params));

  GridField u = f;
  for (std::size_t n = 0; n < params.n_steps; ++n) {
    const auto ts = Clock::now();
    GridField next = explicit_step(u, rx, w, params);
    const double change = max_abs_difference(next, u);
    u = std::move(next);
    ++st.steps;
    st.step_seconds.push_back(seconds_since(ts));
    if (options.record_energy) st.energies.push_back(energy_breakdown(u, f, w, params));
    if (params.outer_tol > 0.0 && change < params.outer_tol) {
      st.stopped_early = true;
      break;
    }
  }
  record_bounds(u, st);
  st.seconds = seconds_since(t0);
  return u;
}

}  // namespace nlflow
