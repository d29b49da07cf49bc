#include "nlflow/solver_yosida.hpp"

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

bool positive_half(const Offset& d) {
  if (d.dl != 0) return d.dl > 0;
  if (d.dm != 0) return d.dm > 0;
  return d.ds > 0;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

double yosida_beta(double u, double r) {
  if (!(r > 0)) fail(ErrorCategory::parameter, "Yosida parameter r > 0 required");
  return u <= 0.0 ? u / r : 0.0;
}

double yosida_gamma(double u, double r) {
  if (!(r > 0)) fail(ErrorCategory::parameter, "Yosida parameter r > 0 required");
  return u >= 0.0 ? u / r : 0.0;
}

PenaltyState PenaltyState::from_iterate(const GridField& u_j, double r, bool enabled) {
  PenaltyState st;
  st.r = r;
  st.chi0.assign(u_j.size(), 0);
  st.chi1.assign(u_j.size(), 0);
  if (!enabled) return st;
  for (std::size_t k = 0; k < u_j.size(); ++k) {
    st.chi0[k] = u_j[k] > 0.0 ? 0 : 1;
    st.chi1[k] = u_j[k] < 1.0 ? 0 : 1;
  }
  return st;
}

std::size_t PenaltyState::active() const noexcept {
  std::size_t n = 0;
  for (std::size_t k = 0; k < chi0.size(); ++k) n += (chi0[k] | chi1[k]) ? 1 : 0;
  return n;
}

PenaltySystem::PenaltySystem(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                             const FlowParams& params)
    : shape_(u_n.shape()),
      n_(u_n.size()),
      shift_(1.0 - params.tau * rx.a),
      coupling_(params.tau * params.alpha),
      tau_(params.tau) {
  if (!(shift_ > 0.0)) fail(ErrorCategory::parameter, "stability violated: tau * a < 1 required");
  if (rx.b.shape() != shape_) fail(ErrorCategory::dimension, "reaction field shape mismatch");
  degree_.assign(n_, 0.0);
  const auto& offsets = w.offsets();
  const auto& weights = w.weights();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!positive_half(offsets[i])) continue;
    std::vector<double> c(n_, 0.0);
    const double wi = weights[i];
    bool any = false;
    detail::for_each_pair(shape_, offsets[i], [&](std::size_t k, std::size_t m) {
      const double v = wi * flux_modulus(u_n[m] - u_n[k], params.epsilon, params.p);
      c[k] = v;
      degree_[k] += v;
      degree_[m] += v;
      any = true;
    });
    if (!any) continue;
    half_offsets_.push_back(offsets[i]);
    coef_.push_back(std::move(c));
  }
  base_rhs_.resize(n_);
  for (std::size_t k = 0; k < n_; ++k) base_rhs_[k] = u_n[k] - params.tau * rx.b[k];
  penalty_diag_.assign(n_, 0.0);
  diag_.resize(n_);
  rhs_ = base_rhs_;
  for (std::size_t k = 0; k < n_; ++k) diag_[k] = shift_ + coupling_ * degree_[k];
}

void PenaltySystem::set_penalty(const PenaltyState& state) {
  if (state.chi0.size() != n_ || state.chi1.size() != n_)
    fail(ErrorCategory::dimension, "penalty state size mismatch");
  const double g = tau_ / state.r;
  for (std::size_t k = 0; k < n_; ++k) {
    if (state.chi0[k] && state.chi1[k]) fail(ErrorCategory::contract, "chi0 and chi1 both active");
    penalty_diag_[k] = g * static_cast<double>(state.chi0[k] + state.chi1[k]);
    diag_[k] = shift_ + coupling_ * degree_[k] + penalty_diag_[k];
    rhs_[k] = base_rhs_[k] + g * static_cast<double>(state.chi1[k]);
  }
}

void PenaltySystem::apply(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < half_offsets_.size(); ++i) {
    const std::vector<double>& c = coef_[i];
    detail::for_each_pair(shape_, half_offsets_[i], [&](std::size_t k, std::size_t m) {
      y[k] += c[k] * x[m];
      y[m] += c[k] * x[k];
    });
  }
  for (std::size_t k = 0; k < n_; ++k) y[k] = diag_[k] * x[k] - coupling_ * y[k];
}

std::size_t cg_iteration_cap(std::size_t pixels) {
  return static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(pixels))));
}

CgResult conjugate_gradient(const PenaltySystem& system, std::span<double> x, double tolerance,
                            std::size_t max_iterations) {
  const std::size_t n = system.size();
  const auto& b = system.rhs();
  const auto& diag = system.diagonal();
  std::vector<double> r(n), z(n), p(n), q(n);
  system.apply(x, q);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
  double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) bnorm = 1.0;
  CgResult res;
  double rnorm = std::sqrt(dot(r, r));
  res.relative_residual = rnorm / bnorm;
  if (res.relative_residual <= tolerance) return res;
  for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
  p = z;
  double rz = dot(r, z);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    system.apply(p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    rnorm = std::sqrt(dot(r, r));
    res.iterations = it;
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= tolerance) return res;
    for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  std::ostringstream os;
  os << "conjugate gradient did not converge in " << max_iterations << " iterations (relative residual "
     << res.relative_residual << ")";
  throw SolverError(os.str(), res.relative_residual, res.iterations);
}

GridField assemble_and_solve(const GridField& u_n, const GridField& u_prev_j, const ReactionField& rx,
                             const WeightKernel& w, const FlowParams& params, double r_j, CgResult* info) {
  if (!(r_j > 0)) fail(ErrorCategory::parameter, "Yosida parameter r_j > 0 required");
  if (u_prev_j.shape() != u_n.shape()) fail(ErrorCategory::dimension, "inner iterate shape mismatch");
  PenaltySystem system(u_n, rx, w, params);
  system.set_penalty(PenaltyState::from_iterate(u_prev_j, r_j, params.penalty));
  GridField u = u_prev_j;
  const CgResult res = conjugate_gradient(system, u.values(), params.cg_tolerance, cg_iteration_cap(u.size()));
  if (info) *info = res;
  return u;
}

double penalty_parameter(const FlowParams& params, std::size_t j) {
  switch (params.schedule) {
    case RSchedule::fixed: return params.r0;
    case RSchedule::geometric: return std::ldexp(params.r0, -static_cast<int>(j));
    case RSchedule::super_geometric: {
      // r_0 = r0, r_j = 2^-j r_{j-1}
      double r = params.r0;
      for (std::size_t i = 1; i <= j; ++i) r = std::ldexp(r, -static_cast<int>(i));
      return r;
    }
  }
  return params.r0;
}

InnerLoopResult inner_r_loop(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                             const FlowParams& params, std::size_t outer_step, const YosidaOptions& options) {
  PenaltySystem system(u_n, rx, w, params);
  const std::size_t cap = cg_iteration_cap(u_n.size());
  InnerLoopResult result{u_n, 0, 0};
  for (std::size_t j = 0; j < params.J; ++j) {
    const double r = penalty_parameter(params, j);
    system.set_penalty(PenaltyState::from_iterate(result.u, r, params.penalty));
    GridField next = result.u;
    const CgResult cg = conjugate_gradient(system, next.values(), params.cg_tolerance, cap);
    result.cg_iterations += cg.iterations;
    ++result.iterations;
    const double change = max_abs_difference(next, result.u);
    result.u = std::move(next);
    if (options.on_inner_iterate) options.on_inner_iterate(outer_step, j, result.u);
    if (params.inner_stop == InnerStop::tolerance && change < params.tol) break;
  }
  return result;
}

double constraint_violation_sq(const GridField& u) {
  double acc = 0.0;
  for (double v : u.values()) {
    const double below = std::max(-v, 0.0);
    const double above = std::max(v - 1.0, 0.0);
    acc += below * below + above * above;
  }
  return acc;
}

GridField run_yosida(const GridField& f, const FlowParams& params, RunStats* stats, const RunOptions& options,
                     const YosidaOptions& yoptions) {
  params.validate();
  require_unit_range(f, "run_yosida");
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
    InnerLoopResult inner = inner_r_loop(u, rx, w, params, n, yoptions);
    const double change = max_abs_difference(inner.u, u);
    u = std::move(inner.u);
    ++st.steps;
    st.step_seconds.push_back(seconds_since(ts));
    st.inner_iterations.push_back(inner.iterations);
    st.cg_iterations.push_back(inner.cg_iterations);
    st.violation_sq.push_back(constraint_violation_sq(u));
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
