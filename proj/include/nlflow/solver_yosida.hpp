#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"
#include "nlflow/solver_explicit.hpp"

namespace nlflow {

/// beta_r(u) = u/r for u <= 0, else 0.
double yosida_beta(double u, double r);
/// gamma_r(u) = u/r for u >= 0, else 0.
double yosida_gamma(double u, double r);

/// Frozen active sets of one inner iteration: chi0 marks u_j <= 0, chi1 marks u_j >= 1.
struct PenaltyState {
  std::vector<std::uint8_t> chi0;
  std::vector<std::uint8_t> chi1;
  double r = 0.0;

  static PenaltyState from_iterate(const GridField& u_j, double r, bool enabled = true);
  std::size_t active() const noexcept;
};

/// Linear system of one inner iteration
///   (1 - tau a) u - tau alpha sum_m w c_km (u[m] - u[k]) + (tau/r)(chi0 + chi1) u
///     = u_n - tau b + (tau/r) chi1,
/// with c_km = ((u_n[m] - u_n[k])^2 + eps^2)^((p-2)/2) frozen at the previous time level.
/// Symmetric positive definite whenever 1 - tau a > 0.
class PenaltySystem {
 public:
  PenaltySystem(const GridField& u_n, const ReactionField& rx, const WeightKernel& w, const FlowParams& params);

  /// Install the active sets; the diffusion coefficients are reused.
  void set_penalty(const PenaltyState& state);

  void apply(std::span<const double> x, std::span<double> y) const;
  const std::vector<double>& diagonal() const noexcept { return diag_; }
  const std::vector<double>& rhs() const noexcept { return rhs_; }
  std::size_t size() const noexcept { return n_; }

 private:
  Shape shape_;
  std::size_t n_;
  double shift_;     // 1 - tau a
  double coupling_;  // tau alpha
  double tau_;
  std::vector<Offset> half_offsets_;
  std::vector<std::vector<double>> coef_;  // per half offset, per pixel k: w * c(k, k+d)
  std::vector<double> degree_;             // sum_m w c_km
  std::vector<double> base_rhs_;           // u_n - tau b
  std::vector<double> penalty_diag_;
  std::vector<double> diag_;
  std::vector<double> rhs_;
};

struct CgResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients; throws SolverError past max_iterations.
CgResult conjugate_gradient(const PenaltySystem& system, std::span<double> x, double tolerance,
                            std::size_t max_iterations);

/// Iteration cap used by assemble_and_solve: 10 * sqrt(pixel count).
std::size_t cg_iteration_cap(std::size_t pixels);

/// Solve one inner iteration with active sets frozen from u_prev_j.
GridField assemble_and_solve(const GridField& u_n, const GridField& u_prev_j, const ReactionField& rx,
                             const WeightKernel& w, const FlowParams& params, double r_j,
                             CgResult* info = nullptr);

/// Penalty parameter of inner iteration j under the configured schedule.
double penalty_parameter(const FlowParams& params, std::size_t j);

struct YosidaOptions {
  /// Called as (outer step n, inner index j, u^{n+1}_{j+1}) after every solve.
  std::function<void(std::size_t, std::size_t, const GridField&)> on_inner_iterate;
};

struct InnerLoopResult {
  GridField u;
  std::size_t iterations = 0;
  std::size_t cg_iterations = 0;
};

InnerLoopResult inner_r_loop(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                             const FlowParams& params, std::size_t outer_step = 0,
                             const YosidaOptions& options = {});

GridField run_yosida(const GridField& f, const FlowParams& params, RunStats* stats = nullptr,
                     const RunOptions& options = {}, const YosidaOptions& yoptions = {});

/// sum_k (|u^-|^2 + |(u-1)^+|^2).
double constraint_violation_sq(const GridField& u);

}  // namespace nlflow
