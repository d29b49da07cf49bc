#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "nlflow/grid.hpp"

namespace nlflow {

enum class WindowShape { ball, square };
enum class RSchedule { geometric, super_geometric, fixed };
enum class InnerStop { fixed_count, tolerance };
enum class ConvolutionPath { direct, fft };

/// Model, discretization and scheme switches shared by the three solvers.
struct FlowParams {
  // model
  double p = 0.5;
  double epsilon = 1e-2;
  double alpha = 1.0;
  double lambda = 0.0;
  double delta = 2.0;
  // time
  double tau = 0.0125;
  std::size_t n_steps = 60;
  // space
  double rho = 3.0;
  WindowShape window = WindowShape::ball;
  // kernel-based scheme
  std::size_t Q = 256;
  ConvolutionPath convolution = ConvolutionPath::fft;
  // penalty scheme
  double r0 = 0.5;
  std::size_t J = 5;
  double tol = 1e-4;
  RSchedule schedule = RSchedule::super_geometric;
  InnerStop inner_stop = InnerStop::fixed_count;
  bool penalty = true;
  double cg_tolerance = 1e-8;
  // outer-loop early exit on ||u^{n+1} - u^n||_inf < outer_tol; 0 disables
  double outer_tol = 0.0;

  /// Reaction slope a = delta^2/alpha - lambda.
  double reaction_slope() const noexcept { return delta * delta / alpha - lambda; }

  /// Throws Error(parameter) naming the first violated inequality.
  void validate() const;
};

struct Offset {
  int dl = 0;
  int dm = 0;
  int ds = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Normalized non-local weights w(d) over a finite offset window.
class WeightKernel {
 public:
  WeightKernel(int dimension, std::vector<Offset> offsets, std::vector<double> weights);

  int dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return offsets_.size(); }
  const std::vector<Offset>& offsets() const noexcept { return offsets_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  /// Largest |d| component along each axis.
  const std::array<int, 3>& radius() const noexcept { return radius_; }
  /// w(d), or 0 outside the window.
  double weight_at(const Offset& d) const noexcept;

 private:
  int dimension_;
  std::vector<Offset> offsets_;
  std::vector<double> weights_;
  std::array<int, 3> radius_{0, 0, 0};
};

/// Linearized reaction a*u - b(x).
struct ReactionField {
  double a = 0.0;
  GridField b;
};

double phi(double s, double eps, double p);
double flux(double s, double eps, double p);
double flux_semi(double s, double sigma, double eps, double p);
/// (s^2 + eps^2)^((p-2)/2), the modulus factor shared by flux and flux_semi.
double flux_modulus(double s, double eps, double p);

ReactionField reaction_coefficients(const FlowParams& params, const GridField& f);

/// Gaussian exp(-|d|^2/rho^2) on lattice offsets with |d| < 2 rho, summing to one.
WeightKernel gaussian_weights(double rho, int dimension, WindowShape shape = WindowShape::ball);

double saliency_energy(const GridField& u, double delta);
double nonlocal_energy(const GridField& u, const WeightKernel& w, double eps, double p);
double fidelity_energy(const GridField& u, const GridField& f);

struct EnergySample {
  double nonlocal = 0.0;
  double fidelity = 0.0;
  double saliency = 0.0;
  /// alpha*J + lambda*F + H/alpha (the obstacle term is zero on [0,1]).
  double total = 0.0;
};

EnergySample energy_breakdown(const GridField& u, const GridField& f, const WeightKernel& w,
                              const FlowParams& params);

}  // namespace nlflow
