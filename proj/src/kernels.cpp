#include "nlflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "nlflow/errors.hpp"
#include "window_sum.hpp"

namespace nlflow {

namespace {

[[noreturn]] void reject(const std::string& inequality, double value) {
  std::ostringstream os;
  os << "parameter invariant violated: " << inequality << " (got " << value << ")";
  fail(ErrorCategory::parameter, os.str());
}

}  // namespace

void FlowParams::validate() const {
  if (!(p > 0)) reject("p > 0", p);
  if (!(epsilon > 0)) reject("epsilon > 0", epsilon);
  if (!(alpha > 0)) reject("alpha > 0", alpha);
  if (!(lambda >= 0)) reject("lambda >= 0", lambda);
  if (!(delta > 0)) reject("delta > 0", delta);
  if (!(tau > 0)) reject("tau > 0", tau);
  if (!(rho > 0)) reject("rho > 0", rho);
  if (Q < 2) reject("Q >= 2", static_cast<double>(Q));
  if (!(r0 > 0)) reject("r0 > 0", r0);
  if (J < 1) reject("J >= 1", static_cast<double>(J));
  if (!(tol > 0)) reject("tol > 0", tol);
  if (!(cg_tolerance > 0)) reject("cg_tolerance > 0", cg_tolerance);
  if (!(outer_tol >= 0)) reject("outer_tol >= 0", outer_tol);
  const double a = reaction_slope();
  if (!(a > 0)) reject("delta^2/alpha - lambda > 0", a);
  if (!(tau * a < 1)) reject("tau * (delta^2/alpha - lambda) < 1", tau * a);
}

WeightKernel::WeightKernel(int dimension, std::vector<Offset> offsets, std::vector<double> weights)
    : dimension_(dimension), offsets_(std::move(offsets)), weights_(std::move(weights)) {
  if (dimension_ != 2 && dimension_ != 3) fail(ErrorCategory::parameter, "kernel dimension must be 2 or 3");
  if (offsets_.empty() || offsets_.size() != weights_.size())
    fail(ErrorCategory::parameter, "kernel offsets and weights must be non-empty and of equal length");
  for (const auto& d : offsets_) {
    if (dimension_ == 2 && d.ds != 0) fail(ErrorCategory::parameter, "2D kernel with a slice offset");
    radius_[0] = std::max(radius_[0], std::abs(d.dl));
    radius_[1] = std::max(radius_[1], std::abs(d.dm));
    radius_[2] = std::max(radius_[2], std::abs(d.ds));
  }
}

double WeightKernel::weight_at(const Offset& d) const noexcept {
  for (std::size_t i = 0; i < offsets_.size(); ++i)
    if (offsets_[i] == d) return weights_[i];
  return 0.0;
}

double flux_modulus(double s, double eps, double p) {
  if (p == 2.0) return 1.0;
  const double t = s * s + eps * eps;
  if (p == 1.0) return 1.0 / std::sqrt(t);
  return std::pow(t, 0.5 * (p - 2.0));
}

double phi(double s, double eps, double p) {
  return (2.0 / p) * (std::pow(s * s + eps * eps, 0.5 * p) - std::pow(eps, p));
}

double flux(double s, double eps, double p) { return s * flux_modulus(s, eps, p); }

double flux_semi(double s, double sigma, double eps, double p) { return sigma * flux_modulus(s, eps, p); }

ReactionField reaction_coefficients(const FlowParams& params, const GridField& f) {
  const double a = params.reaction_slope();
  if (!(a > 0)) reject("delta^2/alpha - lambda > 0", a);
  ReactionField rx{a, GridField(f.shape())};
  const double base = params.delta / params.alpha;
  bool negative = false;
  for (std::size_t k = 0; k < f.size(); ++k) {
    rx.b[k] = base - params.lambda * f[k];
    negative = negative || rx.b[k] < 0.0;
  }
  if (negative)
    std::clog << "nlflow: warning: b(x) = delta/alpha - lambda*f(x) is negative somewhere"
                 " (delta/alpha < lambda*max f)\n";
  return rx;
}

WeightKernel gaussian_weights(double rho, int dimension, WindowShape shape) {
  if (!(rho > 0)) fail(ErrorCategory::parameter, "rho > 0 required");
  if (dimension != 2 && dimension != 3) fail(ErrorCategory::parameter, "kernel dimension must be 2 or 3");
  const double cutoff = 2.0 * rho;
  const int reach = static_cast<int>(std::ceil(cutoff)) - 1;
  const int reach_s = dimension == 3 ? reach : 0;
  std::vector<Offset> offsets;
  std::vector<double> weights;
  for (int dl = -reach; dl <= reach; ++dl)
    for (int dm = -reach; dm <= reach; ++dm)
      for (int ds = -reach_s; ds <= reach_s; ++ds) {
        const double r2 = static_cast<double>(dl * dl + dm * dm + ds * ds);
        if (shape == WindowShape::ball && !(r2 < cutoff * cutoff)) continue;
        if (shape == WindowShape::square &&
            !(std::abs(dl) < cutoff && std::abs(dm) < cutoff && std::abs(ds) < cutoff))
          continue;
        offsets.push_back({dl, dm, ds});
        weights.push_back(std::exp(-r2 / (rho * rho)));
      }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return WeightKernel(dimension, std::move(offsets), std::move(weights));
}

double saliency_energy(const GridField& u, double delta) {
  double acc = 0.0;
  for (double v : u.values()) {
    const double t = 1.0 - delta * v;
    acc -= 0.5 * t * t;
  }
  return acc;
}

double nonlocal_energy(const GridField& u, const WeightKernel& w, double eps, double p) {
  if (w.dimension() == 2 && u.shape().rank() == 3 && u.shape().extent(2) > 1)
    fail(ErrorCategory::dimension, "2D kernel applied to a 3D field");
  std::vector<double> acc(u.size(), 0.0);
  const auto& offsets = w.offsets();
  const auto& weights = w.weights();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double wi = weights[i];
    detail::for_each_pair(u.shape(), offsets[i],
                          [&](std::size_t k, std::size_t m) { acc[k] += wi * phi(u[m] - u[k], eps, p); });
  }
  double total = 0.0;
  for (double a : acc) total += a;
  return 0.25 * total;
}

double fidelity_energy(const GridField& u, const GridField& f) {
  if (u.shape() != f.shape()) fail(ErrorCategory::dimension, "fidelity_energy: shape mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = u[k] - f[k];
    acc += d * d;
  }
  return 0.5 * acc;
}

EnergySample energy_breakdown(const GridField& u, const GridField& f, const WeightKernel& w,
                              const FlowParams& params) {
  EnergySample e;
  e.nonlocal = nonlocal_energy(u, w, params.epsilon, params.p);
  e.fidelity = fidelity_energy(u, f);
  e.saliency = saliency_energy(u, params.delta);
  e.total = params.alpha * e.nonlocal + params.lambda * e.fidelity + e.saliency / params.alpha;
  return e;
}

}  // namespace nlflow
