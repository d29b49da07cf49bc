#include "nlflow/solver_quantized.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <thread>

#include "nlflow/errors.hpp"
#include "window_sum.hpp"

namespace nlflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

GridField level_operator(const GridField& v, const WeightKernel& w, double q_i, double eps, double p,
                         ConvolutionPath path) {
  GridField g(v.shape());
  for (std::size_t k = 0; k < v.size(); ++k) g[k] = flux(v[k] - q_i, eps, p);
  GridField out(v.shape(), 0.0);
  if (path == ConvolutionPath::fft) {
    FftCorrelator corr(v.shape(), w);
    FftCorrelator::Workspace ws(corr);
    corr.correlate(g.values(), out.values(), ws);
    return out;
  }
  const auto& offsets = w.offsets();
  const auto& weights = w.weights();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double wi = weights[i];
    detail::for_each_pair(v.shape(), offsets[i], [&](std::size_t k, std::size_t m) { out[k] += wi * g[m]; });
  }
  return out;
}

KernelBasedStepper::KernelBasedStepper(const Shape& shape, WeightKernel w, QuantizationPartition q,
                                       const FlowParams& params, QuantizedOptions options)
    : shape_(shape), w_(std::move(w)), q_(std::move(q)), params_(params), options_(options) {
  const std::size_t nq = q_.count();
  flux_table_.resize(nq * nq);
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t j = 0; j < nq; ++j)
      flux_table_[i * nq + j] = flux(q_.level(j) - q_.level(i), params_.epsilon, params_.p);
  if (params_.convolution == ConvolutionPath::fft) correlator_ = std::make_unique<FftCorrelator>(shape_, w_);
}

KernelBasedStepper::~KernelBasedStepper() = default;

void KernelBasedStepper::level_values_direct(std::size_t level, const std::vector<std::size_t>& idx,
                                             const std::vector<std::size_t>& pixels,
                                             std::vector<double>& out) const {
  const std::size_t nq = q_.count();
  const double* row = flux_table_.data() + level * nq;
  const auto& offsets = w_.offsets();
  const auto& weights = w_.weights();
  const std::size_t e1 = shape_.extent(1), e2 = shape_.extent(2);
  out.resize(pixels.size());
  for (std::size_t n = 0; n < pixels.size(); ++n) {
    const std::size_t k = pixels[n];
    const std::size_t l = k / (e1 * e2), m = (k / e2) % e1, s = k % e2;
    double acc = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      const Offset& d = offsets[i];
      if (!detail::in_domain(shape_, l, m, s, d)) continue;
      const std::size_t nb = shape_.index(l + d.dl, m + d.dm, s + d.ds);
      acc += weights[i] * row[idx[nb]];
    }
    out[n] = acc;
  }
}

GridField KernelBasedStepper::update(const GridField& u_n, const ReactionField& rx) const {
  if (u_n.shape() != shape_ || rx.b.shape() != shape_)
    fail(ErrorCategory::dimension, "quantized update: shape mismatch");
  const double denom = 1.0 - params_.tau * rx.a;
  if (!(denom > 0.0)) fail(ErrorCategory::parameter, "stability violated: tau * a < 1 required");

  const std::size_t nq = q_.count();
  std::vector<std::size_t> idx(u_n.size());
  std::vector<std::vector<std::size_t>> members(nq);
  for (std::size_t k = 0; k < u_n.size(); ++k) {
    const std::size_t i = q_.exact_index(u_n[k]);
    if (i == nq) {
      std::ostringstream os;
      os << "quantized update: value " << u_n[k] << " at index " << k << " is not on the partition";
      fail(ErrorCategory::contract, os.str());
    }
    idx[k] = i;
    members[i].push_back(k);
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < nq; ++i)
    if (!options_.skip_empty_levels || !members[i].empty()) order.push_back(i);
  if (options_.reverse_levels) std::reverse(order.begin(), order.end());
  last_active_ = 0;
  for (const auto& mbr : members) last_active_ += mbr.empty() ? 0 : 1;

  GridField out(shape_);
  const double ta = params_.tau * params_.alpha;
  auto work = [&](std::size_t begin, std::size_t stride) {
    std::vector<double> values;
    std::vector<double> g, conv;
    std::unique_ptr<FftCorrelator::Workspace> ws;
    if (correlator_) {
      ws = std::make_unique<FftCorrelator::Workspace>(*correlator_);
      g.resize(u_n.size());
      conv.resize(u_n.size());
    }
    for (std::size_t o = begin; o < order.size(); o += stride) {
      const std::size_t level = order[o];
      const auto& pixels = members[level];
      if (correlator_) {
        const double* row = flux_table_.data() + level * nq;
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = row[idx[k]];
        correlator_->correlate(g, conv, *ws);
        values.resize(pixels.size());
        for (std::size_t n = 0; n < pixels.size(); ++n) values[n] = conv[pixels[n]];
      } else {
        level_values_direct(level, idx, pixels, values);
      }
      const double qi = q_.level(level);
      for (std::size_t n = 0; n < pixels.size(); ++n) {
        const std::size_t k = pixels[n];
        out[k] = (ta * values[n] + qi - params_.tau * rx.b[k]) / denom;
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options_.threads, order.size()));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  return out;
}

GridField KernelBasedStepper::step(const GridField& u_n, const ReactionField& rx) const {
  return round_to_partition(update(u_n, rx), q_);
}

GridField quantized_update(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                           const QuantizationPartition& q, const FlowParams& params,
                           const QuantizedOptions& options) {
  return KernelBasedStepper(u_n.shape(), w, q, params, options).update(u_n, rx);
}

GridField quantized_step(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                         const QuantizationPartition& q, const FlowParams& params,
                         const QuantizedOptions& options) {
  return KernelBasedStepper(u_n.shape(), w, q, params, options).step(u_n, rx);
}

GridField run_quantized(const GridField& f, const FlowParams& params, RunStats* stats,
                        const RunOptions& options, const QuantizedOptions& qoptions) {
  params.validate();
  require_unit_range(f, "run_quantized");
  const auto t0 = Clock::now();
  const ReactionField rx = reaction_coefficients(params, f);
  KernelBasedStepper stepper(f.shape(), kernel_for(f, params), make_partition(params.Q), params, qoptions);
  RunStats local;
  RunStats& st = stats ? *stats : local;
  st = RunStats{};

  GridField u = round_to_partition(f, stepper.partition());
  if (options.record_energy) st.energies.push_back(energy_breakdown(u, f, stepper.kernel(), params));
  for (std::size_t n = 0; n < params.n_steps; ++n) {
    const auto ts = Clock::now();
    GridField next = stepper.step(u, rx);
    const double change = max_abs_difference(next, u);
    u = std::move(next);
    ++st.steps;
    st.step_seconds.push_back(seconds_since(ts));
    st.active_levels.push_back(stepper.last_active_levels());
    if (options.record_energy) st.energies.push_back(energy_breakdown(u, f, stepper.kernel(), params));
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
