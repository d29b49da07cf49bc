#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "nlflow/fft_correlator.hpp"
#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"
#include "nlflow/solver_explicit.hpp"

namespace nlflow {

/// K^i(v)[k] = sum_m w[k,m] flux(v[m] - q_i) over the whole lattice.
GridField level_operator(const GridField& v, const WeightKernel& w, double q_i, double eps, double p,
                         ConvolutionPath path = ConvolutionPath::direct);

struct QuantizedOptions {
  /// Worker threads for the per-level operators; 1 runs inline.
  std::size_t threads = 1;
  /// Visit levels from Q down to 1; output must not depend on it.
  bool reverse_levels = false;
  /// Skip levels no pixel currently occupies.
  bool skip_empty_levels = true;
};

/// Kernel-based scheme state that is fixed for a run: window, partition,
/// flux table flux(q_j - q_i) and, for the fast path, the FFT correlator.
class KernelBasedStepper {
 public:
  KernelBasedStepper(const Shape& shape, WeightKernel w, QuantizationPartition q, const FlowParams& params,
                     QuantizedOptions options = {});
  ~KernelBasedStepper();

  /// Step 1: u~[k] = (tau*alpha*K^i(u_n)[k] + q_i - tau*b[k]) / (1 - tau*a) where u_n[k] = q_i.
  GridField update(const GridField& u_n, const ReactionField& rx) const;
  /// Steps 1 and 2: update followed by rounding onto the partition.
  GridField step(const GridField& u_n, const ReactionField& rx) const;

  const QuantizationPartition& partition() const noexcept { return q_; }
  const WeightKernel& kernel() const noexcept { return w_; }
  std::size_t last_active_levels() const noexcept { return last_active_; }

 private:
  void level_values_direct(std::size_t level, const std::vector<std::size_t>& idx,
                           const std::vector<std::size_t>& pixels, std::vector<double>& out) const;

  Shape shape_;
  WeightKernel w_;
  QuantizationPartition q_;
  FlowParams params_;
  QuantizedOptions options_;
  std::vector<double> flux_table_;  // row i: flux(q_j - q_i) for j = 0..Q-1
  std::unique_ptr<FftCorrelator> correlator_;
  mutable std::size_t last_active_ = 0;
};

GridField quantized_update(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                           const QuantizationPartition& q, const FlowParams& params,
                           const QuantizedOptions& options = {});
GridField quantized_step(const GridField& u_n, const ReactionField& rx, const WeightKernel& w,
                         const QuantizationPartition& q, const FlowParams& params,
                         const QuantizedOptions& options = {});

GridField run_quantized(const GridField& f, const FlowParams& params, RunStats* stats = nullptr,
                        const RunOptions& options = {}, const QuantizedOptions& qoptions = {});

}  // namespace nlflow
