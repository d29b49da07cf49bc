#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"
#include "nlflow/pipeline.hpp"
#include "nlflow/solver_explicit.hpp"

namespace nlflow {

/// Confusion counts; a ratio with a zero denominator stays empty.
struct MetricsReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> dice;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
MetricsReport confusion(const SegmentationMask& pred, const SegmentationMask& truth);

/// Mean of the defined per-image values, with the number of images that contributed.
struct MacroAverage {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> dice;
  std::size_t precision_count = 0;
  std::size_t recall_count = 0;
  std::size_t dice_count = 0;
};

struct AggregateMetrics {
  std::size_t images = 0;
  /// Pooled counts.
  MetricsReport micro;
  MacroAverage macro;
};

AggregateMetrics aggregate(const std::vector<MetricsReport>& reports);

struct InnerDifference {
  std::size_t step = 0;   // outer n
  std::size_t inner = 0;  // j
  /// ||u^{n+1}_{j+1} - u_T^{n+1}||_2 / ||u_T^{n+1}||_2; empty when the reference is zero.
  std::optional<double> relative;
};

struct SchemeComparison {
  std::vector<InnerDifference> inner;
  std::optional<double> final_relative;
  std::size_t mask_disagreement = 0;
  /// Foreground pixels of the truncated-scheme mask.
  std::size_t foreground = 0;
  RunStats explicit_stats;
  RunStats yosida_stats;
};

/// Runs the penalty and truncated schemes on f with identical parameters.
SchemeComparison compare_schemes(const GridField& f, const FlowParams& params);

struct BenchRecord {
  Scheme scheme = Scheme::quantized;
  double rho = 0.0;
  std::size_t Q = 0;
  std::size_t pixels = 0;
  std::size_t steps = 0;
  double seconds = 0.0;
};

struct SweepOptions {
  /// Concurrent cells; values above 1 distort the timings and print a warning.
  std::size_t jobs = 1;
  QuantizedOptions quantized;
};

/// One record per (scheme, rho, Q) cell, ordered scheme-major, then rho, then Q.
std::vector<BenchRecord> timing_sweep(const GridField& f, const FlowParams& params,
                                      const std::vector<double>& rhos, const std::vector<std::size_t>& Qs,
                                      const std::vector<Scheme>& schemes, const SweepOptions& options = {});

/// Header `scheme,rho,Q,pixels,steps,seconds` and one row per record.
void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records);

}  // namespace nlflow
