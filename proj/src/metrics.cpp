#include "nlflow/metrics.hpp"

#include <atomic>
#include <exception>
#include <iostream>
#include <mutex>
#include <ostream>
#include <thread>

#include "nlflow/errors.hpp"
#include "nlflow/solver_yosida.hpp"

namespace nlflow {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> relative_or_empty(const GridField& u, const GridField& ref) {
  try {
    return relative_difference(u, ref);
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::degenerate) throw;
    return std::nullopt;
  }
}

void mean_into(std::optional<double>& out, std::size_t& count, double sum) {
  if (count > 0) out = sum / static_cast<double>(count);
}

}  // namespace

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  MetricsReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.dice = ratio(2 * tp, 2 * tp + fp + fn);
  return r;
}

MetricsReport confusion(const SegmentationMask& pred, const SegmentationMask& truth) {
  if (pred.shape() != truth.shape()) fail(ErrorCategory::dimension, "prediction and truth shapes differ");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const bool p = pred[k] != 0;
    const bool t = truth[k] != 0;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
    tn += !p && !t;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

AggregateMetrics aggregate(const std::vector<MetricsReport>& reports) {
  AggregateMetrics agg;
  agg.images = reports.size();
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double ps = 0.0, rs = 0.0, ds = 0.0;
  for (const auto& r : reports) {
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
    tn += r.tn;
    if (r.precision) {
      ps += *r.precision;
      ++agg.macro.precision_count;
    }
    if (r.recall) {
      rs += *r.recall;
      ++agg.macro.recall_count;
    }
    if (r.dice) {
      ds += *r.dice;
      ++agg.macro.dice_count;
    }
  }
  agg.micro = metrics_from_counts(tp, fp, fn, tn);
  mean_into(agg.macro.precision, agg.macro.precision_count, ps);
  mean_into(agg.macro.recall, agg.macro.recall_count, rs);
  mean_into(agg.macro.dice, agg.macro.dice_count, ds);
  return agg;
}

SchemeComparison compare_schemes(const GridField& f, const FlowParams& params) {
  params.validate();
  require_unit_range(f, "compare_schemes");
  SchemeComparison out;
  const ReactionField rx = reaction_coefficients(params, f);
  const WeightKernel w = kernel_for(f, params);

  // Truncated trajectory advanced in lockstep with the penalty scheme's outer loop.
  GridField reference = f;
  std::size_t reference_step = 0;
  YosidaOptions yopt;
  yopt.on_inner_iterate = [&](std::size_t n, std::size_t j, const GridField& u) {
    while (reference_step < n + 1) {
      reference = explicit_step(reference, rx, w, params);
      ++reference_step;
    }
    out.inner.push_back({n, j, relative_or_empty(u, reference)});
  };
  const GridField uy = run_yosida(f, params, &out.yosida_stats, {}, yopt);
  const GridField ue = run_explicit(f, params, &out.explicit_stats);

  out.final_relative = relative_or_empty(uy, ue);
  const SegmentationMask my = finalize_mask(uy);
  const SegmentationMask me = finalize_mask(ue);
  for (std::size_t k = 0; k < my.size(); ++k) out.mask_disagreement += my[k] != me[k];
  out.foreground = me.count();
  return out;
}

std::vector<BenchRecord> timing_sweep(const GridField& f, const FlowParams& params,
                                      const std::vector<double>& rhos, const std::vector<std::size_t>& Qs,
                                      const std::vector<Scheme>& schemes, const SweepOptions& options) {
  if (rhos.empty() || Qs.empty() || schemes.empty())
    fail(ErrorCategory::parameter, "timing sweep needs non-empty scheme, rho and Q lists");
  if (options.jobs < 1) fail(ErrorCategory::parameter, "sweep jobs >= 1 required");

  std::vector<BenchRecord> records;
  for (Scheme s : schemes)
    for (double rho : rhos)
      for (std::size_t q : Qs) {
        BenchRecord r;
        r.scheme = s;
        r.rho = rho;
        r.Q = q;
        r.pixels = f.size();
        records.push_back(r);
      }
  for (const auto& r : records) {
    FlowParams p = params;
    p.rho = r.rho;
    p.Q = r.Q;
    p.validate();
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        BenchRecord& r = records[i];
        FlowParams p = params;
        p.rho = r.rho;
        p.Q = r.Q;
        RunStats st;
        run_scheme(f, p, r.scheme, &st, {}, options.quantized);
        r.steps = st.steps;
        r.seconds = st.seconds;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = records.size();
      }
    }
  };
  if (options.jobs == 1) {
    work();
  } else {
    std::clog << "warning: running " << options.jobs << " sweep cells concurrently; timings are not comparable\n";
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < options.jobs; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return records;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << "scheme,rho,Q,pixels,steps,seconds\n";
  const auto old = os.precision(10);
  for (const auto& r : records)
    os << scheme_name(r.scheme) << ',' << r.rho << ',' << r.Q << ',' << r.pixels << ',' << r.steps << ','
       << r.seconds << '\n';
  os.precision(old);
}

}  // namespace nlflow
