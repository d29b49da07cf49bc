#include "nlflow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "nlflow/errors.hpp"
#include "nlflow/solver_yosida.hpp"

namespace nlflow {

namespace {

using Clock = std::chrono::steady_clock;

std::size_t slice_count(const Shape& sh) { return sh.rank() == 3 ? sh.extent(2) : 1; }

SegmentationMask brain_slice(const PipelineOptions& options, const GridField& f, std::size_t s, bool slicing) {
  if (!options.brain_mask) return default_brain_mask(slicing ? extract_slice(f, s) : f);
  return slicing ? extract_slice(*options.brain_mask, s) : *options.brain_mask;
}

}  // namespace

const char* scheme_name(Scheme s) noexcept {
  switch (s) {
    case Scheme::explicit_truncated: return "explicit";
    case Scheme::quantized: return "quantized";
    case Scheme::yosida: return "yosida";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "explicit" || name == "patch") return Scheme::explicit_truncated;
  if (name == "quantized" || name == "kernel") return Scheme::quantized;
  if (name == "yosida") return Scheme::yosida;
  fail(ErrorCategory::parameter, "unknown scheme '" + name + "' (expected explicit, quantized or yosida)");
}

const char* mode_name(SegmentMode m) noexcept { return m == SegmentMode::volume ? "3d" : "2d"; }

SegmentMode parse_mode(const std::string& name) {
  if (name == "2d" || name == "per-slice") return SegmentMode::per_slice;
  if (name == "3d" || name == "volume") return SegmentMode::volume;
  fail(ErrorCategory::parameter, "unknown mode '" + name + "' (expected 2d or 3d)");
}

double delta_from_mean(double mu_brain, const DeltaRegression& reg) {
  const double denom = (1.0 + reg.slope) * mu_brain + reg.intercept;
  if (!(denom > 0)) {
    std::ostringstream os;
    os << "delta estimate needs (1 + slope) * mu + intercept > 0 (got " << denom << ")";
    fail(ErrorCategory::parameter, os.str());
  }
  return 2.0 / denom;
}

double estimate_delta(const GridField& f, const SegmentationMask& brain, const DeltaRegression& reg) {
  if (brain.shape() != f.shape()) fail(ErrorCategory::dimension, "brain mask shape differs from image");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (brain[k]) {
      sum += f[k];
      ++n;
    }
  if (n == 0) fail(ErrorCategory::degenerate, "cannot estimate delta from an empty brain mask");
  return delta_from_mean(sum / static_cast<double>(n), reg);
}

SegmentationMask default_brain_mask(const GridField& f) {
  SegmentationMask m(f.shape());
  for (std::size_t k = 0; k < f.size(); ++k) m.set(k, f[k] > 0.0);
  return m;
}

SegmentationMask naive_threshold(const GridField& f, double delta) {
  if (!(delta > 0)) fail(ErrorCategory::parameter, "naive threshold needs delta > 0");
  const double t = 1.0 / delta;
  SegmentationMask m(f.shape());
  for (std::size_t k = 0; k < f.size(); ++k) m.set(k, f[k] > t);
  return m;
}

SegmentationMask finalize_mask(const GridField& u) {
  SegmentationMask m(u.shape());
  for (std::size_t k = 0; k < u.size(); ++k) m.set(k, u[k] >= 0.5);
  return m;
}

void PipelineOptions::validate() const {
  if (auto_tau && !(tau_a > 0 && tau_a < 1))
    fail(ErrorCategory::parameter, "parameter invariant violated: 0 < tau_a < 1");
  if (slice_threads < 1) fail(ErrorCategory::parameter, "slice_threads >= 1 required");
  if (quantized.threads < 1) fail(ErrorCategory::parameter, "level threads >= 1 required");
}

FlowParams resolve_params(const FlowParams& params, double delta, const PipelineOptions& options) {
  FlowParams out = params;
  out.delta = delta;
  if (options.auto_tau) out.tau = options.tau_a / out.reaction_slope();
  out.validate();
  return out;
}

GridField run_scheme(const GridField& f, const FlowParams& params, Scheme scheme, RunStats* stats,
                     const RunOptions& options, const QuantizedOptions& qoptions) {
  switch (scheme) {
    case Scheme::explicit_truncated: return run_explicit(f, params, stats, options);
    case Scheme::quantized: return run_quantized(f, params, stats, options, qoptions);
    case Scheme::yosida: return run_yosida(f, params, stats, options);
  }
  fail(ErrorCategory::parameter, "unknown scheme");
}

SegmentResult segment(const GridField& f, const FlowParams& params, const PipelineOptions& options) {
  options.validate();
  if (options.brain_mask && options.brain_mask->shape() != f.shape())
    fail(ErrorCategory::dimension, "brain mask shape differs from image");
  const auto t0 = Clock::now();
  const RunOptions ropt{options.record_energy};
  const bool slicing = options.mode == SegmentMode::per_slice && slice_count(f.shape()) > 1;

  std::optional<double> shared_delta;
  if (!options.auto_delta) {
    shared_delta = params.delta;
  } else if (!slicing || options.global_delta) {
    const SegmentationMask brain = options.brain_mask ? *options.brain_mask : default_brain_mask(f);
    shared_delta = estimate_delta(f, brain, options.regression);
  }

  SegmentResult result{SegmentationMask(f.shape()), GridField(f.shape()), {}, 0.0};
  if (!slicing) {
    SliceRun run;
    const FlowParams p = resolve_params(params, *shared_delta, options);
    run.delta = p.delta;
    run.tau = p.tau;
    result.field = run_scheme(f, p, options.scheme, &run.stats, ropt, options.quantized);
    result.mask = finalize_mask(result.field);
    result.runs.push_back(std::move(run));
    result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return result;
  }

  const std::size_t slices = slice_count(f.shape());
  result.runs.resize(slices);
  std::mutex write_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    for (std::size_t s = next++; s < slices; s = next++) {
      try {
        SliceRun run;
        run.slice = s;
        const GridField fs = extract_slice(f, s);
        const SegmentationMask brain = brain_slice(options, f, s, true);
        if (brain.count() == 0) {
          run.skipped = true;
          std::lock_guard lock(write_mutex);
          result.runs[s] = std::move(run);
          continue;
        }
        const double delta = shared_delta ? *shared_delta : estimate_delta(fs, brain, options.regression);
        const FlowParams p = resolve_params(params, delta, options);
        run.delta = p.delta;
        run.tau = p.tau;
        const GridField us = run_scheme(fs, p, options.scheme, &run.stats, ropt, options.quantized);
        const SegmentationMask ms = finalize_mask(us);
        std::lock_guard lock(write_mutex);
        insert_slice(result.field, s, us);
        insert_slice(result.mask, s, ms);
        result.runs[s] = std::move(run);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = slices;
      }
    }
  };

  const std::size_t workers = std::min(options.slice_threads, slices);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

}  // namespace nlflow
