#include "nlflow/fft_correlator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "nlflow/errors.hpp"

namespace nlflow {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan as_plan(void* p) { return static_cast<fftw_plan>(p); }

}  // namespace

std::size_t fft_friendly_size(std::size_t n) {
  for (std::size_t c = std::max<std::size_t>(n, 1);; ++c) {
    std::size_t r = c;
    for (std::size_t f : {2u, 3u, 5u})
      while (r % f == 0) r /= f;
    if (r == 1) return c;
  }
}

FftCorrelator::FftCorrelator(const Shape& shape, const WeightKernel& w) : shape_(shape) {
  const auto& radius = w.radius();
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const std::size_t e = shape.extent(axis);
    const auto r = static_cast<std::size_t>(radius[axis]);
    padded_[axis] = r == 0 ? e : fft_friendly_size(e + r);
  }
  padded_size_ = padded_[0] * padded_[1] * padded_[2];
  // A unit last axis is dropped so the real-to-complex halving applies to a non-trivial axis.
  const int rank = padded_[2] > 1 ? 3 : 2;
  spectrum_size_ = rank == 3 ? padded_[0] * padded_[1] * (padded_[2] / 2 + 1) : padded_[0] * (padded_[1] / 2 + 1);

  const int n[3] = {static_cast<int>(padded_[0]), static_cast<int>(padded_[1]), static_cast<int>(padded_[2])};
  double* real = fftw_alloc_real(padded_size_);
  fftw_complex* spec = fftw_alloc_complex(spectrum_size_);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c(rank, n, real, spec, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r(rank, n, spec, real, FFTW_ESTIMATE);
  }
  if (!forward_ || !inverse_) {
    fftw_free(real);
    fftw_free(spec);
    fail(ErrorCategory::solver, "FFTW plan creation failed");
  }

  // Correlation with w equals convolution with h(e) = w(-e).
  std::fill(real, real + padded_size_, 0.0);
  const auto& offsets = w.offsets();
  const auto& weights = w.weights();
  auto wrap = [](int d, std::size_t p) {
    const long m = static_cast<long>(p);
    return static_cast<std::size_t>(((-static_cast<long>(d)) % m + m) % m);
  };
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const auto& d = offsets[i];
    const std::size_t idx =
        (wrap(d.dl, padded_[0]) * padded_[1] + wrap(d.dm, padded_[1])) * padded_[2] + wrap(d.ds, padded_[2]);
    real[idx] += weights[i];
  }
  fftw_execute_dft_r2c(as_plan(forward_), real, spec);
  kernel_spectrum_ = std::make_unique<std::complex<double>[]>(spectrum_size_);
  const double scale = 1.0 / static_cast<double>(padded_size_);
  for (std::size_t i = 0; i < spectrum_size_; ++i)
    kernel_spectrum_[i] = std::complex<double>(spec[i][0], spec[i][1]) * scale;
  fftw_free(real);
  fftw_free(spec);
}

FftCorrelator::~FftCorrelator() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (forward_) fftw_destroy_plan(as_plan(forward_));
  if (inverse_) fftw_destroy_plan(as_plan(inverse_));
}

FftCorrelator::Workspace::Workspace(const FftCorrelator& owner)
    : real_(fftw_alloc_real(owner.padded_size_)), spectrum_(fftw_alloc_complex(owner.spectrum_size_)) {}

FftCorrelator::Workspace::~Workspace() {
  fftw_free(real_);
  fftw_free(spectrum_);
}

void FftCorrelator::correlate(std::span<const double> in, std::span<double> out, Workspace& ws) const {
  if (in.size() != shape_.size() || out.size() != shape_.size())
    fail(ErrorCategory::dimension, "FftCorrelator: buffer size does not match shape");
  const std::size_t e0 = shape_.extent(0), e1 = shape_.extent(1), e2 = shape_.extent(2);
  double* real = ws.real_;
  auto* spec = static_cast<fftw_complex*>(ws.spectrum_);

  std::fill(real, real + padded_size_, 0.0);
  for (std::size_t l = 0; l < e0; ++l)
    for (std::size_t m = 0; m < e1; ++m)
      std::memcpy(real + (l * padded_[1] + m) * padded_[2], in.data() + (l * e1 + m) * e2, e2 * sizeof(double));

  fftw_execute_dft_r2c(as_plan(forward_), real, spec);
  for (std::size_t i = 0; i < spectrum_size_; ++i) {
    const std::complex<double> v(spec[i][0], spec[i][1]);
    const std::complex<double> r = v * kernel_spectrum_[i];
    spec[i][0] = r.real();
    spec[i][1] = r.imag();
  }
  fftw_execute_dft_c2r(as_plan(inverse_), spec, real);

  for (std::size_t l = 0; l < e0; ++l)
    for (std::size_t m = 0; m < e1; ++m)
      std::memcpy(out.data() + (l * e1 + m) * e2, real + (l * padded_[1] + m) * padded_[2], e2 * sizeof(double));
}

}  // namespace nlflow
