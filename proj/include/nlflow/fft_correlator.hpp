#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"

namespace nlflow {

/// Zero-extended correlation out[k] = sum_d w(d) in[k+d] via real FFTs.
///
/// Each axis is padded to at least extent + radius so that no wrapped term
/// reaches an output on the original lattice; the result equals the direct
/// sum up to rounding. The kernel spectrum is computed once and shared.
class FftCorrelator {
 public:
  FftCorrelator(const Shape& shape, const WeightKernel& w);
  ~FftCorrelator();
  FftCorrelator(const FftCorrelator&) = delete;
  FftCorrelator& operator=(const FftCorrelator&) = delete;

  /// Scratch buffers for one caller; use one per thread.
  class Workspace {
   public:
    explicit Workspace(const FftCorrelator& owner);
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

   private:
    friend class FftCorrelator;
    double* real_ = nullptr;
    void* spectrum_ = nullptr;
  };

  void correlate(std::span<const double> in, std::span<double> out, Workspace& ws) const;

  const std::array<std::size_t, 3>& padded_extents() const noexcept { return padded_; }

 private:
  Shape shape_;
  std::array<std::size_t, 3> padded_{1, 1, 1};
  std::size_t padded_size_ = 0;
  std::size_t spectrum_size_ = 0;
  std::unique_ptr<std::complex<double>[]> kernel_spectrum_;
  void* forward_ = nullptr;
  void* inverse_ = nullptr;
};

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
std::size_t fft_friendly_size(std::size_t n);

}  // namespace nlflow
