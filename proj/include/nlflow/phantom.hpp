#pragma once

#include <cstddef>
#include <cstdint>

#include "nlflow/grid.hpp"

namespace nlflow {

/// xorshift64* seeded through one splitmix64 round. The stream is part of
/// the phantom file contract: the same seed yields the same phantom on
/// every platform.
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed);

  std::uint64_t next() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller, cosine branch only (two uniforms per draw).
  double normal() noexcept;

 private:
  std::uint64_t state_;
};

struct PhantomSpec {
  Shape shape = Shape(64, 64);
  std::size_t blobs = 3;
  double foreground = 0.8;
  double background = 0.3;
  double noise_sigma = 0.05;
  /// Blob semi-axes drawn uniformly from [min, max], as fractions of the smallest in-plane extent.
  double min_radius = 0.09;
  double max_radius = 0.18;
  /// Semi-axis along the slice axis for volumes, as a fraction of the slice count.
  double min_axial_radius = 0.25;
  double max_axial_radius = 0.4;
  std::uint64_t seed = 1;
};

struct Phantom {
  GridField image;
  SegmentationMask truth;
};

Phantom make_phantom(const PhantomSpec& spec);

}  // namespace nlflow
