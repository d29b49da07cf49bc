#include "nlflow/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "nlflow/errors.hpp"

namespace nlflow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct Ellipsoid {
  double c[3];
  double r[3];
};

}  // namespace

Xorshift64Star::Xorshift64Star(std::uint64_t seed) : state_(splitmix64(seed)) {
  if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Xorshift64Star::next() noexcept {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1DULL;
}

double Xorshift64Star::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Xorshift64Star::normal() noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Phantom make_phantom(const PhantomSpec& spec) {
  if (spec.shape.size() == 0) fail(ErrorCategory::dimension, "phantom shape must be non-empty");
  if (!(spec.min_radius > 0) || spec.max_radius < spec.min_radius)
    fail(ErrorCategory::parameter, "phantom radii must satisfy 0 < min_radius <= max_radius");
  if (!(spec.noise_sigma >= 0)) fail(ErrorCategory::parameter, "noise_sigma >= 0 required");

  const Shape& sh = spec.shape;
  const bool volume = sh.rank() == 3;
  const double in_plane = static_cast<double>(std::min(sh.extent(0), sh.extent(1)));
  Xorshift64Star rng(spec.seed);

  std::vector<Ellipsoid> blobs;
  for (std::size_t b = 0; b < spec.blobs; ++b) {
    Ellipsoid e{};
    for (int axis = 0; axis < 2; ++axis)
      e.r[axis] = in_plane * rng.uniform(spec.min_radius, spec.max_radius);
    e.r[2] = volume ? static_cast<double>(sh.extent(2)) * rng.uniform(spec.min_axial_radius, spec.max_axial_radius)
                    : 1.0;
    for (int axis = 0; axis < 3; ++axis) {
      const double extent = static_cast<double>(sh.extent(axis));
      if (axis == 2 && !volume) {
        e.c[axis] = 0.0;
        continue;
      }
      const double margin = std::min(e.r[axis], 0.5 * extent);
      e.c[axis] = rng.uniform(margin, extent - margin);
    }
    blobs.push_back(e);
  }

  Phantom ph{GridField(sh, spec.background), SegmentationMask(sh)};
  for (std::size_t l = 0; l < sh.extent(0); ++l)
    for (std::size_t m = 0; m < sh.extent(1); ++m)
      for (std::size_t s = 0; s < sh.extent(2); ++s) {
        const double x[3] = {static_cast<double>(l), static_cast<double>(m), static_cast<double>(s)};
        bool inside = false;
        for (const auto& e : blobs) {
          double q = 0.0;
          for (int axis = 0; axis < (volume ? 3 : 2); ++axis) {
            const double t = (x[axis] - e.c[axis]) / e.r[axis];
            q += t * t;
          }
          inside = inside || q <= 1.0;
        }
        const std::size_t k = sh.index(l, m, s);
        ph.truth.set(k, inside);
        ph.image[k] = inside ? spec.foreground : spec.background;
      }
  if (spec.noise_sigma > 0)
    for (std::size_t k = 0; k < ph.image.size(); ++k)
      ph.image[k] = std::clamp(ph.image[k] + spec.noise_sigma * rng.normal(), 0.0, 1.0);
  return ph;
}

}  // namespace nlflow
