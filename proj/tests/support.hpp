#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"

namespace testing {

inline nlflow::GridField random_field(const nlflow::Shape& shape, std::uint64_t seed, double lo = 0.0,
                                      double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  nlflow::GridField f(shape);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = dist(gen);
  return f;
}

/// Uniformly random level indices mapped onto make_partition(Q).
inline nlflow::GridField random_on_partition(const nlflow::Shape& shape, std::size_t Q, std::uint64_t seed) {
  const nlflow::QuantizationPartition q = nlflow::make_partition(Q);
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> dist(0, Q - 1);
  nlflow::GridField f(shape);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = q.level(dist(gen));
  return f;
}

/// Kernel along the column axis of a 1 x M field: taps at offsets -(n/2) .. n/2.
inline nlflow::WeightKernel row_kernel(const std::vector<double>& taps) {
  std::vector<nlflow::Offset> offsets;
  const int half = static_cast<int>(taps.size() / 2);
  for (int i = 0; i < static_cast<int>(taps.size()); ++i) offsets.push_back({0, i - half, 0});
  return nlflow::WeightKernel(2, offsets, taps);
}

/// Pixel-major brute force: sum over in-domain offsets of w(d) * g(u[k+d], u[k]).
template <class G>
nlflow::GridField brute_window_sum(const nlflow::GridField& u, const nlflow::WeightKernel& w, G g) {
  const nlflow::Shape& sh = u.shape();
  nlflow::GridField out(sh);
  for (std::size_t l = 0; l < sh.extent(0); ++l)
    for (std::size_t m = 0; m < sh.extent(1); ++m)
      for (std::size_t s = 0; s < sh.extent(2); ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
          const auto& d = w.offsets()[i];
          const long nl = static_cast<long>(l) + d.dl, nm = static_cast<long>(m) + d.dm,
                     ns = static_cast<long>(s) + d.ds;
          if (nl < 0 || nm < 0 || ns < 0 || nl >= static_cast<long>(sh.extent(0)) ||
              nm >= static_cast<long>(sh.extent(1)) || ns >= static_cast<long>(sh.extent(2)))
            continue;
          acc += w.weights()[i] * g(u[sh.index(nl, nm, ns)], u[sh.index(l, m, s)]);
        }
        out[sh.index(l, m, s)] = acc;
      }
  return out;
}

inline double max_abs(const nlflow::GridField& a, const nlflow::GridField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace testing
