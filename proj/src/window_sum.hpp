#pragma once

// Offset-major traversal of (pixel, neighbour) pairs under zero-extension.
// For a fixed offset d the in-domain pixels form a box, so the inner loop
// carries no bounds checks. Per pixel, contributions arrive in the kernel's
// offset order, matching a pixel-major loop over the same offsets.

#include <algorithm>
#include <cstddef>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"

namespace nlflow::detail {

struct AxisRange {
  std::size_t lo;
  std::size_t hi;
};

inline AxisRange valid_range(std::size_t extent, int d) {
  const long e = static_cast<long>(extent);
  const long lo = std::max(0L, -static_cast<long>(d));
  const long hi = std::min(e, e - static_cast<long>(d));
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

inline long linear_offset(const Shape& sh, const Offset& d) {
  return (static_cast<long>(d.dl) * static_cast<long>(sh.extent(1)) + d.dm) *
             static_cast<long>(sh.extent(2)) +
         d.ds;
}

/// Calls body(k, k + d) for every pixel k whose neighbour k + d is inside the domain.
template <class Body>
void for_each_pair(const Shape& sh, const Offset& d, Body&& body) {
  const AxisRange rl = valid_range(sh.extent(0), d.dl);
  const AxisRange rm = valid_range(sh.extent(1), d.dm);
  const AxisRange rs = valid_range(sh.extent(2), d.ds);
  const long shift = linear_offset(sh, d);
  for (std::size_t l = rl.lo; l < rl.hi; ++l)
    for (std::size_t m = rm.lo; m < rm.hi; ++m) {
      const std::size_t base = sh.index(l, m, 0);
      for (std::size_t s = rs.lo; s < rs.hi; ++s) {
        const std::size_t k = base + s;
        body(k, static_cast<std::size_t>(static_cast<long>(k) + shift));
      }
    }
}

/// True when pixel (l, m, s) + d lies inside the domain.
inline bool in_domain(const Shape& sh, std::size_t l, std::size_t m, std::size_t s, const Offset& d) {
  const long nl = static_cast<long>(l) + d.dl;
  const long nm = static_cast<long>(m) + d.dm;
  const long ns = static_cast<long>(s) + d.ds;
  return nl >= 0 && nm >= 0 && ns >= 0 && nl < static_cast<long>(sh.extent(0)) &&
         nm < static_cast<long>(sh.extent(1)) && ns < static_cast<long>(sh.extent(2));
}

}  // namespace nlflow::detail
