#include "nlflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nlflow/errors.hpp"

namespace nlflow {

const char* category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::input_range: return "input-range";
    case ErrorCategory::parameter: return "parameter";
    case ErrorCategory::dimension: return "dimension";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::contract: return "contract";
    case ErrorCategory::format: return "format";
    case ErrorCategory::solver: return "solver";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

Shape::Shape(std::size_t rows, std::size_t cols) : rank_(2), extents_{rows, cols, 1} {
  if (rows == 0 || cols == 0) fail(ErrorCategory::dimension, "grid extents must be positive");
}

Shape::Shape(std::size_t rows, std::size_t cols, std::size_t slices)
    : rank_(3), extents_{rows, cols, slices} {
  if (rows == 0 || cols == 0 || slices == 0)
    fail(ErrorCategory::dimension, "grid extents must be positive");
}

GridField::GridField(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

GridField::GridField(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    std::ostringstream os;
    os << "field data length " << data_.size() << " does not match shape size " << shape_.size();
    fail(ErrorCategory::dimension, os.str());
  }
}

SegmentationMask::SegmentationMask(Shape shape) : shape_(shape), labels_(shape.size(), 0) {}

SegmentationMask::SegmentationMask(Shape shape, std::vector<std::uint8_t> labels)
    : shape_(shape), labels_(std::move(labels)) {
  if (labels_.size() != shape_.size())
    fail(ErrorCategory::dimension, "mask length does not match shape size");
  for (auto v : labels_)
    if (v > 1) fail(ErrorCategory::input_range, "mask labels must be 0 or 1");
}

std::size_t SegmentationMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), std::uint8_t{1}));
}

QuantizationPartition::QuantizationPartition(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.size() < 2) fail(ErrorCategory::parameter, "quantization partition needs Q >= 2 levels");
  if (levels_.front() != 0.0 || levels_.back() != 1.0)
    fail(ErrorCategory::parameter, "quantization partition must start at 0 and end at 1");
  for (std::size_t i = 1; i < levels_.size(); ++i)
    if (!(levels_[i] > levels_[i - 1]))
      fail(ErrorCategory::parameter, "quantization levels must be strictly increasing");
}

std::size_t QuantizationPartition::nearest_index(double v) const noexcept {
  auto it = std::lower_bound(levels_.begin(), levels_.end(), v);
  if (it == levels_.begin()) return 0;
  if (it == levels_.end()) return levels_.size() - 1;
  const auto hi = static_cast<std::size_t>(it - levels_.begin());
  return (v - levels_[hi - 1] <= levels_[hi] - v) ? hi - 1 : hi;
}

std::size_t QuantizationPartition::exact_index(double v) const noexcept {
  auto it = std::lower_bound(levels_.begin(), levels_.end(), v);
  if (it == levels_.end() || *it != v) return levels_.size();
  return static_cast<std::size_t>(it - levels_.begin());
}

GridField normalize_input(const Shape& shape, std::span<const std::int64_t> raw, std::int64_t max_code) {
  if (max_code <= 0) fail(ErrorCategory::parameter, "max_code must be positive");
  if (raw.size() != shape.size()) fail(ErrorCategory::dimension, "raw sample count does not match shape");
  std::vector<double> out(raw.size());
  const double scale = static_cast<double>(max_code);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (raw[k] < 0 || raw[k] > max_code) {
      std::ostringstream os;
      os << "sample " << raw[k] << " at index " << k << " outside [0, " << max_code << "]";
      fail(ErrorCategory::input_range, os.str());
    }
    out[k] = static_cast<double>(raw[k]) / scale;
  }
  return GridField(shape, std::move(out));
}

QuantizationPartition make_partition(std::size_t levels) {
  if (levels < 2) fail(ErrorCategory::parameter, "Q >= 2 required for a quantization partition");
  std::vector<double> q(levels);
  const double gaps = static_cast<double>(levels - 1);
  for (std::size_t i = 0; i < levels; ++i) q[i] = static_cast<double>(i) / gaps;
  return QuantizationPartition(std::move(q));
}

GridField round_to_partition(const GridField& v, const QuantizationPartition& q) {
  GridField out(v.shape());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = q.level(q.nearest_index(v[k]));
  return out;
}

GridField clamp01(const GridField& v) {
  GridField out(v.shape());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::min(1.0, std::max(0.0, v[k]));
  return out;
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double relative_difference(const GridField& u, const GridField& ref) {
  if (u.shape() != ref.shape()) fail(ErrorCategory::dimension, "relative_difference: shape mismatch");
  const double denom = l2_norm(ref.values());
  if (denom == 0.0) fail(ErrorCategory::degenerate, "relative_difference: reference has zero norm");
  double acc = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = u[k] - ref[k];
    acc += d * d;
  }
  return std::sqrt(acc) / denom;
}

double max_abs_difference(const GridField& a, const GridField& b) {
  if (a.shape() != b.shape()) fail(ErrorCategory::dimension, "max_abs_difference: shape mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

namespace {

void require_slice(const Shape& shape, std::size_t s) {
  if (shape.rank() != 3) fail(ErrorCategory::dimension, "slice access requires a 3D field");
  if (s >= shape.extent(2)) fail(ErrorCategory::dimension, "slice index out of range");
}

}  // namespace

GridField extract_slice(const GridField& volume, std::size_t s) {
  const Shape& sh = volume.shape();
  require_slice(sh, s);
  GridField out(Shape(sh.extent(0), sh.extent(1)));
  for (std::size_t l = 0; l < sh.extent(0); ++l)
    for (std::size_t m = 0; m < sh.extent(1); ++m) out[l * sh.extent(1) + m] = volume[sh.index(l, m, s)];
  return out;
}

void insert_slice(GridField& volume, std::size_t s, const GridField& slice) {
  const Shape& sh = volume.shape();
  require_slice(sh, s);
  if (slice.shape() != Shape(sh.extent(0), sh.extent(1)))
    fail(ErrorCategory::dimension, "slice shape does not match volume");
  for (std::size_t l = 0; l < sh.extent(0); ++l)
    for (std::size_t m = 0; m < sh.extent(1); ++m) volume[sh.index(l, m, s)] = slice[l * sh.extent(1) + m];
}

SegmentationMask extract_slice(const SegmentationMask& volume, std::size_t s) {
  const Shape& sh = volume.shape();
  require_slice(sh, s);
  SegmentationMask out(Shape(sh.extent(0), sh.extent(1)));
  for (std::size_t l = 0; l < sh.extent(0); ++l)
    for (std::size_t m = 0; m < sh.extent(1); ++m)
      out.set(l * sh.extent(1) + m, volume[sh.index(l, m, s)] != 0);
  return out;
}

void insert_slice(SegmentationMask& volume, std::size_t s, const SegmentationMask& slice) {
  const Shape& sh = volume.shape();
  require_slice(sh, s);
  if (slice.shape() != Shape(sh.extent(0), sh.extent(1)))
    fail(ErrorCategory::dimension, "slice shape does not match volume");
  for (std::size_t l = 0; l < sh.extent(0); ++l)
    for (std::size_t m = 0; m < sh.extent(1); ++m)
      volume.set(sh.index(l, m, s), slice[l * sh.extent(1) + m] != 0);
}

}  // namespace nlflow
