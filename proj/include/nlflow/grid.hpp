#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nlflow {

/// Lattice extent (L, M) or (L, M, S). Row-major: the last axis varies fastest.
class Shape {
 public:
  Shape() = default;
  Shape(std::size_t rows, std::size_t cols);
  Shape(std::size_t rows, std::size_t cols, std::size_t slices);

  std::size_t rank() const noexcept { return rank_; }
  /// Extent along axis i; axes beyond rank() report 1.
  std::size_t extent(std::size_t axis) const noexcept { return extents_[axis]; }
  const std::array<std::size_t, 3>& extents() const noexcept { return extents_; }
  std::size_t size() const noexcept { return extents_[0] * extents_[1] * extents_[2]; }

  std::size_t index(std::size_t l, std::size_t m, std::size_t s = 0) const noexcept {
    return (l * extents_[1] + m) * extents_[2] + s;
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::size_t rank_ = 0;
  std::array<std::size_t, 3> extents_{0, 1, 1};
};

/// Dense real-valued field on a 2D or 3D lattice (the image f or the flow state u).
class GridField {
 public:
  GridField() = default;
  explicit GridField(Shape shape, double fill = 0.0);
  GridField(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator[](std::size_t k) const noexcept { return data_[k]; }
  double& operator[](std::size_t k) noexcept { return data_[k]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  friend bool operator==(const GridField&, const GridField&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Binary label field; every value is 0 or 1.
class SegmentationMask {
 public:
  SegmentationMask() = default;
  explicit SegmentationMask(Shape shape);
  SegmentationMask(Shape shape, std::vector<std::uint8_t> labels);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::uint8_t operator[](std::size_t k) const noexcept { return labels_[k]; }
  void set(std::size_t k, bool on) noexcept { labels_[k] = on ? 1 : 0; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::size_t count() const noexcept;

  friend bool operator==(const SegmentationMask&, const SegmentationMask&) = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> labels_;
};

/// Sorted levels 0 = q_1 < ... < q_Q = 1.
class QuantizationPartition {
 public:
  explicit QuantizationPartition(std::vector<double> levels);

  std::size_t count() const noexcept { return levels_.size(); }
  double level(std::size_t i) const noexcept { return levels_[i]; }
  std::span<const double> levels() const noexcept { return levels_; }

  /// Index of the nearest level; ties go to the smaller index.
  std::size_t nearest_index(double v) const noexcept;
  /// Index i with level(i) == v exactly, or count() if v is off-partition.
  std::size_t exact_index(double v) const noexcept;

 private:
  std::vector<double> levels_;
};

GridField normalize_input(const Shape& shape, std::span<const std::int64_t> raw, std::int64_t max_code);
QuantizationPartition make_partition(std::size_t levels);
GridField round_to_partition(const GridField& v, const QuantizationPartition& q);
GridField clamp01(const GridField& v);
/// ||u - ref||_2 / ||ref||_2.
double relative_difference(const GridField& u, const GridField& ref);

double l2_norm(std::span<const double> v);
double max_abs_difference(const GridField& a, const GridField& b);

/// Slice s of a volume along the last axis, as a 2D field.
GridField extract_slice(const GridField& volume, std::size_t s);
void insert_slice(GridField& volume, std::size_t s, const GridField& slice);
SegmentationMask extract_slice(const SegmentationMask& volume, std::size_t s);
void insert_slice(SegmentationMask& volume, std::size_t s, const SegmentationMask& slice);

}  // namespace nlflow
