#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "covseg/geometry.hpp"

namespace covseg {

using Index3 = std::array<int, 3>;

inline constexpr int kHeatmapDim = 64;

/// Placement of a regular isotropic grid in physical space. `origin` is the
/// center of voxel (0,0,0); voxel (i,j,k) has its center at
/// origin + voxel_size * (i,j,k).
struct GridSpec {
  Index3 dims{kHeatmapDim, kHeatmapDim, kHeatmapDim};
  Vec3 origin{};
  double voxel_size = 1.0;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  /// Linear offset, x fastest, z slowest.
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }
  std::size_t index(const Index3& v) const { return index(v[0], v[1], v[2]); }
  Index3 coords(std::size_t linear) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(linear % nx), static_cast<int>((linear / nx) % ny),
            static_cast<int>(linear / (nx * ny))};
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  bool contains(const Index3& v) const { return contains(v[0], v[1], v[2]); }

  /// Voxel center in mm.
  Vec3 center(const Index3& v) const {
    return origin + Vec3{static_cast<double>(v[0]), static_cast<double>(v[1]),
                         static_cast<double>(v[2])} * voxel_size;
  }
  /// Continuous voxel coordinates of a physical point.
  Vec3 to_voxel(const Vec3& p) const { return (p - origin) / voxel_size; }
  Vec3 to_world(const Vec3& voxel) const { return origin + voxel * voxel_size; }
  /// Nearest voxel center: floor((p - origin) / voxel_size + 0.5) per axis.
  Index3 nearest(const Vec3& p) const {
    const Vec3 v = to_voxel(p);
    return {static_cast<int>(std::floor(v.x + 0.5)), static_cast<int>(std::floor(v.y + 0.5)),
            static_cast<int>(std::floor(v.z + 0.5))};
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Throws DataError on non-positive dims or voxel size.
void validate(const GridSpec& spec);

template <typename T>
struct BasicVoxelGrid {
  GridSpec spec;
  std::vector<T> values;

  BasicVoxelGrid() = default;
  explicit BasicVoxelGrid(const GridSpec& s, T fill = T{})
      : spec(s), values(s.voxel_count(), fill) {}

  T& operator()(int i, int j, int k) { return values[spec.index(i, j, k)]; }
  T operator()(int i, int j, int k) const { return values[spec.index(i, j, k)]; }
  T& operator[](const Index3& v) { return values[spec.index(v)]; }
  T operator[](const Index3& v) const { return values[spec.index(v)]; }
};

/// Float32 grid: heatmaps and anything written to a volume file.
using VoxelGrid = BasicVoxelGrid<float>;
/// Double-precision working field (distances, travel times, level sets).
using ScalarField = BasicVoxelGrid<double>;

/// Set of occupied voxels of a parent grid.
class VoxelSet {
 public:
  VoxelSet() = default;
  explicit VoxelSet(const Index3& dims);

  const Index3& dims() const { return dims_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool contains(const Index3& v) const;
  bool contains_linear(std::size_t linear) const { return mask_[linear] != 0; }
  /// Returns true when the voxel was newly inserted. Throws on out-of-range.
  bool insert(const Index3& v);

  /// Occupied voxels in linear (x-fastest) order.
  std::vector<Index3> coordinates() const;
  std::span<const std::uint8_t> mask() const { return mask_; }

  friend bool operator==(const VoxelSet&, const VoxelSet&) = default;

 private:
  Index3 dims_{0, 0, 0};
  std::vector<std::uint8_t> mask_;
  std::size_t count_ = 0;
};

/// Marks every voxel whose nearest center receives at least one point.
/// Throws DataError naming the first point that falls outside the grid.
VoxelSet voxelize(std::span<const Vec3> points, const GridSpec& spec);
inline VoxelSet voxelize(const PointCloud& cloud, const GridSpec& spec) {
  return voxelize(cloud.points, spec);
}

/// Exact squared Euclidean distance transform (voxel units) to the nearest
/// seed voxel center. Separable lower-envelope algorithm; throws on empty seeds.
ScalarField squared_edt(const GridSpec& spec, const VoxelSet& seeds);

/// Exact Euclidean distance transform in voxel units.
ScalarField edt(const GridSpec& spec, const VoxelSet& seeds);

/// Trilinear interpolation at continuous voxel coordinates; clamps to the grid.
template <typename T>
double trilinear(const BasicVoxelGrid<T>& grid, const Vec3& voxel) {
  const auto& d = grid.spec.dims;
  double c[3] = {voxel.x, voxel.y, voxel.z};
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    c[a] = std::fmin(std::fmax(c[a], 0.0), static_cast<double>(d[a] - 1));
    base[a] = std::min(static_cast<int>(std::floor(c[a])), std::max(d[a] - 2, 0));
    frac[a] = c[a] - base[a];
  }
  double result = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    int idx[3];
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
      const int bit = (corner >> a) & 1;
      idx[a] = std::min(base[a] + bit, d[a] - 1);
      w *= bit ? frac[a] : 1.0 - frac[a];
    }
    if (w != 0.0) result += w * static_cast<double>(grid(idx[0], idx[1], idx[2]));
  }
  return result;
}

}  // namespace covseg
