#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "covseg/geometry.hpp"

namespace covseg {

struct NearestHit {
  std::size_t index = 0;
  double squared_distance = 0.0;

  double distance() const { return std::sqrt(squared_distance); }
};

/// Exact nearest-neighbour queries over a fixed point set using a uniform
/// bucket grid searched in growing Chebyshev shells.
class NearestPointIndex {
 public:
  NearestPointIndex() = default;
  /// `cell_size` <= 0 picks a size giving a few points per occupied bucket
  /// for surface-like clouds.
  explicit NearestPointIndex(std::span<const Vec3> points, double cell_size = 0.0);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Throws DataError when the index is empty.
  NearestHit nearest(const Vec3& query) const;

 private:
  std::size_t cell_of(int cx, int cy, int cz) const {
    return static_cast<std::size_t>(cx) +
           static_cast<std::size_t>(cells_[0]) *
               (static_cast<std::size_t>(cy) + static_cast<std::size_t>(cells_[1]) * static_cast<std::size_t>(cz));
  }

  std::vector<Vec3> points_;
  Vec3 origin_{};
  double cell_size_ = 1.0;
  int cells_[3] = {1, 1, 1};
  std::vector<std::uint32_t> cell_start_;  // CSR offsets, size = cell count + 1
  std::vector<std::uint32_t> order_;       // point indices grouped by cell
};

/// Nearest point on a densely sampled polyline: the nearest vertex is found
/// exactly, then refined over its two adjacent segments.
class PolylineIndex {
 public:
  struct Hit {
    Vec3 point;
    /// Arc-length parameter of `point`.
    double s = 0.0;
    double distance = 0.0;
  };

  explicit PolylineIndex(const Polyline& line);

  Hit nearest(const Vec3& query) const;
  double length() const { return cumulative_.back(); }
  const Polyline& line() const { return line_; }

 private:
  Polyline line_;
  std::vector<double> cumulative_;
  NearestPointIndex vertices_;
};

/// Exact minimum Euclidean distance from p to the cloud (linear scan).
/// Throws DataError for an empty cloud.
double point_to_set_distance(const Vec3& p, const PointCloud& cloud);

}  // namespace covseg
