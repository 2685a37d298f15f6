#include "covseg/spatial_index.hpp"

#include <algorithm>
#include <limits>

#include "covseg/error.hpp"

namespace covseg {

namespace {

constexpr double kMaxCells = 4.0e6;

}  // namespace

NearestPointIndex::NearestPointIndex(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()) {
  if (points_.empty()) return;
  const AxisBox box = bounding_box(points_);
  const Vec3 extent = box.extent();
  const double longest = std::max({extent.x, extent.y, extent.z});
  if (cell_size <= 0.0) {
    const double half_box_area =
        extent.x * extent.y + extent.y * extent.z + extent.x * extent.z;
    cell_size = 2.0 * std::sqrt(half_box_area / static_cast<double>(points_.size()));
  }
  cell_size = std::max(cell_size, std::max(longest, 1e-9) * 1e-3);
  auto count_cells = [&](double size) {
    double total = 1.0;
    for (int a = 0; a < 3; ++a) total *= std::floor(extent[a] / size) + 1.0;
    return total;
  };
  while (count_cells(cell_size) > kMaxCells) cell_size *= 1.5;

  cell_size_ = cell_size;
  origin_ = box.min;
  for (int a = 0; a < 3; ++a) cells_[a] = static_cast<int>(std::floor(extent[a] / cell_size)) + 1;

  const std::size_t total = static_cast<std::size_t>(cells_[0]) * cells_[1] * cells_[2];
  std::vector<std::uint32_t> point_cell(points_.size());
  cell_start_.assign(total + 1, 0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    int c[3];
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp(static_cast<int>(std::floor((points_[i][a] - origin_[a]) / cell_size_)), 0,
                        cells_[a] - 1);
    }
    point_cell[i] = static_cast<std::uint32_t>(cell_of(c[0], c[1], c[2]));
    ++cell_start_[point_cell[i] + 1];
  }
  for (std::size_t c = 0; c < total; ++c) cell_start_[c + 1] += cell_start_[c];
  order_.resize(points_.size());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    order_[fill[point_cell[i]]++] = static_cast<std::uint32_t>(i);
  }
}

NearestHit NearestPointIndex::nearest(const Vec3& query) const {
  if (points_.empty()) throw DataError("nearest-point query on an empty point set");
  int center[3];
  for (int a = 0; a < 3; ++a) {
    center[a] = std::clamp(static_cast<int>(std::floor((query[a] - origin_[a]) / cell_size_)), 0,
                           cells_[a] - 1);
  }
  NearestHit best{0, std::numeric_limits<double>::infinity()};
  const int max_ring = std::max({cells_[0], cells_[1], cells_[2]});
  for (int ring = 0; ring <= max_ring; ++ring) {
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = center[a] - ring;
      hi[a] = center[a] + ring;
    }
    for (int cz = std::max(lo[2], 0); cz <= std::min(hi[2], cells_[2] - 1); ++cz) {
      for (int cy = std::max(lo[1], 0); cy <= std::min(hi[1], cells_[1] - 1); ++cy) {
        const bool yz_shell = cz == lo[2] || cz == hi[2] || cy == lo[1] || cy == hi[1];
        for (int cx = std::max(lo[0], 0); cx <= std::min(hi[0], cells_[0] - 1); ++cx) {
          if (!yz_shell && cx != lo[0] && cx != hi[0]) continue;
          const std::size_t cell = cell_of(cx, cy, cz);
          for (std::uint32_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
            const std::uint32_t i = order_[k];
            const double d2 = squared_distance(query, points_[i]);
            if (d2 < best.squared_distance || (d2 == best.squared_distance && i < best.index)) {
              best = {i, d2};
            }
          }
        }
      }
    }
    // Every point outside the searched block is at least `bound` away.
    double bound = std::numeric_limits<double>::infinity();
    bool covers_all = true;
    for (int a = 0; a < 3; ++a) {
      if (lo[a] > 0) {
        covers_all = false;
        bound = std::min(bound, query[a] - (origin_[a] + lo[a] * cell_size_));
      }
      if (hi[a] < cells_[a] - 1) {
        covers_all = false;
        bound = std::min(bound, (origin_[a] + (hi[a] + 1) * cell_size_) - query[a]);
      }
    }
    if (covers_all) break;
    if (bound > 0.0 && best.squared_distance < bound * bound) break;
  }
  return best;
}

PolylineIndex::PolylineIndex(const Polyline& line)
    : line_(line), cumulative_(cumulative_arc_length(line)), vertices_(line.points) {
  if (line.points.empty()) throw DataError("PolylineIndex: empty polyline");
}

PolylineIndex::Hit PolylineIndex::nearest(const Vec3& query) const {
  const std::size_t i = vertices_.nearest(query).index;
  Hit hit{line_.points[i], cumulative_[i], distance(line_.points[i], query)};
  const std::size_t first = i == 0 ? 0 : i - 1;
  for (std::size_t seg = first; seg <= i && seg + 1 < line_.size(); ++seg) {
    double t = 0.0;
    const Vec3 c = closest_point_on_segment(query, line_.points[seg], line_.points[seg + 1], &t);
    const double d = distance(c, query);
    if (d < hit.distance) hit = {c, cumulative_[seg] + t * (cumulative_[seg + 1] - cumulative_[seg]), d};
  }
  return hit;
}

double point_to_set_distance(const Vec3& p, const PointCloud& cloud) {
  if (cloud.empty()) throw DataError("point_to_set_distance: empty cloud");
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& q : cloud.points) best = std::min(best, squared_distance(p, q));
  return std::sqrt(best);
}

}  // namespace covseg
