#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <vector>

#include "covseg/centerline.hpp"
#include "covseg/datagen.hpp"
#include "covseg/geometry.hpp"
#include "covseg/rng.hpp"
#include "covseg/voxel_grid.hpp"

namespace covseg::test {

inline GridSpec cube_grid(int n, double voxel_size = 1.0, Vec3 origin = {}) {
  GridSpec spec;
  spec.dims = {n, n, n};
  spec.voxel_size = voxel_size;
  spec.origin = origin;
  return spec;
}

inline Polyline straight_line(const Vec3& a, const Vec3& b, int n = 50) {
  Polyline line;
  for (int i = 0; i <= n; ++i) line.points.push_back(a + (b - a) * (static_cast<double>(i) / n));
  return line;
}

/// Open cylinder along +z from z0 to z1 (no caps).
inline TriMesh cylinder(double radius, double z0, double z1, Vec3 center = {}, int rings = 80, int around = 96) {
  const Polyline axis = straight_line(center + Vec3{0, 0, z0}, center + Vec3{0, 0, z1}, rings);
  return datagen::sweep_tube(axis, [radius](double, double) { return radius; }, around, false);
}

/// Dijkstra on the 6-neighborhood; entering voxel n costs 1 / speed(n).
inline std::vector<double> dijkstra6(const GridSpec& spec, const std::vector<double>& speed, const Index3& start) {
  std::vector<double> dist(spec.voxel_count(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[spec.index(start)] = 0.0;
  heap.push({0.0, spec.index(start)});
  static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!heap.empty()) {
    const auto [d, at] = heap.top();
    heap.pop();
    if (d > dist[at]) continue;
    const Index3 v = spec.coords(at);
    for (const auto& o : kOffsets) {
      const Index3 n{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
      if (!spec.contains(n)) continue;
      const std::size_t ni = spec.index(n);
      const double w = 1.0 / speed[ni];
      if (d + w < dist[ni]) {
        dist[ni] = d + w;
        heap.push({dist[ni], ni});
      }
    }
  }
  return dist;
}

// Random corridor maze: one-voxel corridors along the axes on even
// coordinates (parallel corridors never touch), each branching off an
// earlier one and carrying a random speed in [0.5, 1], walled by the minimum
// speed. Shortest paths then run along the axes, where the 6-neighbour graph
// distance is the exact travel time.
inline ScalarField corridor_field(const GridSpec& spec, Rng& rng, Index3& start) {
  std::uniform_real_distribution<double> fast(0.5, 1.0);
  std::uniform_int_distribution<int> even(0, spec.dims[0] / 2 - 1);
  std::uniform_int_distribution<int> turn(1, 2);
  ScalarField speed(spec, kMinSpeed);
  start = {2 * even(rng), 2 * even(rng), 2 * even(rng)};
  std::vector<std::pair<Index3, int>> corridors{{start, 0}};
  for (int c = 0; c < 30; ++c) {
    auto [p, a] = corridors[std::uniform_int_distribution<std::size_t>(0, corridors.size() - 1)(rng)];
    if (c > 0) {
      p[a] = 2 * even(rng);
      a = (a + turn(rng)) % 3;
      corridors.emplace_back(p, a);
    }
    const double f = fast(rng);
    for (int t = 0; t < spec.dims[a]; ++t) {
      p[a] = t;
      speed[p] = std::max(speed[p], f);
    }
  }
  return speed;
}

}  // namespace covseg::test
