#pragma once

#include <cstddef>
#include <vector>

#include "covseg/geometry.hpp"
#include "covseg/voxel_grid.hpp"

namespace covseg {

struct EndpointPair {
  Index3 start{};
  Index3 end{};
  /// Hop count of the shortest path between the two endpoints.
  std::size_t hops = 0;
};

struct TravelTimeField {
  ScalarField time;
  Index3 start{};
  VoxelSet frozen;
};

inline constexpr double kMinSpeed = 1e-3;
/// Voxels within this distance of the start get straight-line travel times.
inline constexpr double kExactStartRadius = 5.0;

/// Thresholds h > 1 - delta, keeps the largest 26-connected component and
/// returns the extremities of its longest shortest path. Throws
/// NoCenterlineSignal when fewer than two voxels survive the threshold.
EndpointPair estimate_endpoints(const VoxelGrid& h, double delta = 0.1);

/// First-order fast marching for |grad T| = 1 / speed on the 6-neighbour
/// stencil. Speeds are clamped to [kMinSpeed, 1].
TravelTimeField fast_march(const ScalarField& speed, const Index3& start);
TravelTimeField fast_march(const VoxelGrid& speed, const Index3& start);

/// Gradient descent on T from `end` down to the start of the field; points
/// in mm, ordered from start to end.
Polyline backtrack(const TravelTimeField& field, const Index3& end, double step_voxels = 0.5);

/// Endpoints, fast marching with h as speed, backtracking; resampled at
/// `spacing_mm` (0.5 mm by default).
Polyline extract_centerline(const VoxelGrid& h, double delta = 0.1, double spacing_mm = 0.5);

}  // namespace covseg
