#pragma once

#include <span>

#include "covseg/geometry.hpp"
#include "covseg/voxel_grid.hpp"

namespace covseg {

inline constexpr double kHeatmapSteepness = 0.2;

/// 64^3 grid whose isotropic voxel size maps the largest bounding-box extent
/// onto 64 - 2 * margin voxels, centered on the points.
GridSpec fit_grid(std::span<const Vec3> points, int margin_voxels = 2);
inline GridSpec fit_grid(const PointCloud& cloud, int margin_voxels = 2) {
  return fit_grid(cloud.points, margin_voxels);
}

/// tanh(k * d(v, S0)) with d in voxel units to the voxelized partial surface.
VoxelGrid encode_input(const PointCloud& partial, const GridSpec& spec,
                       double steepness = kHeatmapSteepness);

struct TargetDiagnostics {
  /// Voxels that are both surface and centerline; set to 0.5.
  std::size_t overlap_voxels = 0;
};

/// t_s / (t_s + t_c) with t_x = tanh(k * d(v, X)).
VoxelGrid encode_target(const VoxelSet& surface, const VoxelSet& centerline, const GridSpec& spec,
                        double steepness = kHeatmapSteepness, TargetDiagnostics* diagnostics = nullptr);

/// The mesh is sampled on a lattice of at most half a voxel spacing and the
/// centerline resampled at half a voxel before voxelization.
VoxelGrid encode_target(const TriMesh& complete, const Polyline& centerline, const GridSpec& spec,
                        double steepness = kHeatmapSteepness, TargetDiagnostics* diagnostics = nullptr);
VoxelGrid encode_target(const PointCloud& complete, const Polyline& centerline, const GridSpec& spec,
                        double steepness = kHeatmapSteepness, TargetDiagnostics* diagnostics = nullptr);

/// Voxels of the centerline after resampling at half a voxel (26-connected).
VoxelSet voxelize_centerline(const Polyline& centerline, const GridSpec& spec);

}  // namespace covseg
