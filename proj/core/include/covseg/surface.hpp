#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "covseg/geometry.hpp"
#include "covseg/marching_cubes.hpp"
#include "covseg/voxel_grid.hpp"

namespace covseg {

struct BandConfig {
  /// Voxels with h below this value form the surface band.
  double threshold = 0.3;
  int halfwidth = 2;
  /// Radial search radius (voxels) for the surface voxel of a band voxel.
  double search_radius = 3.5;
  double search_step = 0.25;
  /// Band voxels whose radial search finds no h below this value are
  /// treated as outside the band.
  double zero_level = 0.15;
};

struct TransformedField {
  ScalarField field;
  /// One byte per voxel: 1 when the voxel belongs to the band.
  std::vector<std::uint8_t> band;
  std::size_t band_voxels = 0;
};

/// Signed distance-like field v_new = d(s, C) - d(v, C) around the surface,
/// positive towards the centerline. s is the middle of the run of minimal h
/// along the centerline-radial line through v. Outside the band voxels hold
/// +(halfwidth + 1) when h > 0.5 and -(halfwidth + 1) otherwise. Throws
/// NoSurfaceSignal when the band is empty.
TransformedField transform_field(const VoxelGrid& h, const Polyline& centerline, const BandConfig& config = {});

/// Vertex is a hole iff its distance to the partial cloud exceeds
/// sqrt(2)/2 * voxel_size. An empty partial marks every vertex (with a
/// warning appended to `warnings` when given).
std::vector<bool> classify_holes(const std::vector<Vec3>& vertices, const PointCloud& partial, double voxel_size_mm,
                                 std::vector<std::string>* warnings = nullptr);

struct CompletedSurface {
  TriMesh mesh;
  std::vector<bool> vertex_is_hole;
  /// Vertices still counted after trimming.
  std::vector<bool> vertex_counted;
  double hole_area = 0.0;
  double total_area = 0.0;
  double coverage = 1.0;
  std::size_t n_holes_components = 0;
};

/// Per-triangle hole area = area * (hole vertices) / 3.
CompletedSurface coverage(const TriMesh& mesh, const std::vector<bool>& vertex_is_hole);

/// Drops vertices whose nearest-centerline parameter lies within `trim_mm`
/// of either centerline end; each vertex carries a third of the area of its
/// incident faces.
CompletedSurface trim_end_caps(const CompletedSurface& surface, const Polyline& centerline, double trim_mm = 3.0);

/// Connected components of counted hole vertices along mesh edges.
std::size_t count_hole_components(const TriMesh& mesh, const std::vector<bool>& vertex_is_hole,
                                  const std::vector<bool>* counted = nullptr);

/// Centers (mm) of voxels with h < tau.
PointCloud baseline_threshold_extract(const VoxelGrid& h, double tau = 0.15);

struct PointCoverage {
  double coverage = 1.0;
  std::size_t total = 0;
  std::size_t holes = 0;
  PointCloud hole_points;
};

/// Point-count coverage of an extracted cloud: points farther than
/// sqrt(2)/2 * voxel_size from the partial are holes; points within `trim_mm`
/// of a centerline end are ignored.
PointCoverage threshold_coverage(const PointCloud& extracted, const PointCloud& partial, double voxel_size_mm,
                                 const Polyline& centerline, double trim_mm = 3.0);

struct UnwrapResult {
  double coverage = 1.0;
  std::size_t completed_bins = 0;
  std::size_t covered_bins = 0;
  /// Completed-surface points falling in bins the partial does not reach.
  PointCloud hole_points;
};

/// Maps points to (arc length, angle) bins around the centerline using a
/// parallel-transported frame. Coverage = |partial bins & completed bins| /
/// |completed bins|. Bins within `trim_mm` of an end are ignored.
UnwrapResult baseline_unwrap(const PointCloud& completed, const PointCloud& partial, const Polyline& centerline,
                             int n_s = 64, int n_theta = 64, double trim_mm = 0.0);

}  // namespace covseg
