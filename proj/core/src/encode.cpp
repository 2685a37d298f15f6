#include "covseg/encode.hpp"

#include "covseg/error.hpp"
#include "covseg/sampling.hpp"

namespace covseg {

GridSpec fit_grid(std::span<const Vec3> points, int margin_voxels) {
  if (points.empty()) throw DataError("fit_grid: empty point set");
  if (margin_voxels < 0 || 2 * margin_voxels >= kHeatmapDim - 1) {
    throw DataError("fit_grid: margin out of range");
  }
  const AxisBox box = bounding_box(points);
  const Vec3 extent = box.extent();
  const double largest = std::max({extent.x, extent.y, extent.z});
  if (!(largest > 0.0)) throw DataError("fit_grid: point set has zero extent");
  GridSpec spec;
  spec.voxel_size = largest / (kHeatmapDim - 2 * margin_voxels);
  const double half = 0.5 * (kHeatmapDim - 1);
  spec.origin = box.center() - Vec3{half, half, half} * spec.voxel_size;
  return spec;
}

VoxelGrid encode_input(const PointCloud& partial, const GridSpec& spec, double steepness) {
  const ScalarField distance = edt(spec, voxelize(partial, spec));
  VoxelGrid out(spec);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = static_cast<float>(std::tanh(steepness * distance.values[i]));
  }
  return out;
}

VoxelGrid encode_target(const VoxelSet& surface, const VoxelSet& centerline, const GridSpec& spec,
                        double steepness, TargetDiagnostics* diagnostics) {
  if (centerline.empty()) throw DataError("encode_target: empty centerline");
  const ScalarField ds = edt(spec, surface);
  const ScalarField dc = edt(spec, centerline);
  VoxelGrid out(spec);
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double ts = std::tanh(steepness * ds.values[i]);
    const double tc = std::tanh(steepness * dc.values[i]);
    if (ts + tc == 0.0) {
      out.values[i] = 0.5f;
      ++overlap;
    } else {
      out.values[i] = static_cast<float>(ts / (ts + tc));
    }
  }
  if (diagnostics != nullptr) diagnostics->overlap_voxels = overlap;
  return out;
}

VoxelSet voxelize_centerline(const Polyline& centerline, const GridSpec& spec) {
  if (centerline.points.empty()) throw DataError("encode_target: empty centerline");
  if (centerline.size() == 1) return voxelize(centerline.points, spec);
  return voxelize(resample(centerline, 0.5 * spec.voxel_size).points, spec);
}

VoxelGrid encode_target(const TriMesh& complete, const Polyline& centerline, const GridSpec& spec,
                        double steepness, TargetDiagnostics* diagnostics) {
  if (complete.empty()) throw DataError("encode_target: empty surface mesh");
  return encode_target(sample_surface_regular(complete, 0.5 * spec.voxel_size), centerline, spec,
                       steepness, diagnostics);
}

VoxelGrid encode_target(const PointCloud& complete, const Polyline& centerline, const GridSpec& spec,
                        double steepness, TargetDiagnostics* diagnostics) {
  if (complete.empty()) throw DataError("encode_target: empty surface");
  return encode_target(voxelize(complete, spec), voxelize_centerline(centerline, spec), spec,
                       steepness, diagnostics);
}

}  // namespace covseg
