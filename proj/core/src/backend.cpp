#include "covseg/backend.hpp"

#include <algorithm>
#include <cstdio>

#include "covseg/encode.hpp"
#include "covseg/error.hpp"
#include "covseg/io.hpp"
#include "covseg/sampling.hpp"

namespace covseg {

OracleBackend::OracleBackend(std::map<std::string, GroundTruth> truth)
    : lookup_([table = std::move(truth)](const std::string& id) {
        auto it = table.find(id);
        if (it == table.end()) throw DataError("oracle backend: no ground truth for sample '" + id + "'");
        return it->second;
      }) {}

Completion OracleBackend::complete(const VoxelGrid& h_input, const std::string& id) const {
  const GroundTruth truth = lookup_(id);
  const GridSpec& spec = h_input.spec;
  // A completion is only defined on the grid: ground truth reaching past it
  // is cut off, as a network prediction would be.
  PointCloud surface = sample_surface_regular(truth.mesh, 0.5 * spec.voxel_size);
  Polyline line = resample(truth.centerline, 0.5 * spec.voxel_size);
  auto outside = [&spec](const Vec3& p) { return !is_finite(p) || !spec.contains(spec.nearest(p)); };
  const auto dropped_surface = std::erase_if(surface.points, outside);
  const auto dropped_line = std::erase_if(line.points, outside);
  if (dropped_surface == 0 && dropped_line == 0) return {encode_target(truth.mesh, truth.centerline, spec), {}};
  Completion out;
  out.warnings.push_back("oracle: dropped " + std::to_string(dropped_surface) + " surface samples and " +
                         std::to_string(dropped_line) + " centerline points outside the grid");
  if (surface.empty() || line.points.empty()) throw DataError("oracle: ground truth of '" + id + "' lies outside the grid");
  out.heatmap = encode_target(voxelize(surface, spec), voxelize_centerline(line, spec), spec);
  return out;
}

FileStoreBackend::FileStoreBackend(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw IoError("file-store backend: '" + dir_.string() + "' is not a directory");
  }
}

std::filesystem::path FileStoreBackend::prediction_path(const std::string& id) const {
  return dir_ / (id + ".pred.vol");
}

bool same_grid(const GridSpec& a, const GridSpec& b) {
  if (a.dims != b.dims) return false;
  const double tol = 1e-9 * std::max(a.voxel_size, b.voxel_size);
  if (std::abs(a.voxel_size - b.voxel_size) > tol) return false;
  const double origin_tol = 1e-6 * std::max(a.voxel_size, b.voxel_size);
  return distance(a.origin, b.origin) <= origin_tol;
}

Completion FileStoreBackend::complete(const VoxelGrid& h_input, const std::string& id) const {
  const auto path = prediction_path(id);
  if (!std::filesystem::exists(path)) {
    throw IoError("file-store backend: missing prediction for sample '" + id + "' (" + path.string() + ")");
  }
  Completion out{io::read_volume(path), {}};
  if (!same_grid(out.heatmap.spec, h_input.spec)) {
    throw DataError("file-store backend: grid of '" + path.string() + "' differs from the input grid");
  }
  out.heatmap.spec = h_input.spec;
  std::size_t clamped = 0;
  float worst = 0.0f;
  for (float& v : out.heatmap.values) {
    if (v < 0.0f || v > 1.0f) {
      worst = std::max(worst, v < 0.0f ? -v : v - 1.0f);
      v = std::clamp(v, 0.0f, 1.0f);
      ++clamped;
    }
  }
  if (clamped > 0) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "prediction for '%s': clamped %zu values to [0, 1] (max excess %.3g)",
                  id.c_str(), clamped, static_cast<double>(worst));
    out.warnings.emplace_back(msg);
  }
  return out;
}

}  // namespace covseg
