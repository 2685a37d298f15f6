#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "covseg/backend.hpp"
#include "covseg/error.hpp"
#include "covseg/geometry.hpp"
#include "covseg/marching_cubes.hpp"
#include "covseg/surface.hpp"
#include "covseg/voxel_grid.hpp"

namespace covseg {

enum class Method { kMesh, kThreshold, kUnwrap };

const char* to_string(Method method);
/// Accepts "mesh", "threshold" or "unwrap"; throws UsageError otherwise.
Method parse_method(const std::string& name);
/// Comma-separated list, order kept, duplicates rejected.
std::vector<Method> parse_methods(const std::string& list);

struct PipelineConfig {
  double arc_length_mm = 70.0;
  double delta = 0.1;
  double trim_mm = 3.0;
  BandConfig band;
  double threshold_tau = 0.15;
  int unwrap_bins_s = 64;
  int unwrap_bins_theta = 64;
  int margin_voxels = 2;
  /// Worker threads for whole-colon runs and benchmarks.
  int jobs = 1;

  /// Throws UsageError for out-of-range values.
  void validate() const;
};

struct MethodReport {
  Method method = Method::kMesh;
  double coverage = 0.0;
  /// Mesh method: mm^2. Point methods: counts scaled by voxel_size^2 (threshold)
  /// or bin counts (unwrap).
  double total_area = 0.0;
  double hole_area = 0.0;
  std::size_t n_holes_components = 0;
  PointCloud hole_points;
};

struct SegmentReport {
  std::string id;
  bool ok = false;
  std::string error;
  ErrorKind error_kind = ErrorKind::kNumerical;
  GridSpec grid;
  Polyline centerline;
  /// Completed surface of the mesh method (empty mesh when not run).
  CompletedSurface surface;
  CrackReport cracks;
  std::vector<MethodReport> methods;
  std::vector<std::string> warnings;

  const MethodReport* find(Method method) const;
};

/// encode -> complete -> extract_centerline -> per-method coverage. Stage
/// errors are caught and recorded in the report.
SegmentReport run_segment(const std::string& id, const PointCloud& partial, const GridSpec& grid,
                          const CompletionBackend& backend, const PipelineConfig& config,
                          const std::vector<Method>& methods = {Method::kMesh});

/// Coverage stages only, starting from a completed heatmap. The centerline
/// is extracted from `h` unless given.
SegmentReport evaluate_heatmap(const std::string& id, const PointCloud& partial, const VoxelGrid& h,
                               const PipelineConfig& config, const std::vector<Method>& methods = {Method::kMesh},
                               const Polyline* centerline = nullptr);

struct CloudSegment {
  std::string id;
  PointCloud partial;
  double s_begin = 0.0;
  double s_end = 0.0;
};

/// Splits a whole-colon cloud into consecutive arcs of `arc_length_mm` by the
/// arc-length parameter of each point's nearest centerline point; the short
/// remainder is dropped. Ids are `<prefix>_sNN`.
std::vector<CloudSegment> split_cloud(const PointCloud& cloud, const Polyline& centerline, double arc_length_mm,
                                      const std::string& prefix);

/// Runs every segment (grid fitted on its partial cloud), ordered by segment
/// index regardless of completion order.
std::vector<SegmentReport> run_colon(const PointCloud& cloud, const Polyline& centerline,
                                     const CompletionBackend& backend, const PipelineConfig& config,
                                     const std::vector<Method>& methods, const std::string& prefix);

/// Report JSON: id, status, coverage, total_area_mm2, hole_area_mm2,
/// n_holes_components, warnings, per-method results, grid.
std::string report_json(const SegmentReport& report, int indent = 2);
std::string combined_report_json(const std::vector<SegmentReport>& reports, int indent = 2);

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads. The first
/// exception thrown is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace covseg
