#include "covseg/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "covseg/centerline.hpp"
#include "covseg/encode.hpp"
#include "covseg/sampling.hpp"
#include "covseg/spatial_index.hpp"
#include "json.hpp"

namespace covseg {

namespace {

using Json = nlohmann::ordered_json;

MethodReport mesh_method(SegmentReport& report, const VoxelGrid& h, const PointCloud& partial,
                         const PipelineConfig& config) {
  const TransformedField transformed = transform_field(h, report.centerline, config.band);
  const IsoSurface iso = marching_cubes(transformed.field, 0.0, &transformed.band);
  if (iso.empty) throw NoSurfaceSignal("marching cubes found no zero crossing in the surface band");
  report.cracks = check_cracks(iso, h.spec, &transformed.band);
  if (!report.cracks.ok()) {
    report.warnings.push_back("marching cubes mesh has " + std::to_string(report.cracks.interior_boundary_edges) +
                              " interior boundary edges and " + std::to_string(report.cracks.overused_edges) +
                              " non-manifold edges");
  }
  const auto holes = classify_holes(iso.mesh.vertices, partial, h.spec.voxel_size, &report.warnings);
  report.surface = trim_end_caps(coverage(iso.mesh, holes), report.centerline, config.trim_mm);

  MethodReport out;
  out.method = Method::kMesh;
  out.coverage = report.surface.coverage;
  out.total_area = report.surface.total_area;
  out.hole_area = report.surface.hole_area;
  out.n_holes_components = report.surface.n_holes_components;
  for (std::size_t v = 0; v < holes.size(); ++v) {
    if (holes[v] && report.surface.vertex_counted[v]) out.hole_points.points.push_back(iso.mesh.vertices[v]);
  }
  return out;
}

MethodReport threshold_method(const SegmentReport& report, const VoxelGrid& h, const PointCloud& partial,
                              const PipelineConfig& config) {
  const PointCloud extracted = baseline_threshold_extract(h, config.threshold_tau);
  PointCoverage pc = threshold_coverage(extracted, partial, h.spec.voxel_size, report.centerline, config.trim_mm);
  const double cell = h.spec.voxel_size * h.spec.voxel_size;
  MethodReport out;
  out.method = Method::kThreshold;
  out.coverage = pc.coverage;
  out.total_area = static_cast<double>(pc.total) * cell;
  out.hole_area = static_cast<double>(pc.holes) * cell;
  out.hole_points = std::move(pc.hole_points);
  return out;
}

MethodReport unwrap_method(SegmentReport& report, const VoxelGrid& h, const PointCloud& partial,
                           const PipelineConfig& config) {
  if (report.surface.mesh.empty()) {
    SegmentReport scratch = report;
    mesh_method(scratch, h, partial, config);
    report.surface.mesh = std::move(scratch.surface.mesh);
  }
  const PointCloud completed = sample_surface_regular(report.surface.mesh, 0.5);
  UnwrapResult unwrap = baseline_unwrap(completed, partial, report.centerline, config.unwrap_bins_s,
                                        config.unwrap_bins_theta, config.trim_mm);
  MethodReport out;
  out.method = Method::kUnwrap;
  out.coverage = unwrap.coverage;
  out.total_area = static_cast<double>(unwrap.completed_bins);
  out.hole_area = static_cast<double>(unwrap.completed_bins - unwrap.covered_bins);
  out.hole_points = std::move(unwrap.hole_points);
  return out;
}

Json grid_json(const GridSpec& grid) {
  return Json{{"dims", {grid.dims[0], grid.dims[1], grid.dims[2]}},
              {"voxel_size_mm", grid.voxel_size},
              {"origin_mm", {grid.origin.x, grid.origin.y, grid.origin.z}}};
}

Json report_object(const SegmentReport& report) {
  Json j;
  j["id"] = report.id;
  j["status"] = report.ok ? "ok" : "error";
  if (!report.ok) {
    j["error"] = report.error;
    j["error_kind"] = to_string(report.error_kind);
  }
  const MethodReport* primary = report.ok && !report.methods.empty() ? &report.methods.front() : nullptr;
  j["method"] = primary != nullptr ? Json(to_string(primary->method)) : Json(nullptr);
  j["coverage"] = primary != nullptr ? Json(primary->coverage) : Json(nullptr);
  j["total_area_mm2"] = primary != nullptr ? Json(primary->total_area) : Json(nullptr);
  j["hole_area_mm2"] = primary != nullptr ? Json(primary->hole_area) : Json(nullptr);
  j["n_holes_components"] = primary != nullptr ? Json(primary->n_holes_components) : Json(nullptr);
  Json methods = Json::array();
  for (const MethodReport& m : report.methods) {
    methods.push_back(Json{{"method", to_string(m.method)},
                           {"coverage", m.coverage},
                           {"total_area", m.total_area},
                           {"hole_area", m.hole_area},
                           {"n_holes_components", m.n_holes_components}});
  }
  j["methods"] = methods;
  j["centerline_length_mm"] = report.centerline.size() >= 2 ? Json(arc_length(report.centerline)) : Json(nullptr);
  j["grid"] = grid_json(report.grid);
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::kMesh:
      return "mesh";
    case Method::kThreshold:
      return "threshold";
    case Method::kUnwrap:
      return "unwrap";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "mesh") return Method::kMesh;
  if (name == "threshold") return Method::kThreshold;
  if (name == "unwrap") return Method::kUnwrap;
  throw UsageError("unknown method '" + name + "' (expected mesh, threshold or unwrap)");
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::size_t begin = 0;
  while (begin <= list.size()) {
    const std::size_t end = std::min(list.find(',', begin), list.size());
    const Method m = parse_method(list.substr(begin, end - begin));
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      throw UsageError("method '" + std::string(to_string(m)) + "' listed twice");
    }
    out.push_back(m);
    begin = end + 1;
  }
  return out;
}

void PipelineConfig::validate() const {
  if (!(arc_length_mm > 0.0)) throw UsageError("arc length must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
  if (trim_mm < 0.0) throw UsageError("trim must be non-negative");
  if (!(band.threshold > 0.0 && band.threshold < 0.5)) throw UsageError("band threshold must lie in (0, 0.5)");
  if (band.halfwidth < 1) throw UsageError("band halfwidth must be at least 1");
  if (!(threshold_tau >= 0.0 && threshold_tau <= 1.0)) throw UsageError("threshold tau must lie in [0, 1]");
  if (unwrap_bins_s < 1 || unwrap_bins_theta < 1) throw UsageError("unwrap bin counts must be positive");
  if (margin_voxels < 0 || margin_voxels > 16) throw UsageError("margin must lie in [0, 16] voxels");
  if (jobs < 1) throw UsageError("jobs must be at least 1");
}

const MethodReport* SegmentReport::find(Method method) const {
  for (const MethodReport& m : methods) {
    if (m.method == method) return &m;
  }
  return nullptr;
}

namespace {

void run_methods(SegmentReport& report, const PointCloud& partial, const VoxelGrid& h, const PipelineConfig& config,
                 const std::vector<Method>& methods, const Polyline* centerline) {
  if (centerline != nullptr) {
    validate(*centerline);
    report.centerline = *centerline;
  } else {
    report.centerline = extract_centerline(h, config.delta);
  }
  for (Method m : methods) {
    switch (m) {
      case Method::kMesh:
        report.methods.push_back(mesh_method(report, h, partial, config));
        break;
      case Method::kThreshold:
        report.methods.push_back(threshold_method(report, h, partial, config));
        break;
      case Method::kUnwrap:
        report.methods.push_back(unwrap_method(report, h, partial, config));
        break;
    }
  }
}

void record_failure(SegmentReport& report, const Error& e) {
  report.ok = false;
  report.error = e.what();
  report.error_kind = e.kind();
  report.methods.clear();
}

}  // namespace

SegmentReport evaluate_heatmap(const std::string& id, const PointCloud& partial, const VoxelGrid& h,
                               const PipelineConfig& config, const std::vector<Method>& methods,
                               const Polyline* centerline) {
  SegmentReport report;
  report.id = id;
  report.grid = h.spec;
  try {
    config.validate();
    if (methods.empty()) throw UsageError("no coverage method requested");
    run_methods(report, partial, h, config, methods, centerline);
    report.ok = true;
  } catch (const Error& e) {
    record_failure(report, e);
  }
  return report;
}

SegmentReport run_segment(const std::string& id, const PointCloud& partial, const GridSpec& grid,
                          const CompletionBackend& backend, const PipelineConfig& config,
                          const std::vector<Method>& methods) {
  SegmentReport report;
  report.id = id;
  report.grid = grid;
  try {
    config.validate();
    if (methods.empty()) throw UsageError("no coverage method requested");
    if (partial.empty()) throw DataError("segment '" + id + "': empty partial cloud");
    const VoxelGrid h_input = encode_input(partial, grid);
    Completion completion = backend.complete(h_input, id);
    for (auto& w : completion.warnings) report.warnings.push_back(std::move(w));
    if (!same_grid(completion.heatmap.spec, grid)) {
      throw DataError("backend returned a heatmap on a different grid");
    }
    run_methods(report, partial, completion.heatmap, config, methods, nullptr);
    report.ok = true;
  } catch (const Error& e) {
    record_failure(report, e);
  }
  return report;
}

std::vector<CloudSegment> split_cloud(const PointCloud& cloud, const Polyline& centerline, double arc_length_mm,
                                      const std::string& prefix) {
  validate(centerline);
  const PolylineIndex index(centerline);
  const double length = index.length();
  if (!(arc_length_mm > 0.0) || arc_length_mm > length + kArcCountToleranceMm) {
    throw DataError("split: arc length must lie in (0, centerline length]");
  }
  const auto count = static_cast<std::size_t>(std::floor((length + kArcCountToleranceMm) / arc_length_mm));
  std::vector<CloudSegment> segments(count);
  for (std::size_t k = 0; k < count; ++k) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_s%02zu", k);
    segments[k].id = prefix + suffix;
    segments[k].s_begin = arc_length_mm * static_cast<double>(k);
    segments[k].s_end = std::min(arc_length_mm * static_cast<double>(k + 1), length);
  }
  for (const Vec3& p : cloud.points) {
    const double s = index.nearest(p).s;
    const auto k = static_cast<std::size_t>(std::floor(s / arc_length_mm));
    if (k < count) segments[k].partial.points.push_back(p);
  }
  return segments;
}

std::vector<SegmentReport> run_colon(const PointCloud& cloud, const Polyline& centerline,
                                     const CompletionBackend& backend, const PipelineConfig& config,
                                     const std::vector<Method>& methods, const std::string& prefix) {
  config.validate();
  const auto segments = split_cloud(cloud, centerline, config.arc_length_mm, prefix);
  std::vector<SegmentReport> reports(segments.size());
  parallel_for(segments.size(), config.jobs, [&](std::size_t k) {
    try {
      const GridSpec grid = fit_grid(segments[k].partial, config.margin_voxels);
      reports[k] = run_segment(segments[k].id, segments[k].partial, grid, backend, config, methods);
    } catch (const Error& e) {
      reports[k].id = segments[k].id;
      reports[k].ok = false;
      reports[k].error = e.what();
      reports[k].error_kind = e.kind();
    }
  });
  return reports;
}

std::string report_json(const SegmentReport& report, int indent) { return report_object(report).dump(indent); }

std::string combined_report_json(const std::vector<SegmentReport>& reports, int indent) {
  Json j;
  Json segments = Json::array();
  std::size_t failed = 0;
  double sum = 0.0;
  for (const SegmentReport& r : reports) {
    segments.push_back(report_object(r));
    if (!r.ok) {
      ++failed;
    } else {
      sum += r.methods.front().coverage;
    }
  }
  j["n_segments"] = reports.size();
  j["n_failed"] = failed;
  j["mean_coverage"] = failed < reports.size() ? Json(sum / static_cast<double>(reports.size() - failed)) : Json(nullptr);
  j["segments"] = segments;
  return j.dump(indent);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace covseg
