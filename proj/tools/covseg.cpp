#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "covseg/backend.hpp"
#include "covseg/centerline.hpp"
#include "covseg/datagen.hpp"
#include "covseg/dataset.hpp"
#include "covseg/encode.hpp"
#include "covseg/error.hpp"
#include "covseg/io.hpp"
#include "covseg/metrics.hpp"
#include "covseg/pipeline.hpp"
#include "log.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

using namespace covseg;

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help, bool out_required = true) {
  cmd->add_option("--seed", c.seed, "Master RNG seed")->capture_default_str();
  auto* out = cmd->add_option("--out", c.out, out_help);
  if (out_required) out->required();
  cmd->add_flag("--json", c.json, "Print a machine-readable summary on stdout");
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

std::vector<double> parse_doubles(const std::string& list) {
  std::vector<double> values;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  if (values.empty()) throw UsageError("empty number list");
  return values;
}

// Backend spec: "oracle" or "file:DIR".
std::unique_ptr<CompletionBackend> make_backend(const std::string& spec, OracleBackend::Lookup oracle_lookup) {
  if (spec == "oracle") {
    if (!oracle_lookup) throw UsageError("the oracle backend needs ground truth");
    return std::make_unique<OracleBackend>(std::move(oracle_lookup));
  }
  if (spec.starts_with("file:") && spec.size() > 5) return std::make_unique<FileStoreBackend>(spec.substr(5));
  throw UsageError("unknown backend '" + spec + "' (expected oracle or file:DIR)");
}

void log_warnings(const SegmentReport& report) {
  for (const auto& w : report.warnings) log::warn(report.id + ": " + w);
  if (!report.ok) log::error(report.id + ": " + report.error);
}

void write_segment_outputs(const fs::path& dir, const SegmentReport& report) {
  io::write_text(dir / (report.id + ".report.json"), report_json(report) + "\n");
  if (!report.surface.mesh.faces.empty()) {
    io::write_mesh(dir / (report.id + ".mesh.ply"), report.surface.mesh, &report.surface.vertex_is_hole);
  }
  if (report.centerline.size() > 0) io::write_polyline(dir / (report.id + ".centerline.json"), report.centerline);
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  Common common;
  DatasetConfig config;
};

int run_gen_data(const GenDataArgs& a) {
  const fs::path out = a.common.out;
  DatasetConfig config = a.config;
  config.seed = a.common.seed;
  config.validate();
  log::info("generating " + std::to_string(config.n_colons) + " colon(s) into " + out.string());
  const auto records = write_dataset(config, out);
  if (a.common.json) {
    print_json({{"n_colons", config.n_colons},
                {"n_samples", records.size()},
                {"manifest", (out / "manifest.json").string()}});
  }
  return 0;
}

// ---------------------------------------------------------------- encode

struct EncodeArgs {
  Common common;
  std::string partial, gt_mesh, gt_centerline, out_target, grid_from;
  int margin = 2;
};

int run_encode(const EncodeArgs& a) {
  if (!a.out_target.empty() && (a.gt_mesh.empty() || a.gt_centerline.empty())) {
    throw UsageError("--out-target needs --gt-mesh and --gt-centerline");
  }
  const PointCloud partial = io::read_cloud(a.partial);
  TriMesh gt_mesh;
  if (!a.gt_mesh.empty()) gt_mesh = io::read_mesh(a.gt_mesh);
  GridSpec grid;
  if (!a.grid_from.empty()) {
    grid = io::validate_volume(a.grid_from);
  } else if (!gt_mesh.vertices.empty()) {
    grid = fit_grid_with_truth(partial, gt_mesh, a.margin);
  } else {
    grid = fit_grid(partial, a.margin);
  }
  ensure_parent(a.common.out);
  io::write_volume(a.common.out, encode_input(partial, grid));
  ordered_json summary{{"out", a.common.out}};
  if (!a.out_target.empty()) {
    TargetDiagnostics diag;
    const Polyline centerline = io::read_polyline(a.gt_centerline);
    ensure_parent(a.out_target);
    io::write_volume(a.out_target, encode_target(gt_mesh, centerline, grid, kHeatmapSteepness, &diag));
    if (diag.overlap_voxels > 0) log::warn(std::to_string(diag.overlap_voxels) + " voxel(s) on both surface and centerline");
    summary["out_target"] = a.out_target;
    summary["overlap_voxels"] = diag.overlap_voxels;
  }
  summary["grid"] = {{"dims", {grid.dims[0], grid.dims[1], grid.dims[2]}},
                     {"origin_mm", vec_json(grid.origin)},
                     {"voxel_size_mm", grid.voxel_size}};
  if (a.common.json) print_json(summary);
  return 0;
}

// ---------------------------------------------------------------- centerline

struct CenterlineArgs {
  Common common;
  std::string heatmap;
  double delta = 0.1;
};

int run_centerline(const CenterlineArgs& a) {
  const VoxelGrid h = io::read_volume(a.heatmap);
  const Polyline line = extract_centerline(h, a.delta);
  ensure_parent(a.common.out);
  io::write_polyline(a.common.out, line);
  if (a.common.json) {
    ordered_json summary;
    summary["n_points"] = line.size();
    summary["length_mm"] = arc_length(line);
    summary["start_mm"] = vec_json(line.points.front());
    summary["end_mm"] = vec_json(line.points.back());
    print_json(summary);
  }
  return 0;
}

// ---------------------------------------------------------------- coverage

struct CoverageArgs {
  Common common;
  std::string heatmap, partial, centerline, methods = "mesh", mesh_out, backend, id, gt_mesh, gt_centerline;
  PipelineConfig pipeline;
};

int run_coverage(const CoverageArgs& a) {
  a.pipeline.validate();
  const auto methods = parse_methods(a.methods);
  const PointCloud partial = io::read_cloud(a.partial);
  std::string id = a.id.empty() ? fs::path(a.partial).stem().stem().string() : a.id;

  VoxelGrid h;
  std::vector<std::string> backend_warnings;
  if (a.backend.empty()) {
    if (a.heatmap.empty()) throw UsageError("--heatmap is required without --backend");
    h = io::read_volume(a.heatmap);
  } else {
    // With a backend, --heatmap (if any) is the input heatmap whose grid the
    // prediction must share.
    OracleBackend::Lookup lookup;
    if (!a.gt_mesh.empty() && !a.gt_centerline.empty()) {
      GroundTruth gt{io::read_mesh(a.gt_mesh), io::read_polyline(a.gt_centerline)};
      lookup = [gt](const std::string&) { return gt; };
    }
    const auto backend = make_backend(a.backend, lookup);
    VoxelGrid h_input;
    if (!a.heatmap.empty()) {
      h_input = io::read_volume(a.heatmap);
    } else {
      const GridSpec grid = a.gt_mesh.empty() ? fit_grid(partial, a.pipeline.margin_voxels)
                                              : fit_grid_with_truth(partial, io::read_mesh(a.gt_mesh),
                                                                    a.pipeline.margin_voxels);
      h_input = encode_input(partial, grid);
    }
    Completion completion = backend->complete(h_input, id);
    h = std::move(completion.heatmap);
    backend_warnings = std::move(completion.warnings);
  }

  Polyline given;
  if (!a.centerline.empty()) given = io::read_polyline(a.centerline);
  SegmentReport report =
      evaluate_heatmap(id, partial, h, a.pipeline, methods, a.centerline.empty() ? nullptr : &given);
  report.warnings.insert(report.warnings.begin(), backend_warnings.begin(), backend_warnings.end());
  log_warnings(report);

  const fs::path out = a.common.out;
  ensure_parent(out);
  io::write_text(out, report_json(report) + "\n");
  if (!report.surface.mesh.faces.empty()) {
    fs::path mesh_out = a.mesh_out;
    if (mesh_out.empty()) mesh_out = fs::path(out).replace_extension().string() + ".mesh.ply";
    ensure_parent(mesh_out);
    io::write_mesh(mesh_out, report.surface.mesh, &report.surface.vertex_is_hole);
  }
  if (a.common.json) std::cout << report_json(report) << '\n';
  return report.ok ? 0 : static_cast<int>(report.error_kind);
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  Common common;
  std::string manifest, methods = "mesh,threshold,unwrap", backend = "oracle", noise_sigmas = "0,0.5";
  bool with_timings = false;
  bool summary = false;
  bool fit_partial_only = false;
  std::size_t limit = 0;
  PipelineConfig pipeline;
};

ordered_json summaries_json(const std::vector<BenchmarkSummary>& summaries) {
  ordered_json out = ordered_json::array();
  for (const auto& s : summaries) {
    out.push_back({{"method", to_string(s.method)},
                   {"noise_sigma_mm", s.noise_sigma_mm},
                   {"n", s.n},
                   {"n_failed", s.n_failed},
                   {"mae", s.mae},
                   {"error_q95", s.error_q95},
                   {"centerline_precision_median_2mm", s.centerline_precision_median},
                   {"centerline_recall_median_2mm", s.centerline_recall_median},
                   {"crack_failures", s.crack_failures}});
  }
  return out;
}

int run_bench(const BenchArgs& a) {
  BenchmarkConfig config;
  config.pipeline = a.pipeline;
  config.pipeline.validate();
  config.methods = parse_methods(a.methods);
  config.noise_sigmas_mm = parse_doubles(a.noise_sigmas);
  for (double s : config.noise_sigmas_mm) {
    if (s < 0.0) throw UsageError("noise sigmas must be non-negative");
  }
  config.seed = a.common.seed;
  config.fit_on_ground_truth = !a.fit_partial_only;

  const fs::path manifest_path = a.manifest;
  const fs::path base = manifest_path.parent_path();
  auto records = io::read_manifest(manifest_path);
  if (a.limit > 0 && records.size() > a.limit) records.resize(a.limit);
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < records.size(); ++i) by_id.emplace(records[i].id, i);

  auto lookup = [&](const std::string& id) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("no ground truth for sample '" + id + "'");
    const auto& r = records[it->second];
    return GroundTruth{io::read_mesh(base / r.gt_mesh), io::read_polyline(base / r.gt_centerline)};
  };
  const auto backend = make_backend(a.backend, lookup);
  log::info("benchmarking " + std::to_string(records.size()) + " sample(s) with backend " + backend->name());

  const BenchmarkResult result = run_benchmark(
      records.size(), [&](std::size_t i) { return load_sample(records[i], base); }, *backend, config);
  for (const auto& row : result.rows) {
    if (!row.ok()) log::warn(row.id + " [" + to_string(row.method) + "]: " + row.error);
  }

  const fs::path out = a.common.out;
  ensure_parent(out);
  io::write_text(out, benchmark_csv(result, a.with_timings));
  if (a.summary) io::write_text(fs::path(out).replace_extension(".summary.json"), benchmark_json(result) + "\n");
  if (a.common.json) print_json({{"n_rows", result.rows.size()}, {"summaries", summaries_json(result.summaries)}});
  return 0;
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
  Common common;
  bool whole_colon = false;
  std::string partial, cloud, centerline, id, backend = "oracle", gt_mesh, gt_centerline, grid_from,
      methods = "mesh";
  PipelineConfig pipeline;
};

int run_pipeline(const PipelineArgs& a) {
  a.pipeline.validate();
  const auto methods = parse_methods(a.methods);
  const fs::path out = a.common.out;
  std::vector<SegmentReport> reports;

  if (a.whole_colon) {
    if (a.cloud.empty()) throw UsageError("whole-colon mode needs --cloud");
    if (a.centerline.empty()) throw UsageError("whole-colon mode needs a user-supplied --centerline");
    const PointCloud cloud = io::read_cloud(a.cloud);
    const Polyline centerline = io::read_polyline(a.centerline);
    const std::string prefix = a.id.empty() ? fs::path(a.cloud).stem().stem().string() : a.id;

    OracleBackend::Lookup lookup;
    auto truth = std::make_shared<std::map<std::string, GroundTruth>>();
    if (!a.gt_mesh.empty()) {
      datagen::ColonModel model;
      model.mesh = io::read_mesh(a.gt_mesh);
      model.centerline = centerline;
      model.tube_face_count = model.mesh.faces.size();
      const auto segments = datagen::split_colon(model, a.pipeline.arc_length_mm);
      for (std::size_t k = 0; k < segments.size(); ++k) {
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "_s%02zu", k);
        (*truth)[prefix + suffix] = GroundTruth{segments[k].mesh, segments[k].centerline};
      }
      lookup = [truth](const std::string& id) {
        const auto it = truth->find(id);
        if (it == truth->end()) throw DataError("no ground truth for segment '" + id + "'");
        return it->second;
      };
    }
    const auto backend = make_backend(a.backend, lookup);
    reports = run_colon(cloud, centerline, *backend, a.pipeline, methods, prefix);
  } else {
    if (a.partial.empty()) throw UsageError("segment mode needs --partial (or use --whole-colon)");
    const PointCloud partial = io::read_cloud(a.partial);
    const std::string id = a.id.empty() ? fs::path(a.partial).stem().stem().string() : a.id;
    TriMesh gt_mesh;
    OracleBackend::Lookup lookup;
    if (!a.gt_mesh.empty() && !a.gt_centerline.empty()) {
      gt_mesh = io::read_mesh(a.gt_mesh);
      GroundTruth gt{gt_mesh, io::read_polyline(a.gt_centerline)};
      lookup = [gt](const std::string&) { return gt; };
    }
    const auto backend = make_backend(a.backend, lookup);
    GridSpec grid;
    if (!a.grid_from.empty()) {
      grid = io::validate_volume(a.grid_from);
    } else if (!gt_mesh.vertices.empty()) {
      grid = fit_grid_with_truth(partial, gt_mesh, a.pipeline.margin_voxels);
    } else {
      grid = fit_grid(partial, a.pipeline.margin_voxels);
    }
    reports.push_back(run_segment(id, partial, grid, *backend, a.pipeline, methods));
  }

  ensure_dir(out);
  std::size_t failed = 0;
  for (const auto& report : reports) {
    log_warnings(report);
    write_segment_outputs(out, report);
    if (!report.ok) ++failed;
  }
  const std::string combined = combined_report_json(reports);
  io::write_text(out / "combined.json", combined + "\n");
  if (a.common.json) std::cout << combined << '\n';
  if (reports.empty()) throw DataError("no segments to process");
  if (failed == reports.size()) return static_cast<int>(reports.front().error_kind);
  return 0;
}

void add_pipeline_options(CLI::App* cmd, PipelineConfig& p) {
  cmd->add_option("--trim-mm", p.trim_mm, "Length trimmed at both segment ends")->capture_default_str();
  cmd->add_option("--delta", p.delta, "Centerline endpoint threshold")->capture_default_str();
  cmd->add_option("--margin", p.margin_voxels, "Grid margin in voxels")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coverage estimation for colonoscopy reconstructions"};
  app.require_subcommand(1);
  std::function<int()> command;

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset and manifest");
  gen_cmd->add_option("--seed", gen.common.seed, "Master RNG seed")->capture_default_str();
  gen_cmd->add_option("--out,--out-dir", gen.common.out, "Output directory")->required();
  gen_cmd->add_flag("--json", gen.common.json, "Print a machine-readable summary on stdout");
  gen_cmd->add_option("--n-colons", gen.config.n_colons, "Number of colons")->capture_default_str();
  gen_cmd->add_option("--arc-length-mm", gen.config.arc_length_mm, "Segment arc length")->capture_default_str();
  gen_cmd->add_option("--permutations", gen.config.permutations, "Hole draws per segment")->capture_default_str();
  gen_cmd->add_option("--colon-length-mm", gen.config.colon.length_mm, "Colon centerline length")
      ->capture_default_str();
  gen_cmd->add_option("--points-per-mm2", gen.config.holes.points_per_mm2, "Partial cloud density")
      ->capture_default_str();
  gen_cmd->add_flag("--encode", gen.config.encode, "Also write h_input/h_target volumes");
  gen_cmd->add_flag("--augment", gen.config.augment, "Apply scale/rotation/deformation/noise augmentation");
  gen_cmd->add_option("--jobs", gen.config.jobs, "Worker threads")->capture_default_str();
  gen_cmd->callback([&] { command = [&] { return run_gen_data(gen); }; });

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "Encode input (and target) heatmaps");
  add_common(enc_cmd, enc.common, "Input heatmap volume");
  enc_cmd->add_option("--partial", enc.partial, "Partial point cloud (PLY)")->required();
  enc_cmd->add_option("--gt-mesh", enc.gt_mesh, "Ground-truth mesh (PLY)");
  enc_cmd->add_option("--gt-centerline", enc.gt_centerline, "Ground-truth centerline (JSON)");
  enc_cmd->add_option("--out-target", enc.out_target, "Target heatmap volume");
  enc_cmd->add_option("--grid-from", enc.grid_from, "Reuse the grid of an existing volume");
  enc_cmd->add_option("--margin", enc.margin, "Grid margin in voxels")->capture_default_str();
  enc_cmd->callback([&] { command = [&] { return run_encode(enc); }; });

  CenterlineArgs cl;
  auto* cl_cmd = app.add_subcommand("centerline", "Extract the centerline of a completed heatmap");
  add_common(cl_cmd, cl.common, "Centerline JSON");
  cl_cmd->add_option("--heatmap", cl.heatmap, "Heatmap volume")->required();
  cl_cmd->add_option("--delta", cl.delta, "Endpoint threshold")->capture_default_str();
  cl_cmd->callback([&] { command = [&] { return run_centerline(cl); }; });

  CoverageArgs cov;
  auto* cov_cmd = app.add_subcommand("coverage", "Estimate coverage from a completed heatmap");
  add_common(cov_cmd, cov.common, "Report JSON");
  cov_cmd->add_option("--heatmap", cov.heatmap, "Completed heatmap (input heatmap with --backend)");
  cov_cmd->add_option("--partial", cov.partial, "Partial point cloud (PLY)")->required();
  cov_cmd->add_option("--centerline", cov.centerline, "Centerline JSON (extracted when absent)");
  cov_cmd->add_option("--method", cov.methods, "mesh|threshold|unwrap, comma separated")->capture_default_str();
  cov_cmd->add_option("--mesh-out", cov.mesh_out, "Completed mesh PLY (default: next to the report)");
  cov_cmd->add_option("--backend", cov.backend, "Complete the input first: oracle | file:DIR");
  cov_cmd->add_option("--id", cov.id, "Sample id (default: partial file stem)");
  cov_cmd->add_option("--gt-mesh", cov.gt_mesh, "Ground-truth mesh for the oracle backend");
  cov_cmd->add_option("--gt-centerline", cov.gt_centerline, "Ground-truth centerline for the oracle backend");
  add_pipeline_options(cov_cmd, cov.pipeline);
  cov_cmd->callback([&] { command = [&] { return run_coverage(cov); }; });

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark coverage estimation over a manifest");
  add_common(bench_cmd, bench.common, "Results CSV");
  bench_cmd->add_option("--manifest", bench.manifest, "Dataset manifest")->required();
  bench_cmd->add_option("--methods", bench.methods, "Comma-separated methods")->capture_default_str();
  bench_cmd->add_option("--backend", bench.backend, "oracle | file:DIR")->capture_default_str();
  bench_cmd->add_option("--noise-sigmas", bench.noise_sigmas, "Comma-separated noise levels (mm)")
      ->capture_default_str();
  bench_cmd->add_flag("--with-timings", bench.with_timings, "Add a runtime_ms column");
  bench_cmd->add_flag("--summary", bench.summary, "Also write the summary JSON next to --out (<stem>.summary.json)");
  bench_cmd->add_flag("--fit-partial-only", bench.fit_partial_only, "Fit grids on the partial cloud only");
  bench_cmd->add_option("--limit", bench.limit, "Use only the first N samples");
  bench_cmd->add_option("--jobs", bench.pipeline.jobs, "Worker threads")->capture_default_str();
  add_pipeline_options(bench_cmd, bench.pipeline);
  bench_cmd->callback([&] { command = [&] { return run_bench(bench); }; });

  PipelineArgs pipe;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full pipeline on a segment or a whole colon");
  add_common(pipe_cmd, pipe.common, "Output directory");
  pipe_cmd->add_flag("--whole-colon", pipe.whole_colon, "Split a whole-colon cloud into segments");
  pipe_cmd->add_option("--partial", pipe.partial, "Segment point cloud (segment mode)");
  pipe_cmd->add_option("--cloud", pipe.cloud, "Whole-colon point cloud");
  pipe_cmd->add_option("--centerline", pipe.centerline, "Whole-colon centerline JSON");
  pipe_cmd->add_option("--id", pipe.id, "Segment id or whole-colon prefix");
  pipe_cmd->add_option("--backend", pipe.backend, "oracle | file:DIR")->capture_default_str();
  pipe_cmd->add_option("--gt-mesh", pipe.gt_mesh, "Ground-truth mesh for the oracle backend");
  pipe_cmd->add_option("--gt-centerline", pipe.gt_centerline, "Ground-truth segment centerline (segment mode)");
  pipe_cmd->add_option("--grid-from", pipe.grid_from, "Reuse the grid of an existing volume");
  pipe_cmd->add_option("--methods", pipe.methods, "Comma-separated methods")->capture_default_str();
  pipe_cmd->add_option("--arc-length-mm", pipe.pipeline.arc_length_mm, "Segment arc length")->capture_default_str();
  pipe_cmd->add_option("--jobs", pipe.pipeline.jobs, "Worker threads")->capture_default_str();
  add_pipeline_options(pipe_cmd, pipe.pipeline);
  pipe_cmd->callback([&] { command = [&] { return run_pipeline(pipe); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(covseg::ErrorKind::kUsage);
  }

  try {
    return command();
  } catch (const covseg::Error& e) {
    covseg::log::error(std::string(covseg::to_string(e.kind())) + " error: " + e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    covseg::log::error(std::string("unexpected error: ") + e.what());
    return 1;
  }
}
