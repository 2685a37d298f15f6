// Acceptance run: one PASS/FAIL line per criterion with the measured values.
// Exit status is the number of failed criteria.
//
//   covseg_acceptance [n_colons]   (default 50 colons = 200 segments)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "covseg/centerline.hpp"
#include "covseg/dataset.hpp"
#include "covseg/encode.hpp"
#include "covseg/marching_cubes.hpp"
#include "covseg/metrics.hpp"
#include "covseg/pipeline.hpp"
#include "covseg/sampling.hpp"
#include "support.hpp"

using namespace covseg;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool pass, const char* name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const BenchmarkSummary& summary_of(const BenchmarkResult& r, Method m, double sigma) {
  for (const auto& s : r.summaries) {
    if (s.method == m && s.noise_sigma_mm == sigma) return s;
  }
  throw std::runtime_error("missing summary cell");
}

struct Batch {
  std::vector<BenchmarkSample> samples;
  std::map<std::string, GroundTruth> truth;
};

Batch make_batch(int n_colons) {
  DatasetConfig config;
  config.seed = 20240601;
  config.permutations = 1;
  Batch batch;
  for (int c = 0; c < n_colons; ++c) {
    for (const auto& s : generate_colon_samples(config, c).samples) {
      batch.samples.push_back(to_benchmark_sample(s));
      batch.truth[s.id] = {s.gt_mesh, s.gt_centerline};
    }
  }
  return batch;
}

BenchmarkResult bench(const Batch& batch, std::vector<Method> methods, double sigma) {
  BenchmarkConfig config;
  config.methods = std::move(methods);
  config.noise_sigmas_mm = {sigma};
  config.seed = 7;
  const OracleBackend oracle(batch.truth);
  return run_benchmark(batch.samples.size(), [&](std::size_t i) { return batch.samples[i]; }, oracle, config);
}

void check_benchmarks(int n_colons) {
  const auto t0 = std::chrono::steady_clock::now();
  const Batch batch = make_batch(n_colons);
  const BenchmarkResult clean = bench(batch, {Method::kMesh, Method::kThreshold, Method::kUnwrap}, 0.0);
  const double runtime = seconds_since(t0);
  const BenchmarkResult noisy = bench(batch, {Method::kMesh, Method::kThreshold, Method::kUnwrap}, 0.5);
  const std::size_t n = batch.samples.size();

  const BenchmarkSummary& mesh = summary_of(clean, Method::kMesh, 0.0);
  report(mesh.n_failed == 0 && mesh.mae <= 0.02 && mesh.error_q95 <= 0.05 && runtime <= 300.0,
         "oracle end-to-end coverage",
         format("n=%zu failed=%zu MAE=%.4f (<=0.02) q95=%.4f (<=0.05) runtime=%.0fs (<=300, all methods, 1 thread)",
                n, mesh.n_failed, mesh.mae, mesh.error_q95, runtime));

  const BenchmarkSummary& mesh_noisy = summary_of(noisy, Method::kMesh, 0.5);
  report(mesh_noisy.n_failed == 0 && mesh_noisy.mae >= mesh.mae && mesh_noisy.mae <= 0.06, "noise ordering",
         format("MAE sigma=0: %.4f, sigma=0.5mm: %.4f (<=0.06, must not decrease)", mesh.mae, mesh_noisy.mae));

  report(mesh.centerline_precision_median == 1.0 && mesh.centerline_recall_median == 1.0 &&
             mesh.centerline_precision_q5 >= 0.9 && mesh.centerline_recall_q5 >= 0.9,
         "centerline quality",
         format("2mm precision median=%.3f q5=%.3f, recall median=%.3f q5=%.3f", mesh.centerline_precision_median,
                mesh.centerline_precision_q5, mesh.centerline_recall_median, mesh.centerline_recall_q5));

  const BenchmarkSummary& threshold = summary_of(clean, Method::kThreshold, 0.0);
  const BenchmarkSummary& unwrap = summary_of(clean, Method::kUnwrap, 0.0);
  report(mesh.mae < threshold.mae && mesh.mae < unwrap.mae, "method ordering",
         format("MAE mesh=%.4f threshold=%.4f unwrap=%.4f, margin over unwrap %+.4f (noisy: %.4f %.4f %.4f)",
                mesh.mae, threshold.mae, unwrap.mae, unwrap.mae - mesh.mae, mesh_noisy.mae,
                summary_of(noisy, Method::kThreshold, 0.5).mae, summary_of(noisy, Method::kUnwrap, 0.5).mae));

  std::size_t checked = 0, cracked = 0;
  for (const auto* result : {&clean, &noisy}) {
    for (const BenchmarkRow& row : result->rows) {
      if (row.method != Method::kMesh || !row.ok()) continue;
      ++checked;
      cracked += row.crack_free ? 0 : 1;
    }
  }
  IsoSurface sphere;
  {
    ScalarField f(test::cube_grid(64));
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const Index3 v = f.spec.coords(i);
      f.values[i] = std::hypot(v[0] - 31.5, v[1] - 31.5, v[2] - 31.5) - 20.0;
    }
    sphere = marching_cubes(f);
  }
  const double exact = 4.0 * std::numbers::pi * 400.0;
  const double area_error = std::abs(surface_area(sphere.mesh) - exact) / exact;
  report(area_error <= 0.03 && cracked == 0 && checked > 0, "marching cubes",
         format("sphere r=20 area error=%.2f%% (<=3%%); crack-free meshes %zu/%zu", 100.0 * area_error,
                checked - cracked, checked));
}

void check_fast_marching() {
  const GridSpec spec = test::cube_grid(32);
  double uniform_worst = 0.0;
  {
    const Index3 start{16, 16, 16};
    const TravelTimeField t = fast_march(ScalarField(spec, 1.0), start);
    for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
      const Index3 v = spec.coords(i);
      const double d = std::hypot(v[0] - 16.0, v[1] - 16.0, v[2] - 16.0);
      if (d > 5.0) uniform_worst = std::max(uniform_worst, std::abs(t.time.values[i] - d) / d);
    }
  }
  Rng rng(1234);
  double field_worst = 0.0;
  std::size_t compared = 0;
  for (int field = 0; field < 10; ++field) {
    Index3 start{};
    const ScalarField speed = test::corridor_field(spec, rng, start);
    const TravelTimeField t = fast_march(speed, start);
    const auto oracle = test::dijkstra6(spec, speed.values, start);
    for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
      if (speed.values[i] < 0.5 || oracle[i] < 5.0 || oracle[i] > 0.5 / kMinSpeed) continue;
      field_worst = std::max(field_worst, std::abs(t.time.values[i] - oracle[i]) / oracle[i]);
      ++compared;
    }
  }
  report(uniform_worst <= 0.05 && field_worst <= 0.10, "fast marching vs oracles",
         format("uniform worst=%.2f%% (<=5%% beyond 5 voxels); 10 corridor fields worst=%.2f%% (<=10%%, %zu voxels)",
                100.0 * uniform_worst, 100.0 * field_worst, compared));
}

void check_heatmaps() {
  const GridSpec spec = test::cube_grid(32);
  double worst = 0.0;
  {
    VoxelSet surface(spec.dims), line(spec.dims);
    surface.insert({10, 16, 16});
    line.insert({20, 16, 16});
    PointCloud partial{{{10.0, 16.0, 16.0}}};
    const VoxelGrid in = encode_input(partial, spec);
    const VoxelGrid target = encode_target(surface, line, spec);
    worst = std::max(worst, std::abs(in(10, 16, 16) - 0.0));
    worst = std::max(worst, std::abs(in(15, 16, 16) - std::tanh(1.0)));
    worst = std::max(worst, std::abs(target(10, 16, 16) - 0.0));
    worst = std::max(worst, std::abs(target(20, 16, 16) - 1.0));
    worst = std::max(worst, std::abs(target(15, 16, 16) - 0.5));
  }
  DatasetConfig config;
  config.seed = 99;
  config.permutations = 3;
  const ColonSamples colon = generate_colon_samples(config, 0);
  double identity_worst = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    const auto& s = colon.samples[k];
    const GridSpec grid = fit_grid_with_truth(s.partial, s.gt_mesh);
    const VoxelSet surface = voxelize(sample_surface_regular(s.gt_mesh, 0.5 * grid.voxel_size), grid);
    const VoxelSet line = voxelize_centerline(s.gt_centerline, grid);
    const VoxelGrid a = encode_target(surface, line, grid);
    const VoxelGrid b = encode_target(line, surface, grid);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      identity_worst = std::max(identity_worst, std::abs(double(a.values[i]) + double(b.values[i]) - 1.0));
    }
  }
  report(worst <= 1e-6 && identity_worst <= 1e-6, "heatmap formulas",
         format("spot checks worst=%.2e; complement identity worst=%.2e over 10 samples", worst, identity_worst));
}

std::string tree_bytes(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::ostringstream all;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    all << fs::relative(f, root).string() << '\n' << in.rdbuf();
  }
  return all.str();
}

void check_determinism() {
  const fs::path base = fs::temp_directory_path() / "covseg_acceptance";
  fs::remove_all(base);
  DatasetConfig config;
  config.seed = 5;
  config.permutations = 2;
  config.colon.length_mm = 220.0;
  config.encode = true;
  write_dataset(config, base / "a");
  config.jobs = 2;
  write_dataset(config, base / "b");
  const bool same_data = tree_bytes(base / "a") == tree_bytes(base / "b");

  const ColonSamples colon = generate_colon_samples(config, 0);
  TriMesh wall = colon.model.mesh;
  wall.faces.resize(colon.model.tube_face_count);
  const datagen::CropResult crop = datagen::crop_holes(wall, datagen::HoleSamplerConfig{}, 3);
  auto run = [&](int jobs) {
    std::map<std::string, GroundTruth> truth;
    for (std::size_t k = 0; k < colon.segments.size(); ++k) {
      truth[format("c_s%02zu", k)] = {colon.segments[k].mesh, colon.segments[k].centerline};
    }
    PipelineConfig pipeline;
    pipeline.jobs = jobs;
    const auto reports = run_colon(crop.partial, colon.model.centerline, OracleBackend(truth), pipeline,
                                   {Method::kMesh, Method::kThreshold, Method::kUnwrap}, "c");
    std::string bytes = combined_report_json(reports);
    for (const auto& r : reports) bytes += report_json(r);
    return bytes;
  };
  const std::string first = run(1);
  const bool same_reports = first == run(1) && first == run(2);
  fs::remove_all(base);
  report(same_data && same_reports, "determinism",
         format("dataset trees identical: %s; pipeline reports identical: %s (%zu bytes)", same_data ? "yes" : "no",
                same_reports ? "yes" : "no", first.size()));
}

}  // namespace

int main(int argc, char** argv) {
  const int n_colons = argc > 1 ? std::max(1, std::atoi(argv[1])) : 50;
  try {
    check_benchmarks(n_colons);
    check_fast_marching();
    check_heatmaps();
    check_determinism();
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance run aborted: %s\n", e.what());
    return 100;
  }
  std::printf("%d criteria failed\n", failures);
  return failures;
}
