#include <doctest.h>

#include <cmath>
#include <map>

#include <json.hpp>

#include "covseg/dataset.hpp"
#include "covseg/error.hpp"
#include "covseg/metrics.hpp"
#include "covseg/pipeline.hpp"
#include "covseg/rng.hpp"
#include "covseg/sampling.hpp"
#include "support.hpp"

using namespace covseg;

namespace {

TriMesh wall_of(const datagen::ColonModel& model) {
  TriMesh wall = model.mesh;
  wall.faces.resize(model.tube_face_count);
  return wall;
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("mesh") == Method::kMesh);
  CHECK(parse_method("unwrap") == Method::kUnwrap);
  CHECK_THROWS_AS(parse_method("Mesh"), UsageError);
  CHECK(parse_methods("threshold,mesh") == std::vector<Method>{Method::kThreshold, Method::kMesh});
  CHECK_THROWS_AS(parse_methods("mesh,mesh"), UsageError);
  CHECK_THROWS_AS(parse_methods("mesh,"), UsageError);
  CHECK_THROWS_AS(parse_methods(""), UsageError);
  CHECK_THROWS_AS(parse_methods("mesh,bogus"), UsageError);
  for (Method m : {Method::kMesh, Method::kThreshold, Method::kUnwrap}) CHECK(parse_method(to_string(m)) == m);
}

TEST_CASE("pipeline config validation") {
  PipelineConfig config;
  CHECK_NOTHROW(config.validate());
  config.delta = 1.0;
  CHECK_THROWS_AS(config.validate(), UsageError);
  config = {};
  config.trim_mm = -1.0;
  CHECK_THROWS_AS(config.validate(), UsageError);
  config = {};
  config.arc_length_mm = 0.0;
  CHECK_THROWS_AS(config.validate(), UsageError);
}

TEST_CASE("hole-free segment is fully covered") {
  const auto segments = datagen::split_colon(datagen::generate_colon(21), 70.0);
  const auto& seg = segments[1];
  Rng rng(4);
  const PointCloud partial = sample_surface_random(seg.mesh, 4.0, rng);
  const GridSpec grid = fit_grid_with_truth(partial, seg.mesh);
  const OracleBackend oracle(std::map<std::string, GroundTruth>{{"full", {seg.mesh, seg.centerline}}});
  const SegmentReport r =
      run_segment("full", partial, grid, oracle, PipelineConfig{}, {Method::kMesh, Method::kThreshold, Method::kUnwrap});
  REQUIRE(r.ok);
  CHECK(r.find(Method::kMesh)->coverage >= 0.97);
  // The point-based baselines read sparse sampling as small gaps.
  CHECK(r.find(Method::kThreshold)->coverage >= 0.9);
  CHECK(r.find(Method::kUnwrap)->coverage >= 0.9);
  CHECK(r.cracks.ok());
}

TEST_CASE("segment failures are recorded, not thrown") {
  const OracleBackend oracle(std::map<std::string, GroundTruth>{});
  const GridSpec grid = test::cube_grid(64);
  const SegmentReport empty = run_segment("x", PointCloud{}, grid, oracle, PipelineConfig{});
  CHECK_FALSE(empty.ok);
  CHECK(empty.error_kind == ErrorKind::kData);
  const SegmentReport unknown = run_segment("x", PointCloud{{{30, 30, 30}}}, grid, oracle, PipelineConfig{});
  CHECK_FALSE(unknown.ok);
  const auto json = nlohmann::json::parse(report_json(unknown));
  CHECK(json.at("status") != "ok");
}

TEST_CASE("whole-colon run") {
  datagen::ColonConfig colon_config;
  colon_config.length_mm = 210.0;
  const datagen::ColonModel model = datagen::generate_colon(8, colon_config);
  const TriMesh wall = wall_of(model);
  const datagen::CropResult crop = datagen::crop_holes(wall, datagen::HoleSamplerConfig{}, 17);

  datagen::ColonModel truth_model = model;
  truth_model.mesh = wall;
  truth_model.tube_face_count = wall.faces.size();
  const auto segments = datagen::split_colon(truth_model, 70.0);
  REQUIRE(segments.size() == 3);
  std::map<std::string, GroundTruth> truth;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    char id[32];
    std::snprintf(id, sizeof id, "colon_s%02zu", k);
    truth[id] = {segments[k].mesh, segments[k].centerline};
  }
  const OracleBackend oracle(truth);
  const std::vector<SegmentReport> reports =
      run_colon(crop.partial, model.centerline, oracle, PipelineConfig{}, {Method::kMesh}, "colon");
  REQUIRE(reports.size() == 3);

  double error = 0.0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    REQUIRE(reports[k].ok);
    const double gt = 1.0 - datagen::removed_area_fraction(segments[k].mesh, crop.holes);
    error += std::abs(reports[k].find(Method::kMesh)->coverage - gt);
  }
  CHECK(error / 3.0 <= 0.03);

  const auto combined = nlohmann::json::parse(combined_report_json(reports));
  CHECK(combined.is_object());

  // Independent of the thread count.
  PipelineConfig parallel;
  parallel.jobs = 3;
  const auto again = run_colon(crop.partial, model.centerline, oracle, parallel, {Method::kMesh}, "colon");
  CHECK(combined_report_json(again) == combined_report_json(reports));
}

TEST_CASE("split_cloud") {
  const Polyline axis = test::straight_line({0, 0, 0}, {0, 0, 150}, 150);
  PointCloud cloud;
  for (int z = 0; z < 150; ++z) cloud.points.push_back({10.0, 0.0, z + 0.5});
  const auto parts = split_cloud(cloud, axis, 70.0, "p");
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].id == "p_s00");
  CHECK(parts[1].id == "p_s01");
  CHECK(parts[0].partial.size() == 70);
  CHECK(parts[1].partial.size() == 70);
  CHECK_THROWS_AS(split_cloud(cloud, axis, 200.0, "p"), DataError);
}

TEST_CASE("reports are deterministic") {
  DatasetConfig config;
  config.seed = 9;
  config.permutations = 2;
  const ColonSamples colon = generate_colon_samples(config, 0);
  const auto& s = colon.samples[1];
  const OracleBackend oracle(std::map<std::string, GroundTruth>{{s.id, {s.gt_mesh, s.gt_centerline}}});
  const GridSpec grid = fit_grid_with_truth(s.partial, s.gt_mesh);
  const std::vector<Method> all{Method::kMesh, Method::kThreshold, Method::kUnwrap};
  const std::string a = report_json(run_segment(s.id, s.partial, grid, oracle, PipelineConfig{}, all));
  const std::string b = report_json(run_segment(s.id, s.partial, grid, oracle, PipelineConfig{}, all));
  CHECK(a == b);
  const auto json = nlohmann::json::parse(a);
  for (const char* key : {"id", "status", "coverage", "total_area_mm2", "hole_area_mm2", "n_holes_components",
                          "warnings", "methods", "grid"}) {
    CAPTURE(key);
    CHECK(json.contains(key));
  }
}

TEST_CASE("parallel_for") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 5) throw DataError("x");
                  }),
                  DataError);
}
