#include <doctest.h>

#include <cmath>
#include <random>

#include "covseg/centerline.hpp"
#include "covseg/dataset.hpp"
#include "covseg/encode.hpp"
#include "covseg/error.hpp"
#include "covseg/metrics.hpp"
#include "covseg/spatial_index.hpp"
#include "support.hpp"

using namespace covseg;

TEST_CASE("endpoints of a straight line are its ends") {
  GridSpec spec = test::cube_grid(64);
  VoxelGrid h(spec, 0.5f);
  for (int i = 10; i < 50; ++i) h(i, 20, 30) = 1.0f;
  const EndpointPair e = estimate_endpoints(h);
  CHECK(e.start == Index3{10, 20, 30});
  CHECK(e.end == Index3{49, 20, 30});
  CHECK(e.hops == 39);
}

TEST_CASE("endpoints need a signal") {
  VoxelGrid h(test::cube_grid(16), 0.5f);
  CHECK_THROWS_AS(estimate_endpoints(h), NoCenterlineSignal);
  h(3, 3, 3) = 1.0f;
  CHECK_THROWS_AS(estimate_endpoints(h), NoCenterlineSignal);
  CHECK_THROWS_AS(extract_centerline(VoxelGrid(test::cube_grid(16), 0.5f)), NoCenterlineSignal);
}

TEST_CASE("endpoints of a U-shaped tube are the tube ends") {
  Polyline u;
  for (int i = 0; i <= 60; ++i) u.points.push_back({0.0, 40.0 - i, 0.0});
  for (int i = 1; i <= 40; ++i) {
    const double a = std::numbers::pi * i / 40.0;
    u.points.push_back({15.0 - 15.0 * std::cos(a), -20.0 - 15.0 * std::sin(a), 0.0});
  }
  for (int i = 1; i <= 60; ++i) u.points.push_back({30.0, -20.0 + i, 0.0});
  const TriMesh mesh = datagen::sweep_tube(u, [](double, double) { return 6.0; }, 64, false);
  std::vector<Vec3> pts = mesh.vertices;
  const GridSpec spec = fit_grid(pts, 2);
  const VoxelGrid h = encode_target(mesh, u, spec);
  const EndpointPair e = estimate_endpoints(h);
  const Vec3 a = spec.to_world({double(e.start[0]), double(e.start[1]), double(e.start[2])});
  const Vec3 b = spec.to_world({double(e.end[0]), double(e.end[1]), double(e.end[2])});
  const Vec3 s = u.points.front(), t = u.points.back();
  const double tol = 2.0 * spec.voxel_size;
  const bool direct = distance(a, s) <= tol && distance(b, t) <= tol;
  const bool swapped = distance(a, t) <= tol && distance(b, s) <= tol;
  CHECK((direct || swapped));
}

TEST_CASE("fast marching with uniform speed approximates Euclidean distance") {
  const GridSpec spec = test::cube_grid(32);
  ScalarField speed(spec, 1.0);
  const Index3 start{16, 16, 16};
  const TravelTimeField t = fast_march(speed, start);
  CHECK(t.time[start] == 0.0);
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    const Index3 v = spec.coords(i);
    const double d = std::hypot(v[0] - 16.0, v[1] - 16.0, v[2] - 16.0);
    if (d <= 5.0) continue;
    REQUIRE(std::abs(t.time.values[i] - d) <= 0.05 * d);
  }
}

TEST_CASE("fast marching agrees with Dijkstra on corridor fields") {
  const GridSpec spec = test::cube_grid(32);
  Rng rng(1234);
  for (int field = 0; field < 10; ++field) {
    Index3 start{};
    const ScalarField speed = test::corridor_field(spec, rng, start);
    const TravelTimeField t = fast_march(speed, start);
    const auto oracle = test::dijkstra6(spec, speed.values, start);
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
      // Corridor voxels reachable without crossing a wall.
      if (speed.values[i] < 0.5 || oracle[i] < 5.0 || oracle[i] > 0.5 / kMinSpeed) continue;
      const double dev = std::abs(t.time.values[i] - oracle[i]) / oracle[i];
      worst = std::max(worst, dev);
      ++compared;
    }
    CHECK(compared > 100);
    CHECK_MESSAGE(worst <= 0.10, "field " << field << " worst relative deviation " << worst);
  }
}

TEST_CASE("front detours around a slow wall") {
  // U-shaped fast channel, three voxels thick, inside a minimum-speed block.
  const GridSpec spec = test::cube_grid(32);
  ScalarField speed(spec, kMinSpeed);
  for (int k = 15; k <= 17; ++k) {
    for (int j = 2; j <= 27; ++j) {
      for (int i = 6; i <= 26; ++i) {
        const bool arm = i <= 8 || i >= 24;
        if (arm || j >= 25) speed(i, j, k) = 1.0;
      }
    }
  }
  const Index3 start{7, 4, 16}, behind{25, 4, 16};
  const TravelTimeField t = fast_march(speed, start);
  const auto oracle = test::dijkstra6(spec, speed.values, start);
  CHECK(t.time[behind] > 45.0);   // longer than the 18-voxel straight line
  CHECK(t.time[behind] < 100.0);  // but never through the wall
  CHECK(t.time[behind] == doctest::Approx(oracle[spec.index(behind)]).epsilon(0.10));
}

TEST_CASE("backtrack on uniform speed follows the straight segment") {
  const GridSpec spec = test::cube_grid(48);
  ScalarField speed(spec, 1.0);
  const Index3 start{5, 20, 20}, end{42, 20, 20};
  const TravelTimeField t = fast_march(speed, start);
  const Polyline path = backtrack(t, end);
  REQUIRE(path.size() >= 2);
  CHECK(path.points.front() == spec.to_world({5, 20, 20}));
  CHECK(path.points.back() == spec.to_world({42, 20, 20}));
  for (const auto& p : path.points) {
    CHECK(std::hypot(p.y - 20.0, p.z - 20.0) <= 1.0);
    CHECK(p.x >= 5.0 - 1e-9);
    CHECK(p.x <= 42.0 + 1e-9);
  }
}

TEST_CASE("backtrack with end = start") {
  const GridSpec spec = test::cube_grid(8);
  const TravelTimeField t = fast_march(ScalarField(spec, 1.0), Index3{3, 3, 3});
  const Polyline path = backtrack(t, {3, 3, 3});
  REQUIRE(path.size() >= 1);
  CHECK(arc_length(path) == doctest::Approx(0.0));
  CHECK(path.points.front() == Vec3{3, 3, 3});
}

TEST_CASE("centerline of a straight cylinder is its axis") {
  const TriMesh tube = test::cylinder(12.0, 0.0, 60.0, {5, -3, 2});
  const Polyline axis = test::straight_line({5, -3, 0}, {5, -3, 60}, 60);
  std::vector<Vec3> pts = tube.vertices;
  const GridSpec spec = fit_grid(pts, 2);
  const Polyline line = extract_centerline(encode_target(tube, axis, spec));
  for (const auto& p : line.points) CHECK(std::hypot(p.x - 5.0, p.y + 3.0) <= spec.voxel_size);
  CHECK(arc_length(line) > 50.0);
}

TEST_CASE("centerlines of curved segments from oracle heatmaps") {
  DatasetConfig config;
  config.permutations = 1;
  std::vector<double> precision, recall;
  int close = 0, total = 0;
  for (int colon = 0; colon < 5; ++colon) {
    for (const auto& s : generate_colon_samples(config, colon).samples) {
      const GridSpec spec = fit_grid_with_truth(s.partial, s.gt_mesh);
      const Polyline line = extract_centerline(encode_target(s.gt_mesh, s.gt_centerline, spec));
      const PolylineIndex gt(s.gt_centerline);
      bool within = true;
      for (const auto& p : line.points) within = within && gt.nearest(p).distance <= 2.0;
      close += within ? 1 : 0;
      ++total;
      const PRResult pr = precision_recall(line, s.gt_centerline, 2.0);
      precision.push_back(pr.precision);
      recall.push_back(pr.recall);
    }
  }
  CHECK(close >= 0.95 * total);
  CHECK(quantile(precision, 0.5) == 1.0);
  CHECK(quantile(recall, 0.5) == 1.0);
}
