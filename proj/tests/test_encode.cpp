#include <doctest.h>

#include <cmath>
#include <random>

#include "covseg/encode.hpp"
#include "covseg/error.hpp"
#include "support.hpp"

using namespace covseg;

TEST_CASE("fit_grid voxel size") {
  const std::vector<Vec3> cube{{0, 0, 0}, {60, 60, 60}};
  CHECK(fit_grid(cube, 2).voxel_size == doctest::Approx(1.0));
  const std::vector<Vec3> unit{{0, 0, 0}, {1, 0.5, 0.25}};
  CHECK(fit_grid(unit, 2).voxel_size == doctest::Approx(1.0 / 60.0));
  CHECK(fit_grid(unit).dims == Index3{64, 64, 64});
}

TEST_CASE("fit_grid keeps every point in bounds") {
  Rng rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 s{scale(rng), scale(rng), scale(rng)};
    const Vec3 shift{g(rng) * 50, g(rng) * 50, g(rng) * 50};
    std::vector<Vec3> pts(500);
    for (auto& p : pts) p = shift + Vec3{g(rng) * s.x, g(rng) * s.y, g(rng) * s.z};
    const GridSpec spec = fit_grid(pts, 2);
    for (const auto& p : pts) {
      const Vec3 v = spec.to_voxel(p);
      for (int a = 0; a < 3; ++a) {
        REQUIRE(v[a] >= 1.5 - 1e-9);
        REQUIRE(v[a] <= 61.5 + 1e-9);
      }
    }
  }
}

TEST_CASE("fit_grid rejects degenerate input") {
  CHECK_THROWS_AS(fit_grid(std::vector<Vec3>{}), DataError);
  CHECK_THROWS_AS(fit_grid(std::vector<Vec3>{{1, 1, 1}, {1, 1, 1}}), DataError);
}

TEST_CASE("input heatmap values") {
  const GridSpec spec = test::cube_grid(16);
  PointCloud partial{{{3, 3, 3}}};
  const VoxelGrid h = encode_input(partial, spec);
  CHECK(h(3, 3, 3) == 0.0f);
  CHECK(h(8, 3, 3) == doctest::Approx(0.761594).epsilon(1e-6));
  CHECK(h(6, 7, 3) == doctest::Approx(std::tanh(1.0)).epsilon(1e-6));
  for (float v : h.values) CHECK(v < 1.0f);
}

TEST_CASE("input heatmap equals a naive per-voxel scan") {
  const GridSpec spec = test::cube_grid(32, 1.5, {-10, -10, -10});
  Rng rng(8);
  std::uniform_real_distribution<double> u(-10.0, 36.0);
  PointCloud partial;
  for (int i = 0; i < 300; ++i) partial.points.push_back({u(rng), u(rng), u(rng)});
  const VoxelGrid h = encode_input(partial, spec);
  const auto seeds = voxelize(partial, spec).coordinates();
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    const Index3 v = spec.coords(i);
    double best = 1e300;
    for (const auto& s : seeds) {
      best = std::min(best, std::hypot(v[0] - s[0], v[1] - s[1], v[2] - s[2]));
    }
    REQUIRE(h.values[i] == doctest::Approx(std::tanh(0.2 * best)).epsilon(1e-6));
  }
}

TEST_CASE("target heatmap values") {
  const GridSpec spec = test::cube_grid(24);
  VoxelSet surface(spec.dims), line(spec.dims);
  surface.insert({2, 10, 10});
  line.insert({12, 10, 10});
  TargetDiagnostics diag;
  const VoxelGrid h = encode_target(surface, line, spec, kHeatmapSteepness, &diag);
  CHECK(h(2, 10, 10) == 0.0f);
  CHECK(h(12, 10, 10) == 1.0f);
  CHECK(h(7, 10, 10) == 0.5f);
  CHECK(diag.overlap_voxels == 0);
  for (float v : h.values) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  surface.insert({12, 10, 10});
  const VoxelGrid both = encode_target(surface, line, spec, kHeatmapSteepness, &diag);
  CHECK(both(12, 10, 10) == 0.5f);
  CHECK(diag.overlap_voxels == 1);
}

TEST_CASE("target heatmap complement identity") {
  const GridSpec spec = test::cube_grid(20);
  Rng rng(2);
  std::uniform_int_distribution<int> c(0, 19);
  for (int trial = 0; trial < 5; ++trial) {
    VoxelSet a(spec.dims), b(spec.dims);
    for (int i = 0; i < 30; ++i) a.insert({c(rng), c(rng), c(rng)});
    for (int i = 0; i < 10; ++i) b.insert({c(rng), c(rng), c(rng)});
    const VoxelGrid h = encode_target(a, b, spec);
    const VoxelGrid g = encode_target(b, a, spec);
    for (std::size_t i = 0; i < h.values.size(); ++i) {
      REQUIRE(static_cast<double>(h.values[i]) + g.values[i] == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("centerline voxelization is 26-connected") {
  const GridSpec spec = test::cube_grid(32, 1.0);
  Polyline line;
  for (int i = 0; i <= 20; ++i) line.points.push_back({3.0 + i * 1.3, 5.0 + i * 0.9, 4.0 + 0.05 * i * i});
  const auto voxels = voxelize_centerline(line, spec).coordinates();
  REQUIRE(voxels.size() > 10);
  // Every voxel has a 26-neighbour in the set (no isolated gaps).
  const VoxelSet set = voxelize_centerline(line, spec);
  for (const auto& v : voxels) {
    int neighbours = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Index3 n{v[0] + dx, v[1] + dy, v[2] + dz};
          if ((dx || dy || dz) && spec.contains(n) && set.contains(n)) ++neighbours;
        }
    CHECK(neighbours >= 1);
  }
}
