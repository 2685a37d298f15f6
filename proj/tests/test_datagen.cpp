#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <set>

#include "covseg/datagen.hpp"
#include "covseg/error.hpp"
#include "covseg/spatial_index.hpp"
#include "support.hpp"

using namespace covseg;
using namespace covseg::datagen;

namespace {

ColonConfig straight_config(double radius, double length) {
  ColonConfig c;
  c.length_mm = length;
  c.radius_min_mm = radius;
  c.radius_max_mm = radius;
  c.tortuosity = 0.0;
  c.fold_amplitude = 0.0;
  c.lobe_amplitude = 0.0;
  return c;
}

double wall_area(const ColonModel& m) {
  double a = 0.0;
  for (std::size_t f = 0; f < m.tube_face_count; ++f) a += face_area(m.mesh, f);
  return a;
}

// Flat square patch [0, side]^2 in the z = 0 plane.
TriMesh plane_patch(double side, int n) {
  TriMesh mesh;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) mesh.vertices.push_back({side * i / n, side * j / n, 0.0});
  }
  auto v = [n](int i, int j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      mesh.faces.push_back({v(i, j), v(i + 1, j), v(i + 1, j + 1)});
      mesh.faces.push_back({v(i, j), v(i + 1, j + 1), v(i, j + 1)});
    }
  }
  return mesh;
}

}  // namespace

TEST_CASE("straight constant-radius colon is a cylinder") {
  const ColonModel m = generate_colon(1, straight_config(15.0, 210.0));
  const double expected = 2.0 * std::numbers::pi * 15.0 * 210.0;
  CHECK(wall_area(m) == doctest::Approx(expected).epsilon(0.02));
  CHECK(arc_length(m.centerline) == doctest::Approx(210.0).epsilon(1e-3));
}

TEST_CASE("colon generation is deterministic") {
  const ColonModel a = generate_colon(42);
  const ColonModel b = generate_colon(42);
  CHECK(a.mesh.vertices == b.mesh.vertices);
  CHECK(a.mesh.faces == b.mesh.faces);
  CHECK(a.centerline.points == b.centerline.points);
  const ColonModel c = generate_colon(43);
  CHECK(c.centerline.points != a.centerline.points);
}

TEST_CASE("centerline stays inside the wall for random seeds") {
  const ColonConfig config;
  const double min_wall = config.radius_min_mm * (1.0 - config.fold_amplitude - config.lobe_amplitude);
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const ColonModel m = generate_colon(seed, config);
    PointCloud wall;
    wall.points.assign(m.mesh.vertices.begin(), m.mesh.vertices.end() - 2);  // cap centers excluded
    double closest = 1e300;
    for (std::size_t i = 0; i < m.centerline.size(); i += 5) {
      closest = std::min(closest, point_to_set_distance(m.centerline.points[i], wall));
    }
    CHECK_MESSAGE(closest > 0.9 * min_wall, "seed " << seed);
  }
}

TEST_CASE("split_colon on a straight cylinder") {
  const ColonModel m = generate_colon(3, straight_config(15.0, 210.0));
  const auto segments = split_colon(m, 70.0);
  REQUIRE(segments.size() == 3);
  double total = 0.0;
  for (const auto& s : segments) {
    CHECK(surface_area(s.mesh) == doctest::Approx(surface_area(segments[0].mesh)).epsilon(0.01));
    CHECK(std::abs(arc_length(s.centerline) - 70.0) <= 1.1);
    total += surface_area(s.mesh);
  }
  CHECK(total == doctest::Approx(wall_area(m)).epsilon(0.02));
}

TEST_CASE("split_colon area bookkeeping on a curved colon") {
  ColonConfig c;
  c.length_mm = 250.0;
  const ColonModel m = generate_colon(9, c);
  const auto segments = split_colon(m, 70.0);
  REQUIRE(segments.size() == 3);
  double total = 0.0;
  for (const auto& s : segments) total += surface_area(s.mesh);
  const auto last = segments.back().s_end;
  ColonModel kept = m;
  // Area of the wall up to the last cut, from a resplit with a single segment.
  const auto whole = split_colon(m, last);
  REQUIRE(whole.size() == 1);
  CHECK(total == doctest::Approx(surface_area(whole[0].mesh)).epsilon(0.02));
  CHECK(total < wall_area(kept));
}

TEST_CASE("crop_holes edge cases") {
  const TriMesh tube = test::cylinder(10.0, 0.0, 40.0);
  SUBCASE("no holes keeps everything") {
    const CropResult r = crop_holes(tube, HoleSpec{}, 1);
    CHECK(r.coverage == 1.0);
    CHECK(r.hole_points.empty());
    CHECK(r.partial.size() == static_cast<std::size_t>(std::llround(surface_area(tube) * 4.0)));
  }
  SUBCASE("engulfing sphere is rejected") {
    HoleSpec h{{{0, 0, 20}}, {100.0}};
    CHECK(removed_area_fraction(tube, h) == doctest::Approx(1.0));
    CHECK_THROWS_AS(crop_holes(tube, h, 1), DataError);
  }
}

TEST_CASE("single sphere on a plane removes a disk") {
  const TriMesh patch = plane_patch(100.0, 100);
  for (double r : {5.0, 10.0, 20.0}) {
    HoleSpec h{{{50, 50, 0}}, {r}};
    const double expected = std::numbers::pi * r * r / (100.0 * 100.0);
    CHECK(removed_area_fraction(patch, h) == doctest::Approx(expected).epsilon(0.03));
  }
  // Sphere center above the plane: disk radius sqrt(r^2 - h^2).
  HoleSpec lifted{{{50, 50, 6}}, {10.0}};
  CHECK(removed_area_fraction(patch, lifted) == doctest::Approx(std::numbers::pi * 64.0 / 1e4).epsilon(0.03));
}

TEST_CASE("permute_holes gives distinct reproducible draws") {
  const ColonModel m = generate_colon(5);
  const auto segments = split_colon(m, 70.0);
  const auto samples = permute_holes(segments[1], 15, HoleSamplerConfig{}, 77, "x");
  REQUIRE(samples.size() == 15);
  std::set<double> coverages;
  for (const auto& s : samples) coverages.insert(s.gt_coverage);
  CHECK(coverages.size() == 15);
  CHECK(samples[0].id == "x_p00");
  CHECK(samples[14].id == "x_p14");

  const auto once = permute_holes(segments[1], 1, HoleSamplerConfig{}, 77, "x");
  const auto again = permute_holes(segments[1], 1, HoleSamplerConfig{}, 77, "x");
  CHECK(once[0].partial.points == again[0].partial.points);
  CHECK(once[0].gt_coverage == again[0].gt_coverage);
  CHECK(once[0].partial.points == samples[0].partial.points);
}

TEST_CASE("coverage distribution of generated samples") {
  // 1000 samples at low density: coverage is area-based, density only drives
  // the point sampling.
  HoleSamplerConfig config;
  config.points_per_mm2 = 0.25;
  std::vector<double> coverage;
  for (std::uint64_t colon = 0; coverage.size() < 1000; ++colon) {
    const auto segments = split_colon(generate_colon(derive_seed(9, {colon})), 70.0);
    for (std::size_t k = 0; k < segments.size() && coverage.size() < 1000; ++k) {
      for (const auto& s : permute_holes(segments[k], 50, config, derive_seed(10, {colon, k}))) {
        coverage.push_back(s.gt_coverage);
      }
    }
  }
  coverage.resize(1000);
  const auto in_range = std::count_if(coverage.begin(), coverage.end(), [](double c) { return c >= 0.5; });
  CHECK(in_range >= 950);
  int bins[10] = {};
  for (double c : coverage) ++bins[std::min(9, static_cast<int>(c * 10.0))];
  const int mode = static_cast<int>(std::max_element(bins, bins + 10) - bins);
  CHECK(mode >= 8);
  CHECK(mode <= 9);
}

TEST_CASE("augment") {
  const auto segments = split_colon(generate_colon(8), 70.0);
  const SegmentSample sample = permute_holes(segments[0], 1, HoleSamplerConfig{}, 3)[0];

  SUBCASE("identity config leaves the sample unchanged") {
    const SegmentSample out = augment(sample, AugmentConfig{}, 1);
    CHECK(out.partial.points == sample.partial.points);
    CHECK(out.gt_mesh.vertices == sample.gt_mesh.vertices);
    CHECK(out.gt_centerline.points == sample.gt_centerline.points);
    CHECK(out.gt_coverage == sample.gt_coverage);
  }
  SUBCASE("rotation is an isometry") {
    AugmentConfig c;
    c.rotate = true;
    const SegmentSample out = augment(sample, c, 2);
    CHECK(out.partial.points != sample.partial.points);
    const auto& a = sample.gt_mesh.vertices;
    const auto& b = out.gt_mesh.vertices;
    for (std::size_t i = 0; i + 997 < a.size(); i += 997) {
      const double d0 = distance(a[i], a[i + 997]);
      CHECK(distance(b[i], b[i + 997]) == doctest::Approx(d0).epsilon(1e-9));
    }
  }
  SUBCASE("scale 1.2 multiplies area by 1.44") {
    AugmentConfig c;
    c.scale_min = c.scale_max = 1.2;
    const SegmentSample out = augment(sample, c, 2);
    CHECK(surface_area(out.gt_mesh) == doctest::Approx(1.44 * surface_area(sample.gt_mesh)).epsilon(1e-6));
    CHECK(out.gt_coverage == sample.gt_coverage);
  }
  SUBCASE("out-of-range config is a usage error") {
    AugmentConfig c;
    c.scale_min = -1.0;
    CHECK_THROWS_AS(augment(sample, c, 1), UsageError);
  }
}

TEST_CASE("add_noise is deterministic with the requested spread") {
  PointCloud cloud;
  cloud.points.assign(20000, Vec3{});
  const PointCloud a = add_noise(cloud, 0.5, 4);
  CHECK(a.points == add_noise(cloud, 0.5, 4).points);
  double sum2 = 0.0;
  for (const auto& p : a.points) sum2 += p.x * p.x;
  CHECK(std::sqrt(sum2 / 20000.0) == doctest::Approx(0.5).epsilon(0.03));
}
