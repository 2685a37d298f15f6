#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "covseg/dataset.hpp"
#include "covseg/error.hpp"
#include "covseg/metrics.hpp"
#include "covseg/rng.hpp"
#include "support.hpp"

using namespace covseg;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double extent = 20.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, extent);
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) cloud.points.push_back({u(rng), u(rng), u(rng)});
  return cloud;
}

double brute_fraction_within(const PointCloud& from, const PointCloud& to, double th) {
  std::size_t hit = 0;
  for (const Vec3& p : from.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : to.points) best = std::min(best, distance(p, q));
    hit += best < th ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(from.size());
}

struct SmallBatch {
  std::vector<BenchmarkSample> samples;
  std::map<std::string, GroundTruth> truth;
};

const SmallBatch& small_batch() {
  static const SmallBatch batch = [] {
    DatasetConfig config;
    config.seed = 11;
    config.permutations = 3;
    const ColonSamples colon = generate_colon_samples(config, 0);
    SmallBatch b;
    for (std::size_t i = 0; i < 10; ++i) {
      b.samples.push_back(to_benchmark_sample(colon.samples[i]));
      b.truth[colon.samples[i].id] = {colon.samples[i].gt_mesh, colon.samples[i].gt_centerline};
    }
    return b;
  }();
  return batch;
}

BenchmarkResult run_small(const BenchmarkConfig& config) {
  const SmallBatch& b = small_batch();
  const OracleBackend oracle(b.truth);
  return run_benchmark(b.samples.size(), [&b](std::size_t i) { return b.samples[i]; }, oracle, config);
}

}  // namespace

TEST_CASE("precision_recall identical and shifted sets") {
  const PointCloud gt = random_cloud(300, 1);
  const PRResult same = precision_recall(gt, gt, 1.0);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);

  // A grid of points with spacing 10 shifted by twice the threshold.
  PointCloud lattice, shifted;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      lattice.points.push_back({10.0 * i, 10.0 * j, 0.0});
      shifted.points.push_back({10.0 * i + 4.0, 10.0 * j, 0.0});
    }
  }
  const PRResult off = precision_recall(shifted, lattice, 2.0);
  CHECK(off.precision == 0.0);
  CHECK(off.recall == 0.0);
}

TEST_CASE("precision_recall matches brute force on subsamples") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PointCloud gt = random_cloud(400, 100 + seed);
    PointCloud est = random_cloud(150, 200 + seed);
    for (std::size_t i = 0; i < gt.size(); i += 2) est.points.push_back(gt.points[i]);
    for (const double th : {0.5, 1.0, 2.0}) {
      const PRResult pr = precision_recall(est, gt, th);
      CHECK(pr.precision == doctest::Approx(brute_fraction_within(est, gt, th)));
      CHECK(pr.recall == doctest::Approx(brute_fraction_within(gt, est, th)));
      const PRResult swapped = precision_recall(gt, est, th);
      CHECK(swapped.precision == doctest::Approx(pr.recall));
      CHECK(swapped.recall == doctest::Approx(pr.precision));
    }
  }
}

TEST_CASE("precision_recall grows with the threshold") {
  const PointCloud a = random_cloud(200, 7);
  const PointCloud b = random_cloud(250, 8);
  PRResult last{0.0, 0.0};
  for (double th = 0.25; th <= 8.0; th += 0.25) {
    const PRResult pr = precision_recall(a, b, th);
    CHECK(pr.precision >= last.precision);
    CHECK(pr.recall >= last.recall);
    last = pr;
  }
  CHECK(last.precision == 1.0);
}

TEST_CASE("precision_recall empty sets") {
  const PointCloud some = random_cloud(10, 3);
  const PRResult both = precision_recall(PointCloud{}, PointCloud{}, 1.0);
  CHECK(both.precision == 1.0);
  CHECK(both.recall == 1.0);
  CHECK(both.est_empty);
  CHECK(both.gt_empty);
  const PRResult no_est = precision_recall(PointCloud{}, some, 1.0);
  CHECK(no_est.precision == 1.0);
  CHECK(no_est.recall == 0.0);
  const PRResult no_gt = precision_recall(some, PointCloud{}, 1.0);
  CHECK(no_gt.precision == 0.0);
  CHECK(no_gt.recall == 1.0);
}

TEST_CASE("precision_recall on polylines") {
  const Polyline a = test::straight_line({0, 0, 0}, {50, 0, 0}, 5);
  const Polyline b = test::straight_line({0, 1.5, 0}, {50, 1.5, 0}, 200);
  CHECK(precision_recall(a, b, 2.0).precision == 1.0);
  CHECK(precision_recall(a, b, 2.0).recall == 1.0);
  CHECK(precision_recall(a, b, 1.0).precision == 0.0);
  // Half of a longer line.
  const Polyline half = test::straight_line({0, 0, 0}, {25, 0, 0}, 3);
  const PRResult pr = precision_recall(half, a, 1.0);
  CHECK(pr.precision == 1.0);
  CHECK(pr.recall == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("quantile and coverage_mae") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({1.0, 2.0}, 0.25) == doctest::Approx(1.25));
  CHECK(quantile({5.0}, 0.95) == 5.0);
  CHECK(quantile({0.0, 10.0}, 0.0) == 0.0);
  CHECK(quantile({0.0, 10.0}, 1.0) == 10.0);

  BenchmarkRow a, b, failed;
  a.abs_error = 0.02;
  b.abs_error = 0.04;
  failed.abs_error = 1.0;
  failed.error = "boom";
  CHECK(coverage_mae({a, b}) == doctest::Approx(0.03));
  CHECK(coverage_mae({a, b, failed}) == doctest::Approx(0.03));
  BenchmarkRow zero;
  zero.coverage_est = zero.coverage_gt = 0.9;
  CHECK(coverage_mae({zero}) == 0.0);
  CHECK_THROWS_AS(coverage_mae({failed}), DataError);
  CHECK_THROWS_AS(coverage_mae({}), DataError);
}

TEST_CASE("benchmark rows, summaries and serialization") {
  BenchmarkConfig config;
  config.seed = 5;
  const BenchmarkResult result = run_small(config);

  const std::size_t n_methods = config.methods.size();
  const std::size_t n_noise = config.noise_sigmas_mm.size();
  REQUIRE(result.rows.size() == 10 * n_methods * n_noise);
  // Ordered by sample, then noise, then method; each method once per cell.
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const BenchmarkRow& row = result.rows[i];
    CHECK(row.id == small_batch().samples[i / (n_methods * n_noise)].id);
    CHECK(row.noise_sigma_mm == config.noise_sigmas_mm[(i / n_methods) % n_noise]);
    CHECK(row.method == config.methods[i % n_methods]);
    CHECK(row.ok());
    CHECK(row.abs_error == doctest::Approx(std::abs(row.coverage_est - row.coverage_gt)));
  }

  REQUIRE(result.summaries.size() == n_methods * n_noise);
  for (const BenchmarkSummary& s : result.summaries) {
    std::vector<BenchmarkRow> cell;
    for (const BenchmarkRow& r : result.rows) {
      if (r.method == s.method && r.noise_sigma_mm == s.noise_sigma_mm) cell.push_back(r);
    }
    CHECK(s.n == 10);
    CHECK(s.n_failed == 0);
    CHECK(s.mae == doctest::Approx(coverage_mae(cell)));
    CHECK(s.error_median <= s.error_q95);
  }

  const std::string csv = benchmark_csv(result);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(result.rows.size() + 1));
  CHECK(csv.find("runtime_ms") == std::string::npos);
  CHECK(benchmark_csv(result, true).find("runtime_ms") != std::string::npos);

  const auto json = nlohmann::json::parse(benchmark_json(result));
  CHECK(json.at("rows").size() == result.rows.size());
  CHECK(json.at("summaries").size() == result.summaries.size());

  // Same seed, same bytes (timings excluded).
  CHECK(benchmark_csv(run_small(config)) == csv);
}

TEST_CASE("benchmark noise depends on the seed") {
  BenchmarkConfig config;
  config.methods = {Method::kMesh};
  config.noise_sigmas_mm = {0.5};
  config.seed = 1;
  const std::string first = benchmark_csv(run_small(config));
  config.seed = 2;
  CHECK(benchmark_csv(run_small(config)) != first);
}
