#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "covseg/dataset.hpp"
#include "covseg/io.hpp"
#include "covseg/metrics.hpp"

using namespace covseg;
using nlohmann::json;

namespace {

// Numbers compared with a relative tolerance; everything else exactly.
void compare(const json& got, const json& want, const std::string& path) {
  CAPTURE(path);
  if (want.is_number() && got.is_number()) {
    const double a = got.get<double>();
    const double b = want.get<double>();
    CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)));
    return;
  }
  REQUIRE(got.type() == want.type());
  if (want.is_object()) {
    REQUIRE(got.size() == want.size());
    for (auto it = want.begin(); it != want.end(); ++it) {
      REQUIRE(got.contains(it.key()));
      compare(got.at(it.key()), it.value(), path + "." + it.key());
    }
  } else if (want.is_array()) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) compare(got[i], want[i], path + "[" + std::to_string(i) + "]");
  } else {
    CHECK(got == want);
  }
}

}  // namespace

// Regression fixture: five samples of one seeded colon through every method
// at both noise levels. Regenerate with COVSEG_UPDATE_GOLDEN=1 after an
// intended change to the numbers.
TEST_CASE("golden benchmark fixture") {
  DatasetConfig dataset;
  dataset.seed = 2024;
  dataset.permutations = 2;
  const ColonSamples colon = generate_colon_samples(dataset, 0);
  std::vector<BenchmarkSample> samples;
  std::map<std::string, GroundTruth> truth;
  for (std::size_t i = 0; i < 5; ++i) {
    samples.push_back(to_benchmark_sample(colon.samples[i]));
    truth[colon.samples[i].id] = {colon.samples[i].gt_mesh, colon.samples[i].gt_centerline};
  }
  BenchmarkConfig config;
  config.seed = 2024;
  const BenchmarkResult result =
      run_benchmark(samples.size(), [&](std::size_t i) { return samples[i]; }, OracleBackend(truth), config);
  const json got = json::parse(benchmark_json(result));

  const std::filesystem::path golden = std::filesystem::path(COVSEG_GOLDEN_DIR) / "bench_5.json";
  if (std::getenv("COVSEG_UPDATE_GOLDEN") != nullptr) {
    io::write_text(golden, got.dump(2) + "\n");
    MESSAGE("rewrote " << golden.string());
  }
  REQUIRE(std::filesystem::exists(golden));
  compare(got, json::parse(io::read_text(golden)), "$");
}
