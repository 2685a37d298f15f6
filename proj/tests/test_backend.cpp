#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "covseg/backend.hpp"
#include "covseg/dataset.hpp"
#include "covseg/encode.hpp"
#include "covseg/error.hpp"
#include "covseg/io.hpp"
#include "covseg/pipeline.hpp"
#include "support.hpp"

using namespace covseg;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  datagen::SegmentSample sample;
  GridSpec grid;
  VoxelGrid h_input;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    DatasetConfig config;
    config.seed = 3;
    config.permutations = 1;
    Fixture out;
    out.sample = generate_colon_samples(config, 0).samples.front();
    out.grid = fit_grid_with_truth(out.sample.partial, out.sample.gt_mesh);
    out.h_input = encode_input(out.sample.partial, out.grid);
    return out;
  }();
  return f;
}

OracleBackend oracle_for(const Fixture& f) {
  return OracleBackend(std::map<std::string, GroundTruth>{{f.sample.id, {f.sample.gt_mesh, f.sample.gt_centerline}}});
}

}  // namespace

TEST_CASE("oracle backend reproduces the target encoding") {
  const Fixture& f = fixture();
  const Completion c = oracle_for(f).complete(f.h_input, f.sample.id);
  const VoxelGrid expected = encode_target(f.sample.gt_mesh, f.sample.gt_centerline, f.grid);
  CHECK(c.warnings.empty());
  CHECK(c.heatmap.spec.dims == expected.spec.dims);
  CHECK(c.heatmap.values == expected.values);
  CHECK_THROWS_AS(oracle_for(f).complete(f.h_input, "unknown"), DataError);
}

TEST_CASE("oracle backend clips ground truth outside the grid") {
  const Fixture& f = fixture();
  // A grid too small for the segment.
  GridSpec tight = fit_grid(f.sample.partial);
  tight.dims = {48, 48, 48};
  const VoxelGrid h(tight);
  const Completion c = oracle_for(f).complete(h, f.sample.id);
  CHECK(c.warnings.size() == 1);
  for (float v : c.heatmap.values) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("file-store backend") {
  const Fixture& f = fixture();
  const fs::path dir = fs::temp_directory_path() / "covseg_test_backend";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const FileStoreBackend store(dir);
  CHECK(store.prediction_path("a") == dir / "a.pred.vol");

  SUBCASE("round trip matches the oracle") {
    const Completion oracle = oracle_for(f).complete(f.h_input, f.sample.id);
    io::write_volume(store.prediction_path(f.sample.id), oracle.heatmap);
    const Completion loaded = store.complete(f.h_input, f.sample.id);
    CHECK(loaded.warnings.empty());
    CHECK(loaded.heatmap.values == oracle.heatmap.values);

    const PipelineConfig config;
    const SegmentReport a = run_segment(f.sample.id, f.sample.partial, f.grid, oracle_for(f), config);
    const SegmentReport b = run_segment(f.sample.id, f.sample.partial, f.grid, store, config);
    REQUIRE(a.ok);
    CHECK(report_json(a) == report_json(b));
  }

  SUBCASE("values slightly out of range are clamped with a warning") {
    VoxelGrid pred(f.grid);
    std::fill(pred.values.begin(), pred.values.end(), 0.5f);
    pred.values[0] = 1.0001f;
    pred.values[1] = -0.0001f;
    io::write_volume(store.prediction_path("clamp"), pred);
    const Completion c = store.complete(f.h_input, "clamp");
    CHECK(c.heatmap.values[0] == 1.0f);
    CHECK(c.heatmap.values[1] == 0.0f);
    REQUIRE(c.warnings.size() == 1);
    CHECK(c.warnings[0].find("clamped 2") != std::string::npos);
  }

  SUBCASE("non-finite prediction") {
    io::write_volume(store.prediction_path("nan"), VoxelGrid(f.grid));
    {
      // Overwrite the last voxel of the payload.
      std::fstream file(store.prediction_path("nan"), std::ios::in | std::ios::out | std::ios::binary);
      file.seekp(-4, std::ios::end);
      const float nan = std::numeric_limits<float>::quiet_NaN();
      file.write(reinterpret_cast<const char*>(&nan), 4);
    }
    CHECK_THROWS_AS(store.complete(f.h_input, "nan"), DataError);
  }

  SUBCASE("missing prediction") {
    CHECK_THROWS_AS(store.complete(f.h_input, "absent"), IoError);
    const SegmentReport r = run_segment("absent", f.sample.partial, f.grid, store, PipelineConfig{});
    CHECK_FALSE(r.ok);
    CHECK(r.error_kind == ErrorKind::kIo);
  }

  SUBCASE("grid mismatch") {
    GridSpec other = f.grid;
    other.dims = {32, 32, 32};
    io::write_volume(store.prediction_path("small"), VoxelGrid(other));
    CHECK_THROWS_AS(store.complete(f.h_input, "small"), DataError);
    GridSpec moved = f.grid;
    moved.origin = moved.origin + Vec3{moved.voxel_size, 0, 0};
    io::write_volume(store.prediction_path("moved"), VoxelGrid(moved));
    CHECK_THROWS_AS(store.complete(f.h_input, "moved"), DataError);
  }
  fs::remove_all(dir);
}

TEST_CASE("same_grid") {
  const GridSpec a = test::cube_grid(64, 1.25, {1, 2, 3});
  GridSpec b = a;
  CHECK(same_grid(a, b));
  b.origin.x += 1e-12;
  CHECK(same_grid(a, b));
  b.voxel_size = 1.3;
  CHECK_FALSE(same_grid(a, b));
}
