#include <benchmark/benchmark.h>

#include <cmath>

#include "covseg/centerline.hpp"
#include "covseg/dataset.hpp"
#include "covseg/encode.hpp"
#include "covseg/marching_cubes.hpp"
#include "covseg/spatial_index.hpp"
#include "covseg/surface.hpp"

using namespace covseg;

namespace {

// One 70 mm segment with holes, shared by the pipeline-stage benchmarks.
const datagen::SegmentSample& sample() {
  static const datagen::SegmentSample s = [] {
    DatasetConfig config;
    config.permutations = 1;
    return generate_colon_samples(config, 0).samples.front();
  }();
  return s;
}

void BM_Edt(benchmark::State& state) {
  const GridSpec grid = fit_grid_with_truth(sample().partial, sample().gt_mesh);
  const VoxelSet seeds = voxelize(sample().partial, grid);
  for (auto _ : state) benchmark::DoNotOptimize(edt(grid, seeds));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.voxel_count()));
}
BENCHMARK(BM_Edt)->Unit(benchmark::kMillisecond);

void BM_EncodeTarget(benchmark::State& state) {
  const auto& s = sample();
  const GridSpec grid = fit_grid_with_truth(s.partial, s.gt_mesh);
  for (auto _ : state) benchmark::DoNotOptimize(encode_target(s.gt_mesh, s.gt_centerline, grid));
}
BENCHMARK(BM_EncodeTarget)->Unit(benchmark::kMillisecond);

void BM_FastMarch(benchmark::State& state) {
  const auto& s = sample();
  const VoxelGrid h = encode_target(s.gt_mesh, s.gt_centerline, fit_grid_with_truth(s.partial, s.gt_mesh));
  const EndpointPair ends = estimate_endpoints(h);
  for (auto _ : state) benchmark::DoNotOptimize(fast_march(h, ends.start));
}
BENCHMARK(BM_FastMarch)->Unit(benchmark::kMillisecond);

void BM_MarchingCubesSphere(benchmark::State& state) {
  GridSpec spec;
  spec.dims = {64, 64, 64};
  ScalarField f(spec);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const Index3 v = f.spec.coords(i);
    f.values[i] = std::hypot(v[0] - 31.5, v[1] - 31.5, v[2] - 31.5) - 20.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(marching_cubes(f));
}
BENCHMARK(BM_MarchingCubesSphere)->Unit(benchmark::kMillisecond);

void BM_NearestPointIndex(benchmark::State& state) {
  const auto& cloud = sample().partial.points;
  const NearestPointIndex index(cloud);
  const auto& queries = sample().gt_mesh.vertices;
  for (auto _ : state) {
    double sum = 0.0;
    for (const Vec3& q : queries) sum += index.nearest(q).distance();
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(queries.size()));
}
BENCHMARK(BM_NearestPointIndex)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
