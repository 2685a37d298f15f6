#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "covseg/datagen.hpp"
#include "covseg/io.hpp"
#include "covseg/metrics.hpp"

namespace covseg {

struct DatasetConfig {
  std::uint64_t seed = 0;
  int n_colons = 1;
  double arc_length_mm = 70.0;
  int permutations = 15;
  datagen::ColonConfig colon;
  datagen::HoleSamplerConfig holes;
  bool augment = false;
  datagen::AugmentConfig augmentation{0.8, 1.25, true, 3.0, 0.0, 0.5};
  /// Also write h_input / h_target volumes for every sample.
  bool encode = false;
  int margin_voxels = 2;
  int jobs = 1;

  /// Throws UsageError for out-of-range values.
  void validate() const;
};

struct ColonSamples {
  datagen::ColonModel model;
  std::vector<datagen::ColonSegment> segments;
  /// Segment-major, permutation-minor; ids `cNNN_sKK_pPP`.
  std::vector<datagen::SegmentSample> samples;
};

/// Deterministic samples of colon `index` (substreams of the master seed).
ColonSamples generate_colon_samples(const DatasetConfig& config, int index);

/// Grid used whenever ground truth is available: fitted on the partial cloud
/// together with the ground-truth mesh vertices.
GridSpec fit_grid_with_truth(const PointCloud& partial, const TriMesh& gt_mesh, int margin_voxels = 2);

/// Writes `samples/`, `colons/` and `manifest.json` below `out_dir`.
std::vector<io::SampleRecord> write_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

/// Loads the files of one manifest record (paths relative to `base_dir`).
BenchmarkSample load_sample(const io::SampleRecord& record, const std::filesystem::path& base_dir);

BenchmarkSample to_benchmark_sample(const datagen::SegmentSample& sample);

}  // namespace covseg
