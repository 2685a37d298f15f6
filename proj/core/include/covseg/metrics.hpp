#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "covseg/backend.hpp"
#include "covseg/geometry.hpp"
#include "covseg/pipeline.hpp"

namespace covseg {

struct PRResult {
  double precision = 1.0;
  double recall = 1.0;
  double threshold = 0.0;
  /// Set when a ratio was defined by convention because a set was empty.
  bool est_empty = false;
  bool gt_empty = false;
};

/// precision = fraction of est points with a gt point closer than th;
/// recall = fraction of gt points with an est point closer than th.
/// Empty est: precision 1; recall 1 when gt is empty too, else 0.
/// Empty gt with non-empty est: precision 0, recall 1.
PRResult precision_recall(const PointCloud& est, const PointCloud& gt, double threshold_mm);

/// Both polylines resampled at 0.25 mm first.
PRResult precision_recall(const Polyline& est, const Polyline& gt, double threshold_mm);

/// Linear interpolation between order statistics; q in [0, 1].
double quantile(std::vector<double> values, double q);

struct BenchmarkRow {
  std::string id;
  Method method = Method::kMesh;
  double noise_sigma_mm = 0.0;
  double coverage_est = 0.0;
  double coverage_gt = 0.0;
  double abs_error = 0.0;
  PRResult centerline_1mm;
  PRResult centerline_2mm;
  PRResult holes_1mm;
  PRResult holes_2mm;
  double runtime_ms = 0.0;
  bool crack_free = true;
  /// Empty on success.
  std::string error;

  bool ok() const { return error.empty(); }
};

/// Mean abs_error over successful rows; throws DataError when there are none.
double coverage_mae(const std::vector<BenchmarkRow>& rows);

struct BenchmarkSample {
  std::string id;
  PointCloud partial;
  TriMesh gt_mesh;
  Polyline gt_centerline;
  PointCloud gt_hole_points;
  double gt_coverage = 1.0;
};

struct BenchmarkSummary {
  Method method = Method::kMesh;
  double noise_sigma_mm = 0.0;
  std::size_t n = 0;
  std::size_t n_failed = 0;
  double mae = 0.0;
  double error_q5 = 0.0;
  double error_median = 0.0;
  double error_q95 = 0.0;
  double centerline_precision_median = 0.0;
  double centerline_precision_q5 = 0.0;
  double centerline_recall_median = 0.0;
  double centerline_recall_q5 = 0.0;
  double holes_precision_median = 0.0;
  double holes_recall_median = 0.0;
  std::size_t crack_failures = 0;
};

struct BenchmarkConfig {
  PipelineConfig pipeline;
  std::vector<Method> methods{Method::kMesh, Method::kThreshold, Method::kUnwrap};
  std::vector<double> noise_sigmas_mm{0.0, 0.5};
  std::uint64_t seed = 0;
  /// Fit each grid on partial + ground-truth geometry (otherwise partial only).
  bool fit_on_ground_truth = true;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  std::vector<BenchmarkSummary> summaries;
};

/// Rows are ordered by sample, then noise level, then method. Noise for
/// sample `id` at level k uses the substream derive_seed(seed, {hash(id), k}).
/// Per-sample failures become rows with an error message.
BenchmarkResult run_benchmark(std::size_t n_samples, const std::function<BenchmarkSample(std::size_t)>& load,
                              const CompletionBackend& backend, const BenchmarkConfig& config);

std::vector<BenchmarkSummary> summarize(const std::vector<BenchmarkRow>& rows, const std::vector<Method>& methods,
                                        const std::vector<double>& noise_sigmas_mm);

/// CSV with a header line; runtime column only when `with_timings`.
std::string benchmark_csv(const BenchmarkResult& result, bool with_timings = false);
std::string benchmark_json(const BenchmarkResult& result, int indent = 2);

}  // namespace covseg
