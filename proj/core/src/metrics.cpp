#include "covseg/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "covseg/datagen.hpp"
#include "covseg/encode.hpp"
#include "covseg/error.hpp"
#include "covseg/rng.hpp"
#include "covseg/spatial_index.hpp"
#include "json.hpp"

namespace covseg {

namespace {

using Json = nlohmann::ordered_json;

double fraction_within(const PointCloud& from, const PointCloud& to, double threshold) {
  const NearestPointIndex index(to.points);
  std::size_t hits = 0;
  for (const Vec3& p : from.points) {
    if (index.nearest(p).distance() < threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(from.size());
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

Json pr_json(const PRResult& pr) {
  Json j{{"precision", pr.precision}, {"recall", pr.recall}, {"threshold_mm", pr.threshold}};
  if (pr.est_empty) j["est_empty"] = true;
  if (pr.gt_empty) j["gt_empty"] = true;
  return j;
}

}  // namespace

PRResult precision_recall(const PointCloud& est, const PointCloud& gt, double threshold_mm) {
  if (!(threshold_mm > 0.0)) throw DataError("precision_recall: threshold must be positive");
  PRResult r;
  r.threshold = threshold_mm;
  r.est_empty = est.empty();
  r.gt_empty = gt.empty();
  if (r.est_empty) {
    r.precision = 1.0;
    r.recall = r.gt_empty ? 1.0 : 0.0;
    return r;
  }
  if (r.gt_empty) {
    r.precision = 0.0;
    r.recall = 1.0;
    return r;
  }
  r.precision = fraction_within(est, gt, threshold_mm);
  r.recall = fraction_within(gt, est, threshold_mm);
  return r;
}

PRResult precision_recall(const Polyline& est, const Polyline& gt, double threshold_mm) {
  auto dense = [](const Polyline& line) {
    if (line.size() < 2 || !(arc_length(line) > 0.0)) return to_cloud(line);
    return to_cloud(resample(line, 0.25));
  };
  return precision_recall(dense(est), dense(gt), threshold_mm);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DataError("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double coverage_mae(const std::vector<BenchmarkRow>& rows) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const BenchmarkRow& r : rows) {
    if (!r.ok()) continue;
    sum += r.abs_error;
    ++n;
  }
  if (n == 0) throw DataError("coverage_mae: no successful rows");
  return sum / static_cast<double>(n);
}

BenchmarkResult run_benchmark(std::size_t n_samples, const std::function<BenchmarkSample(std::size_t)>& load,
                              const CompletionBackend& backend, const BenchmarkConfig& config) {
  config.pipeline.validate();
  if (config.methods.empty()) throw UsageError("benchmark: no methods");
  if (config.noise_sigmas_mm.empty()) throw UsageError("benchmark: no noise levels");
  const std::size_t per_sample = config.methods.size() * config.noise_sigmas_mm.size();
  BenchmarkResult result;
  result.rows.resize(n_samples * per_sample);

  parallel_for(n_samples, config.pipeline.jobs, [&](std::size_t i) {
    BenchmarkRow* rows = &result.rows[i * per_sample];
    BenchmarkSample sample;
    std::string load_error;
    try {
      sample = load(i);
    } catch (const Error& e) {
      load_error = e.what();
    }
    for (std::size_t k = 0; k < config.noise_sigmas_mm.size(); ++k) {
      const double sigma = config.noise_sigmas_mm[k];
      BenchmarkRow* level = rows + k * config.methods.size();
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        level[m].id = sample.id.empty() ? "#" + std::to_string(i) : sample.id;
        level[m].method = config.methods[m];
        level[m].noise_sigma_mm = sigma;
        level[m].coverage_gt = sample.gt_coverage;
        level[m].error = load_error;
      }
      if (!load_error.empty()) continue;

      const auto started = std::chrono::steady_clock::now();
      SegmentReport report;
      try {
        const PointCloud partial =
            datagen::add_noise(sample.partial, sigma, derive_seed(config.seed, {hash_string(sample.id.c_str()), k}));
        std::vector<Vec3> fit_points = partial.points;
        if (config.fit_on_ground_truth) {
          fit_points.insert(fit_points.end(), sample.gt_mesh.vertices.begin(), sample.gt_mesh.vertices.end());
        }
        const GridSpec grid = fit_grid(fit_points, config.pipeline.margin_voxels);
        report = run_segment(sample.id, partial, grid, backend, config.pipeline, config.methods);
      } catch (const Error& e) {
        report.ok = false;
        report.error = e.what();
      }
      const double elapsed =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      PRResult cl1, cl2;
      if (report.ok) {
        cl1 = precision_recall(report.centerline, sample.gt_centerline, 1.0);
        cl2 = precision_recall(report.centerline, sample.gt_centerline, 2.0);
      }
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        BenchmarkRow& row = level[m];
        row.runtime_ms = elapsed;
        if (!report.ok) {
          row.error = report.error.empty() ? "unknown failure" : report.error;
          row.coverage_est = std::numeric_limits<double>::quiet_NaN();
          row.abs_error = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        const MethodReport* mr = report.find(row.method);
        row.coverage_est = mr->coverage;
        row.abs_error = std::abs(mr->coverage - sample.gt_coverage);
        row.centerline_1mm = cl1;
        row.centerline_2mm = cl2;
        row.holes_1mm = precision_recall(mr->hole_points, sample.gt_hole_points, 1.0);
        row.holes_2mm = precision_recall(mr->hole_points, sample.gt_hole_points, 2.0);
        row.crack_free = row.method != Method::kMesh || report.cracks.ok();
      }
    }
  });
  result.summaries = summarize(result.rows, config.methods, config.noise_sigmas_mm);
  return result;
}

std::vector<BenchmarkSummary> summarize(const std::vector<BenchmarkRow>& rows, const std::vector<Method>& methods,
                                        const std::vector<double>& noise_sigmas_mm) {
  std::vector<BenchmarkSummary> out;
  for (double sigma : noise_sigmas_mm) {
    for (Method method : methods) {
      BenchmarkSummary s;
      s.method = method;
      s.noise_sigma_mm = sigma;
      std::vector<double> errors, clp, clr, hp, hr;
      for (const BenchmarkRow& r : rows) {
        if (r.method != method || r.noise_sigma_mm != sigma) continue;
        ++s.n;
        if (!r.ok()) {
          ++s.n_failed;
          continue;
        }
        if (!r.crack_free) ++s.crack_failures;
        errors.push_back(r.abs_error);
        clp.push_back(r.centerline_2mm.precision);
        clr.push_back(r.centerline_2mm.recall);
        hp.push_back(r.holes_2mm.precision);
        hr.push_back(r.holes_2mm.recall);
      }
      if (!errors.empty()) {
        double sum = 0.0;
        for (double e : errors) sum += e;
        s.mae = sum / static_cast<double>(errors.size());
        s.error_q5 = quantile(errors, 0.05);
        s.error_median = quantile(errors, 0.5);
        s.error_q95 = quantile(errors, 0.95);
        s.centerline_precision_median = quantile(clp, 0.5);
        s.centerline_precision_q5 = quantile(clp, 0.05);
        s.centerline_recall_median = quantile(clr, 0.5);
        s.centerline_recall_q5 = quantile(clr, 0.05);
        s.holes_precision_median = quantile(hp, 0.5);
        s.holes_recall_median = quantile(hr, 0.5);
      } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.mae = s.error_q5 = s.error_median = s.error_q95 = nan;
        s.centerline_precision_median = s.centerline_precision_q5 = nan;
        s.centerline_recall_median = s.centerline_recall_q5 = nan;
        s.holes_precision_median = s.holes_recall_median = nan;
      }
      out.push_back(s);
    }
  }
  return out;
}

std::string benchmark_csv(const BenchmarkResult& result, bool with_timings) {
  std::string out =
      "id,method,noise_sigma_mm,coverage_est,coverage_gt,abs_error,"
      "centerline_precision_1mm,centerline_recall_1mm,centerline_precision_2mm,centerline_recall_2mm,"
      "holes_precision_1mm,holes_recall_1mm,holes_precision_2mm,holes_recall_2mm,crack_free";
  if (with_timings) out += ",runtime_ms";
  out += ",error\n";
  for (const BenchmarkRow& r : result.rows) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), '"', '\'');
    const bool ok = r.ok();
    auto v = [&](double x) { return ok ? fmt(x) : std::string("nan"); };
    out += r.id + ',' + to_string(r.method) + ',' + fmt(r.noise_sigma_mm) + ',' + v(r.coverage_est) + ',' +
           fmt(r.coverage_gt) + ',' + v(r.abs_error) + ',' + v(r.centerline_1mm.precision) + ',' +
           v(r.centerline_1mm.recall) + ',' + v(r.centerline_2mm.precision) + ',' + v(r.centerline_2mm.recall) +
           ',' + v(r.holes_1mm.precision) + ',' + v(r.holes_1mm.recall) + ',' + v(r.holes_2mm.precision) + ',' +
           v(r.holes_2mm.recall) + ',' + (ok ? (r.crack_free ? "1" : "0") : "nan");
    if (with_timings) out += ',' + fmt(r.runtime_ms);
    out += ",\"" + error + "\"\n";
  }
  return out;
}

std::string benchmark_json(const BenchmarkResult& result, int indent) {
  Json rows = Json::array();
  for (const BenchmarkRow& r : result.rows) {
    Json j{{"id", r.id}, {"method", to_string(r.method)}, {"noise_sigma_mm", r.noise_sigma_mm},
           {"coverage_gt", r.coverage_gt}};
    if (r.ok()) {
      j["coverage_est"] = r.coverage_est;
      j["abs_error"] = r.abs_error;
      j["centerline"] = Json::array({pr_json(r.centerline_1mm), pr_json(r.centerline_2mm)});
      j["holes"] = Json::array({pr_json(r.holes_1mm), pr_json(r.holes_2mm)});
      j["crack_free"] = r.crack_free;
    } else {
      j["error"] = r.error;
    }
    rows.push_back(j);
  }
  Json summaries = Json::array();
  auto num = [](double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); };
  for (const BenchmarkSummary& s : result.summaries) {
    summaries.push_back(Json{{"method", to_string(s.method)},
                             {"noise_sigma_mm", s.noise_sigma_mm},
                             {"n", s.n},
                             {"n_failed", s.n_failed},
                             {"mae", num(s.mae)},
                             {"abs_error_q5", num(s.error_q5)},
                             {"abs_error_median", num(s.error_median)},
                             {"abs_error_q95", num(s.error_q95)},
                             {"centerline_precision_2mm_median", num(s.centerline_precision_median)},
                             {"centerline_precision_2mm_q5", num(s.centerline_precision_q5)},
                             {"centerline_recall_2mm_median", num(s.centerline_recall_median)},
                             {"centerline_recall_2mm_q5", num(s.centerline_recall_q5)},
                             {"holes_precision_2mm_median", num(s.holes_precision_median)},
                             {"holes_recall_2mm_median", num(s.holes_recall_median)},
                             {"crack_failures", s.crack_failures}});
  }
  return Json{{"summaries", summaries}, {"rows", rows}}.dump(indent);
}

}  // namespace covseg
