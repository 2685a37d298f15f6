#include "covseg/dataset.hpp"

#include <cstdio>

#include "covseg/encode.hpp"
#include "covseg/error.hpp"
#include "covseg/pipeline.hpp"

namespace covseg {

namespace {

std::string colon_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%03d", index);
  return buf;
}

std::string segment_id(int colon, std::size_t segment) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_s%02zu", segment);
  return colon_id(colon) + buf;
}

TriMesh wall_only(const datagen::ColonModel& model) {
  TriMesh wall = model.mesh;
  if (model.tube_face_count > 0) wall.faces.resize(model.tube_face_count);
  // Drop the now unreferenced cap centers (appended last).
  std::uint32_t used = 0;
  for (const Face& f : wall.faces) used = std::max({used, f[0], f[1], f[2]});
  wall.vertices.resize(static_cast<std::size_t>(used) + 1);
  return wall;
}

}  // namespace

void DatasetConfig::validate() const {
  if (n_colons < 1) throw UsageError("n-colons must be at least 1");
  if (arc_length_mm < 50.0 || arc_length_mm > 70.0) throw UsageError("arc length must lie in [50, 70] mm");
  if (colon.length_mm < 3.0 * arc_length_mm) throw UsageError("colon length must be at least 3x the arc length");
  if (permutations < 1) throw UsageError("permutations must be at least 1");
  if (holes.points_per_mm2 < 0.25) throw UsageError("point density must be at least 0.25 points/mm^2");
  if (jobs < 1) throw UsageError("jobs must be at least 1");
}

GridSpec fit_grid_with_truth(const PointCloud& partial, const TriMesh& gt_mesh, int margin_voxels) {
  std::vector<Vec3> points = partial.points;
  points.insert(points.end(), gt_mesh.vertices.begin(), gt_mesh.vertices.end());
  return fit_grid(points, margin_voxels);
}

ColonSamples generate_colon_samples(const DatasetConfig& config, int index) {
  const auto c = static_cast<std::uint64_t>(index);
  ColonSamples out;
  out.model = datagen::generate_colon(derive_seed(config.seed, {0, c}), config.colon);
  out.segments = datagen::split_colon(out.model, config.arc_length_mm);
  for (std::size_t k = 0; k < out.segments.size(); ++k) {
    auto samples = datagen::permute_holes(out.segments[k], config.permutations, config.holes,
                                          derive_seed(config.seed, {1, c, k}), segment_id(index, k));
    for (std::size_t p = 0; p < samples.size(); ++p) {
      if (config.augment) {
        samples[p] = datagen::augment(samples[p], config.augmentation, derive_seed(config.seed, {2, c, k, p}));
      }
      out.samples.push_back(std::move(samples[p]));
    }
  }
  return out;
}

std::vector<io::SampleRecord> write_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  const std::filesystem::path samples_dir = out_dir / "samples";
  const std::filesystem::path colons_dir = out_dir / "colons";
  std::error_code ec;
  std::filesystem::create_directories(samples_dir, ec);
  std::filesystem::create_directories(colons_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::vector<std::vector<io::SampleRecord>> per_colon(static_cast<std::size_t>(config.n_colons));
  parallel_for(per_colon.size(), config.jobs, [&](std::size_t i) {
    const int index = static_cast<int>(i);
    const ColonSamples colon = generate_colon_samples(config, index);
    const std::string cid = colon_id(index);
    io::write_mesh(colons_dir / (cid + ".ply"), wall_only(colon.model));
    io::write_polyline(colons_dir / (cid + ".centerline.json"), colon.model.centerline);
    if (!config.augment) {
      PointCloud whole;
      for (const auto& s : colon.samples) {
        if (s.id.ends_with("_p00")) whole.points.insert(whole.points.end(), s.partial.points.begin(), s.partial.points.end());
      }
      io::write_cloud(colons_dir / (cid + ".partial.ply"), whole);
    }
    for (const auto& s : colon.samples) {
      io::SampleRecord r;
      r.id = s.id;
      r.partial_cloud = "samples/" + s.id + ".partial.ply";
      r.gt_mesh = "samples/" + s.id + ".gt.ply";
      r.gt_centerline = "samples/" + s.id + ".centerline.json";
      r.gt_hole_points = "samples/" + s.id + ".holes.ply";
      r.arc_length_mm = s.arc_length_mm;
      r.gt_coverage = s.gt_coverage;
      r.noise_sigma_mm = s.noise_sigma_mm;
      io::write_cloud(out_dir / r.partial_cloud, s.partial);
      io::write_mesh(out_dir / r.gt_mesh, s.gt_mesh);
      io::write_polyline(out_dir / r.gt_centerline, s.gt_centerline);
      io::write_cloud(out_dir / r.gt_hole_points, s.gt_hole_points);
      if (config.encode) {
        const GridSpec grid = fit_grid_with_truth(s.partial, s.gt_mesh, config.margin_voxels);
        r.h_input = "samples/" + s.id + ".h_input.vol";
        r.h_target = "samples/" + s.id + ".h_target.vol";
        io::write_volume(out_dir / r.h_input, encode_input(s.partial, grid));
        io::write_volume(out_dir / r.h_target, encode_target(s.gt_mesh, s.gt_centerline, grid));
      }
      per_colon[i].push_back(std::move(r));
    }
  });
  std::vector<io::SampleRecord> records;
  for (auto& colon : per_colon) {
    for (auto& r : colon) records.push_back(std::move(r));
  }
  io::write_manifest(out_dir / "manifest.json", records);
  return records;
}

BenchmarkSample load_sample(const io::SampleRecord& record, const std::filesystem::path& base_dir) {
  BenchmarkSample s;
  s.id = record.id;
  s.partial = io::read_cloud(base_dir / record.partial_cloud);
  s.gt_mesh = io::read_mesh(base_dir / record.gt_mesh);
  s.gt_centerline = io::read_polyline(base_dir / record.gt_centerline);
  s.gt_hole_points = io::read_cloud(base_dir / record.gt_hole_points);
  s.gt_coverage = record.gt_coverage;
  return s;
}

BenchmarkSample to_benchmark_sample(const datagen::SegmentSample& sample) {
  return {sample.id, sample.partial, sample.gt_mesh, sample.gt_centerline, sample.gt_hole_points, sample.gt_coverage};
}

}  // namespace covseg
