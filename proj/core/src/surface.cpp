#include "covseg/surface.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>

#include "covseg/error.hpp"
#include "covseg/spatial_index.hpp"

namespace covseg {

namespace {

double hole_distance(double voxel_size_mm) { return std::numbers::sqrt2 / 2.0 * voxel_size_mm; }

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Flags points whose centerline parameter lies within `trim_mm` of an end.
std::vector<bool> inside_trim(const std::vector<Vec3>& points, const Polyline& centerline, double trim_mm) {
  std::vector<bool> keep(points.size(), true);
  if (trim_mm <= 0.0) return keep;
  const PolylineIndex index(centerline);
  const double length = index.length();
  if (trim_mm > 0.5 * length) throw DataError("trim exceeds half the centerline length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double s = index.nearest(points[i]).s;
    keep[i] = s >= trim_mm && s <= length - trim_mm;
  }
  return keep;
}

}  // namespace

TransformedField transform_field(const VoxelGrid& h, const Polyline& centerline, const BandConfig& config) {
  const GridSpec& spec = h.spec;
  if (centerline.points.empty()) throw DataError("transform_field: empty centerline");
  if (!(config.search_step > 0.0) || config.search_radius < 0.0) {
    throw DataError("transform_field: invalid search parameters");
  }
  Polyline voxel_line;
  for (const Vec3& p : centerline.points) voxel_line.points.push_back(spec.to_voxel(p));
  if (voxel_line.size() >= 2 && arc_length(voxel_line) > 0.0) voxel_line = resample(voxel_line, 0.25);
  const PolylineIndex index(voxel_line);

  const double sentinel = config.halfwidth + 1.0;
  TransformedField out;
  out.field = ScalarField(spec);
  out.band.assign(spec.voxel_count(), 0);
  const int steps = static_cast<int>(std::lround(config.search_radius / config.search_step));
  // Samples sit at t = (i + 1/2) * step, i in [-steps, steps), symmetric about v.
  std::vector<double> samples(static_cast<std::size_t>(2 * steps));
  const Vec3 upper{static_cast<double>(spec.dims[0] - 1), static_cast<double>(spec.dims[1] - 1),
                   static_cast<double>(spec.dims[2] - 1)};
  auto inside = [&upper](const Vec3& q) {
    return q.x >= 0.0 && q.y >= 0.0 && q.z >= 0.0 && q.x <= upper.x && q.y <= upper.y && q.z <= upper.z;
  };

  for (std::size_t idx = 0; idx < spec.voxel_count(); ++idx) {
    const double hv = h.values[idx];
    out.field.values[idx] = hv > 0.5 ? sentinel : -sentinel;
    if (!(hv < config.threshold)) continue;
    const Index3 c = spec.coords(idx);
    const Vec3 v{static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2])};
    const PolylineIndex::Hit hit = index.nearest(v);
    if (hit.distance < 1e-9) continue;
    const Vec3 u = (v - hit.point) / hit.distance;

    // Trilinear samples smooth out the staircase of the voxelized wall, which
    // nearest-voxel sampling turns into up to ~0.7 voxel of surface jitter.
    double lowest = std::numeric_limits<double>::infinity();
    for (int i = -steps; i < steps; ++i) {
      const Vec3 q = v + u * ((i + 0.5) * config.search_step);
      const double value = inside(q) ? trilinear(h, q) : std::numeric_limits<double>::infinity();
      samples[static_cast<std::size_t>(i + steps)] = value;
      lowest = std::min(lowest, value);
    }
    if (!(lowest < config.zero_level)) continue;

    // Run below the zero level closest to t = 0; s is its depth-weighted centroid.
    const double limit = config.zero_level;
    int best_first = 0, best_last = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int i = -steps; i < steps;) {
      if (!(samples[static_cast<std::size_t>(i + steps)] < limit)) {
        ++i;
        continue;
      }
      int j = i;
      while (j + 1 < steps && samples[static_cast<std::size_t>(j + 1 + steps)] < limit) ++j;
      const double gap = i >= 0 ? i + 0.5 : (j < 0 ? -(j + 0.5) : 0.0);
      if (gap < best_gap) {
        best_gap = gap;
        best_first = i;
        best_last = j;
      }
      i = j + 1;
    }
    double weight = 0.0, moment = 0.0;
    for (int i = best_first; i <= best_last; ++i) {
      const double w = limit - samples[static_cast<std::size_t>(i + steps)];
      weight += w;
      moment += w * (i + 0.5) * config.search_step;
    }
    const double t_mid = moment / weight;
    const Vec3 s = v + u * t_mid;
    out.field.values[idx] = index.nearest(s).distance - hit.distance;
    out.band[idx] = 1;
    ++out.band_voxels;
  }
  if (out.band_voxels == 0) throw NoSurfaceSignal("transform_field: no surface band in the heatmap");
  return out;
}

std::vector<bool> classify_holes(const std::vector<Vec3>& vertices, const PointCloud& partial, double voxel_size_mm,
                                 std::vector<std::string>* warnings) {
  if (!(voxel_size_mm > 0.0)) throw DataError("classify_holes: voxel size must be positive");
  if (partial.empty()) {
    if (warnings != nullptr) warnings->push_back("empty partial cloud: every vertex is a hole");
    return std::vector<bool>(vertices.size(), true);
  }
  const NearestPointIndex index(partial.points);
  const double limit = hole_distance(voxel_size_mm);
  std::vector<bool> holes(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) holes[i] = index.nearest(vertices[i]).distance() > limit;
  return holes;
}

std::size_t count_hole_components(const TriMesh& mesh, const std::vector<bool>& vertex_is_hole,
                                  const std::vector<bool>* counted) {
  auto active = [&](std::uint32_t v) { return vertex_is_hole[v] && (counted == nullptr || (*counted)[v]); };
  DisjointSets sets(mesh.vertices.size());
  for (const Face& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t a = f[static_cast<std::size_t>(e)];
      const std::uint32_t b = f[static_cast<std::size_t>((e + 1) % 3)];
      if (active(a) && active(b)) sets.unite(a, b);
    }
  }
  std::size_t components = 0;
  for (std::uint32_t v = 0; v < mesh.vertices.size(); ++v) {
    if (active(v) && sets.find(v) == v) ++components;
  }
  return components;
}

CompletedSurface coverage(const TriMesh& mesh, const std::vector<bool>& vertex_is_hole) {
  if (mesh.empty()) throw DataError("coverage: empty mesh");
  if (vertex_is_hole.size() != mesh.vertices.size()) throw DataError("coverage: hole flags do not match vertices");
  CompletedSurface out;
  out.mesh = mesh;
  out.vertex_is_hole = vertex_is_hole;
  out.vertex_counted.assign(mesh.vertices.size(), true);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const double area = face_area(mesh, f);
    int holes = 0;
    for (auto v : mesh.faces[f]) holes += vertex_is_hole[v] ? 1 : 0;
    out.total_area += area;
    out.hole_area += area * holes / 3.0;
  }
  if (!(out.total_area > 0.0)) throw DataError("coverage: mesh has zero area");
  out.hole_area = std::min(out.hole_area, out.total_area);
  out.coverage = std::clamp(1.0 - out.hole_area / out.total_area, 0.0, 1.0);
  out.n_holes_components = count_hole_components(mesh, vertex_is_hole);
  return out;
}

CompletedSurface trim_end_caps(const CompletedSurface& surface, const Polyline& centerline, double trim_mm) {
  if (trim_mm < 0.0) throw DataError("trim_end_caps: trim must be non-negative");
  if (trim_mm > 0.5 * arc_length(centerline)) {
    throw DataError("trim_end_caps: trim exceeds half the centerline length");
  }
  if (trim_mm == 0.0) return surface;
  const TriMesh& mesh = surface.mesh;
  CompletedSurface out = surface;
  out.vertex_counted = inside_trim(mesh.vertices, centerline, trim_mm);
  std::vector<double> weight(mesh.vertices.size(), 0.0);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const double third = face_area(mesh, f) / 3.0;
    for (auto v : mesh.faces[f]) weight[v] += third;
  }
  out.total_area = 0.0;
  out.hole_area = 0.0;
  for (std::size_t v = 0; v < weight.size(); ++v) {
    if (!out.vertex_counted[v]) continue;
    out.total_area += weight[v];
    if (surface.vertex_is_hole[v]) out.hole_area += weight[v];
  }
  if (!(out.total_area > 0.0)) throw DataError("trim_end_caps: no surface left after trimming");
  out.coverage = std::clamp(1.0 - out.hole_area / out.total_area, 0.0, 1.0);
  out.n_holes_components = count_hole_components(mesh, surface.vertex_is_hole, &out.vertex_counted);
  return out;
}

PointCloud baseline_threshold_extract(const VoxelGrid& h, double tau) {
  PointCloud out;
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    if (h.values[i] < tau) out.points.push_back(h.spec.center(h.spec.coords(i)));
  }
  return out;
}

PointCoverage threshold_coverage(const PointCloud& extracted, const PointCloud& partial, double voxel_size_mm,
                                 const Polyline& centerline, double trim_mm) {
  const auto holes = classify_holes(extracted.points, partial, voxel_size_mm);
  const auto keep = inside_trim(extracted.points, centerline, trim_mm);
  PointCoverage out;
  for (std::size_t i = 0; i < extracted.size(); ++i) {
    if (!keep[i]) continue;
    ++out.total;
    if (holes[i]) {
      ++out.holes;
      out.hole_points.points.push_back(extracted.points[i]);
    }
  }
  if (out.total == 0) throw DataError("threshold baseline: no surface voxels below the threshold");
  out.coverage = 1.0 - static_cast<double>(out.holes) / static_cast<double>(out.total);
  return out;
}

UnwrapResult baseline_unwrap(const PointCloud& completed, const PointCloud& partial, const Polyline& centerline,
                             int n_s, int n_theta, double trim_mm) {
  if (n_s < 1 || n_theta < 1) throw DataError("baseline_unwrap: bin counts must be positive");
  if (centerline.size() < 2 || !(arc_length(centerline) > 0.0)) {
    throw DataError("baseline_unwrap: degenerate centerline");
  }
  const Polyline line = resample(centerline, 0.5);
  const auto cumulative = cumulative_arc_length(line);
  const auto tangents = vertex_tangents(line);
  const auto normals = transport_normals(tangents);
  const PolylineIndex index(line);
  const double length = index.length();
  if (trim_mm > 0.5 * length) throw DataError("baseline_unwrap: trim exceeds half the centerline length");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  // Bin index or -1 for trimmed points.
  auto bin_of = [&](const Vec3& p) -> long {
    const PolylineIndex::Hit hit = index.nearest(p);
    if (hit.s < trim_mm || hit.s > length - trim_mm) return -1;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), hit.s);
    const std::size_t seg = std::min<std::size_t>(static_cast<std::size_t>(std::max<long>(it - cumulative.begin() - 1, 0)),
                                                  line.size() - 1);
    const Vec3& t = tangents[seg];
    const Vec3 n = normalized(normals[seg] - t * dot(normals[seg], t));
    const Vec3 b = cross(t, n);
    const Vec3 r = p - hit.point;
    double theta = std::atan2(dot(r, b), dot(r, n));
    if (theta < 0.0) theta += kTwoPi;
    const long is = std::clamp(static_cast<long>(std::floor(hit.s / length * n_s)), 0L, static_cast<long>(n_s - 1));
    const long it_ = std::clamp(static_cast<long>(std::floor(theta / kTwoPi * n_theta)), 0L,
                                static_cast<long>(n_theta - 1));
    return is * n_theta + it_;
  };
  const std::size_t bins = static_cast<std::size_t>(n_s) * static_cast<std::size_t>(n_theta);
  std::vector<std::uint8_t> partial_bins(bins, 0), completed_bins(bins, 0);
  for (const Vec3& p : partial.points) {
    const long b = bin_of(p);
    if (b >= 0) partial_bins[static_cast<std::size_t>(b)] = 1;
  }
  std::vector<long> completed_bin(completed.size());
  for (std::size_t i = 0; i < completed.size(); ++i) {
    completed_bin[i] = bin_of(completed.points[i]);
    if (completed_bin[i] >= 0) completed_bins[static_cast<std::size_t>(completed_bin[i])] = 1;
  }
  UnwrapResult out;
  for (std::size_t b = 0; b < bins; ++b) {
    if (completed_bins[b] == 0) continue;
    ++out.completed_bins;
    if (partial_bins[b] != 0) ++out.covered_bins;
  }
  if (out.completed_bins == 0) throw DataError("baseline_unwrap: completed surface maps to no bin");
  for (std::size_t i = 0; i < completed.size(); ++i) {
    if (completed_bin[i] >= 0 && partial_bins[static_cast<std::size_t>(completed_bin[i])] == 0) {
      out.hole_points.points.push_back(completed.points[i]);
    }
  }
  out.coverage = static_cast<double>(out.covered_bins) / static_cast<double>(out.completed_bins);
  return out;
}

}  // namespace covseg
