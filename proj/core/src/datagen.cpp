#include "covseg/datagen.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numbers>
#include <tuple>

#include "covseg/error.hpp"
#include "covseg/sampling.hpp"
#include "covseg/spatial_index.hpp"

namespace covseg::datagen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
  // Rodrigues; axis is unit length.
  const double c = std::cos(angle), s = std::sin(angle);
  return v * c + cross(axis, v) * s + axis * (dot(axis, v) * (1.0 - c));
}

/// Natural cubic spline through `knots`, chord-length parametrized.
class CubicSpline {
 public:
  explicit CubicSpline(const std::vector<Vec3>& knots) : knots_(knots) {
    const std::size_t n = knots_.size();
    t_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) t_[i] = t_[i - 1] + distance(knots_[i - 1], knots_[i]);
    second_.assign(n, Vec3{});
    if (n < 3) return;
    // Tridiagonal solve (Thomas) for the second derivatives, M0 = Mn-1 = 0.
    std::vector<double> diag(n, 0.0), upper(n, 0.0);
    std::vector<Vec3> rhs(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      diag[i] = 2.0 * (h0 + h1);
      upper[i] = h1;
      rhs[i] = ((knots_[i + 1] - knots_[i]) / h1 - (knots_[i] - knots_[i - 1]) / h0) * 6.0;
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double w = h0 / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= rhs[i - 1] * w;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      second_[i] = (rhs[i] - second_[i + 1] * upper[i]) / diag[i];
      if (i == 1) break;
    }
  }

  double length_parameter() const { return t_.back(); }

  Vec3 operator()(double t) const {
    t = std::clamp(t, 0.0, t_.back());
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - t_.begin());
    hi = std::clamp<std::size_t>(hi, 1, t_.size() - 1);
    const std::size_t lo = hi - 1;
    const double h = t_[hi] - t_[lo];
    const double a = (t_[hi] - t) / h;
    const double b = (t - t_[lo]) / h;
    return knots_[lo] * a + knots_[hi] * b +
           (second_[lo] * (a * a * a - a) + second_[hi] * (b * b * b - b)) * (h * h / 6.0);
  }

 private:
  std::vector<Vec3> knots_;
  std::vector<double> t_;
  std::vector<Vec3> second_;
};

bool centerline_is_admissible(const Polyline& centerline, double max_radius) {
  const Polyline coarse = resample(centerline, 2.0);
  const auto cumulative = cumulative_arc_length(coarse);
  const auto tangents = vertex_tangents(coarse);
  for (std::size_t i = 1; i + 1 < coarse.size(); ++i) {
    const double ds = cumulative[i + 1] - cumulative[i - 1];
    const double curvature = norm(tangents[i + 1] - tangents[i - 1]) / ds;
    if (curvature * max_radius > 0.5) return false;
  }
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    for (std::size_t j = i + 1; j < coarse.size(); ++j) {
      if (cumulative[j] - cumulative[i] <= 4.0 * max_radius) continue;
      if (distance(coarse.points[i], coarse.points[j]) < 2.0 * max_radius) return false;
    }
  }
  return true;
}

struct ClipVertex {
  Vec3 position;
  long long key;  // >= 0: source vertex id; < 0: clip-generated vertex
};

class SegmentBuilder {
 public:
  /// Clips the polygon to the half-space dist(x) >= 0.
  template <typename Dist>
  std::vector<ClipVertex> clip(const std::vector<ClipVertex>& polygon, int plane, Dist dist) {
    std::vector<ClipVertex> out;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
      const ClipVertex& p = polygon[i];
      const ClipVertex& q = polygon[(i + 1) % n];
      const double dp = dist(p.position);
      const double dq = dist(q.position);
      if (dp >= 0.0) out.push_back(p);
      if ((dp >= 0.0) != (dq >= 0.0)) {
        const auto key = std::make_tuple(std::min(p.key, q.key), std::max(p.key, q.key), plane);
        auto it = cut_keys_.find(key);
        long long id = 0;
        if (it == cut_keys_.end()) {
          id = -static_cast<long long>(cut_keys_.size()) - 1;
          cut_keys_.emplace(key, id);
          // Interpolate from the lower key so both faces sharing the edge get
          // the bit-identical point.
          const bool p_first = p.key < q.key;
          const ClipVertex& a = p_first ? p : q;
          const ClipVertex& b = p_first ? q : p;
          const double da = p_first ? dp : dq;
          const double db = p_first ? dq : dp;
          const double t = da / (da - db);
          cut_positions_.emplace(id, a.position + (b.position - a.position) * t);
        } else {
          id = it->second;
        }
        out.push_back({cut_positions_.at(id), id});
      }
    }
    return out;
  }

  void emit(const std::vector<ClipVertex>& polygon) {
    for (std::size_t i = 1; i + 1 < polygon.size(); ++i) {
      const Vec3& a = polygon[0].position;
      const Vec3& b = polygon[i].position;
      const Vec3& c = polygon[i + 1].position;
      if (triangle_area(a, b, c) < 1e-12) continue;
      mesh_.faces.push_back({vertex(polygon[0]), vertex(polygon[i]), vertex(polygon[i + 1])});
    }
  }

  TriMesh take() { return std::move(mesh_); }

 private:
  std::uint32_t vertex(const ClipVertex& v) {
    auto it = remap_.find(v.key);
    if (it != remap_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(mesh_.vertices.size());
    mesh_.vertices.push_back(v.position);
    remap_.emplace(v.key, id);
    return id;
  }

  TriMesh mesh_;
  std::map<long long, std::uint32_t> remap_;
  std::map<std::tuple<long long, long long, int>, long long> cut_keys_;
  std::map<long long, Vec3> cut_positions_;
};

/// Per-face fraction of area inside any sphere, by equal-area subdivision.
double face_removed_fraction(const Vec3& a, const Vec3& b, const Vec3& c,
                             const std::vector<std::size_t>& candidates, const HoleSpec& holes) {
  auto inside = [&](const Vec3& p) {
    for (std::size_t h : candidates) {
      if (squared_distance(p, holes.centers[h]) < holes.radii[h] * holes.radii[h]) return true;
    }
    return false;
  };
  for (std::size_t h : candidates) {
    const double r2 = holes.radii[h] * holes.radii[h];
    const Vec3& o = holes.centers[h];
    if (squared_distance(a, o) < r2 && squared_distance(b, o) < r2 && squared_distance(c, o) < r2) {
      return 1.0;
    }
  }
  constexpr double kResolution = 0.25;
  const double longest = std::max({distance(a, b), distance(b, c), distance(c, a)});
  const int n = std::clamp(static_cast<int>(std::ceil(longest / kResolution)), 1, 64);
  const Vec3 du = (b - a) / n;
  const Vec3 dv = (c - a) / n;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; i + j < n; ++j) {
      const Vec3 corner = a + du * i + dv * j;
      // Upward sub-triangle centroid.
      if (inside(corner + (du + dv) / 3.0)) ++hits;
      // Downward sub-triangle centroid.
      if (i + j + 1 < n && inside(corner + (du + dv) * (2.0 / 3.0))) ++hits;
    }
  }
  return static_cast<double>(hits) / (static_cast<double>(n) * n);
}

std::vector<std::size_t> overlapping_holes(const Vec3& a, const Vec3& b, const Vec3& c,
                                           const HoleSpec& holes) {
  std::vector<std::size_t> out;
  Vec3 lo = a, hi = a;
  for (const Vec3* p : {&b, &c}) {
    for (int ax = 0; ax < 3; ++ax) {
      lo[ax] = std::min(lo[ax], (*p)[ax]);
      hi[ax] = std::max(hi[ax], (*p)[ax]);
    }
  }
  for (std::size_t h = 0; h < holes.centers.size(); ++h) {
    double d2 = 0.0;
    for (int ax = 0; ax < 3; ++ax) {
      const double v = holes.centers[h][ax];
      const double e = v < lo[ax] ? lo[ax] - v : (v > hi[ax] ? v - hi[ax] : 0.0);
      d2 += e * e;
    }
    if (d2 < holes.radii[h] * holes.radii[h]) out.push_back(h);
  }
  return out;
}

double removed_area(const TriMesh& mesh, const HoleSpec& holes, const std::vector<std::size_t>* faces) {
  double removed = 0.0;
  auto visit = [&](std::size_t f) {
    const Face& face = mesh.faces[f];
    const Vec3& a = mesh.vertices[face[0]];
    const Vec3& b = mesh.vertices[face[1]];
    const Vec3& c = mesh.vertices[face[2]];
    const auto candidates = overlapping_holes(a, b, c, holes);
    if (candidates.empty()) return;
    removed += triangle_area(a, b, c) * face_removed_fraction(a, b, c, candidates, holes);
  };
  if (faces != nullptr) {
    for (std::size_t f : *faces) visit(f);
  } else {
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) visit(f);
  }
  return removed;
}

void check_holes(const HoleSpec& holes) {
  if (holes.centers.size() != holes.radii.size()) {
    throw DataError("hole spec: centers and radii differ in length");
  }
  for (double r : holes.radii) {
    if (!(r > 0.0)) throw DataError("hole spec: radii must be positive");
  }
}

HoleSpec draw_holes(const TriMesh& mesh, const HoleSamplerConfig& config, Rng& rng) {
  const double total = surface_area(mesh);
  std::poisson_distribution<int> extra(config.mean_extra_holes);
  const int count = std::clamp(1 + extra(rng), config.min_holes, config.max_holes);
  std::vector<double> cumulative(mesh.faces.size());
  double acc = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    acc += face_area(mesh, f);
    cumulative[f] = acc;
  }
  std::uniform_real_distribution<double> pick(0.0, acc);
  std::uniform_real_distribution<double> log_fraction(std::log(config.min_area_fraction),
                                                      std::log(config.max_area_fraction));
  const AxisBox box = bounding_box(mesh.vertices);
  const double diagonal = norm(box.extent());

  HoleSpec holes;
  for (int h = 0; h < count; ++h) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick(rng));
    if (it == cumulative.end()) --it;
    const Face& face = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
    const Vec3 center = random_point_in_triangle(mesh.vertices[face[0]], mesh.vertices[face[1]],
                                                 mesh.vertices[face[2]], rng);
    const double target = std::exp(log_fraction(rng)) * total;

    auto area_for = [&](double radius, const std::vector<std::size_t>& faces) {
      HoleSpec single{{center}, {radius}};
      return removed_area(mesh, single, &faces);
    };
    auto faces_near = [&](double radius) {
      std::vector<std::size_t> faces;
      for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& fc = mesh.faces[f];
        const double reach = radius + std::max({distance(mesh.vertices[fc[0]], mesh.vertices[fc[1]]),
                                                distance(mesh.vertices[fc[1]], mesh.vertices[fc[2]]),
                                                distance(mesh.vertices[fc[2]], mesh.vertices[fc[0]])});
        if (squared_distance(mesh.vertices[fc[0]], center) < reach * reach) faces.push_back(f);
      }
      return faces;
    };
    double hi = std::sqrt(target / std::numbers::pi) * 1.5;
    std::vector<std::size_t> faces = faces_near(hi);
    while (area_for(hi, faces) < target && hi < diagonal) {
      hi *= 1.5;
      faces = faces_near(hi);
    }
    double lo = 0.0;
    for (int iter = 0; iter < 18; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (area_for(mid, faces) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    holes.centers.push_back(center);
    holes.radii.push_back(0.5 * (lo + hi));
  }
  return holes;
}

}  // namespace

double RadiusProfile::operator()(double s, double theta) const {
  const double ridge = 0.5 + 0.5 * std::cos(kTwoPi * s / fold_period_mm + fold_phase);
  const double fold = fold_amplitude * ridge * ridge * ridge * ridge;
  return base_mm * (1.0 - fold + lobe_amplitude * std::cos(lobes * theta + lobe_phase));
}

TriMesh sweep_tube(const Polyline& centerline, const std::function<double(double, double)>& radius,
                   int angular_resolution, bool caps, std::size_t* wall_face_count) {
  validate(centerline);
  if (angular_resolution < 3) throw DataError("sweep_tube: angular resolution must be >= 3");
  const auto cumulative = cumulative_arc_length(centerline);
  const auto tangents = vertex_tangents(centerline);
  const auto normals = transport_normals(tangents);
  const std::size_t rings = centerline.size();
  const auto n = static_cast<std::uint32_t>(angular_resolution);

  TriMesh mesh;
  mesh.vertices.reserve(rings * n + 2);
  for (std::size_t i = 0; i < rings; ++i) {
    const Vec3 binormal = cross(tangents[i], normals[i]);
    for (std::uint32_t j = 0; j < n; ++j) {
      const double theta = kTwoPi * j / n;
      const double r = radius(cumulative[i], theta);
      mesh.vertices.push_back(centerline.points[i] +
                              (normals[i] * std::cos(theta) + binormal * std::sin(theta)) * r);
    }
  }
  auto v = [n](std::size_t ring, std::uint32_t j) {
    return static_cast<std::uint32_t>(ring * n + (j % n));
  };
  for (std::size_t i = 0; i + 1 < rings; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      mesh.faces.push_back({v(i, j), v(i, j + 1), v(i + 1, j + 1)});
      mesh.faces.push_back({v(i, j), v(i + 1, j + 1), v(i + 1, j)});
    }
  }
  if (wall_face_count != nullptr) *wall_face_count = mesh.faces.size();
  if (caps) {
    const auto start = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(centerline.points.front());
    const auto end = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(centerline.points.back());
    for (std::uint32_t j = 0; j < n; ++j) {
      mesh.faces.push_back({start, v(0, j + 1), v(0, j)});
      mesh.faces.push_back({end, v(rings - 1, j), v(rings - 1, j + 1)});
    }
  }
  return mesh;
}

ColonModel generate_colon(std::uint64_t seed, const ColonConfig& config) {
  if (config.radius_min_mm < 5.0 || config.radius_max_mm > 30.0 ||
      config.radius_min_mm > config.radius_max_mm) {
    throw DataError("generate_colon: radii must lie in [5, 30] mm");
  }
  if (!(config.length_mm > 0.0) || !(config.ring_spacing_mm > 0.0) ||
      !(config.waypoint_spacing_mm > 0.0)) {
    throw DataError("generate_colon: lengths must be positive");
  }
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    RadiusProfile profile;
    profile.base_mm = config.radius_min_mm + (config.radius_max_mm - config.radius_min_mm) * unit(rng);
    profile.fold_amplitude = config.fold_amplitude;
    profile.fold_period_mm = config.fold_period_mm;
    profile.fold_phase = kTwoPi * unit(rng);
    profile.lobe_amplitude = config.lobe_amplitude;
    profile.lobe_phase = kTwoPi * unit(rng);

    std::vector<Vec3> waypoints{Vec3{}};
    Vec3 direction{1.0, 0.0, 0.0};
    double chord = 0.0;
    while (chord < config.length_mm + 2.0 * config.waypoint_spacing_mm) {
      const Vec3 u = any_perpendicular(direction);
      const Vec3 w = cross(direction, u);
      const double phi = kTwoPi * unit(rng);
      const Vec3 axis = u * std::cos(phi) + w * std::sin(phi);
      direction = normalized(rotate_about(direction, axis, config.tortuosity * unit(rng)));
      waypoints.push_back(waypoints.back() + direction * config.waypoint_spacing_mm);
      chord += config.waypoint_spacing_mm;
    }
    const CubicSpline spline(waypoints);
    Polyline dense;
    const double tmax = spline.length_parameter();
    const auto steps = static_cast<std::size_t>(std::ceil(tmax / 0.2));
    for (std::size_t i = 0; i <= steps; ++i) {
      dense.points.push_back(spline(tmax * static_cast<double>(i) / static_cast<double>(steps)));
    }
    if (arc_length(dense) < config.length_mm) continue;
    Polyline centerline = resample(sub_polyline(dense, 0.0, config.length_mm), config.ring_spacing_mm);
    if (!centerline_is_admissible(centerline, profile.max_radius())) continue;

    ColonModel model;
    model.radius = profile;
    model.mesh = sweep_tube(
        centerline, [&profile](double s, double theta) { return profile(s, theta); },
        config.angular_resolution, true, &model.tube_face_count);
    model.centerline = std::move(centerline);
    return model;
  }
  throw DataError("generate_colon: no admissible centerline after " +
                  std::to_string(config.max_attempts) + " attempts");
}

std::vector<ColonSegment> split_colon(const ColonModel& model, double arc_length_mm) {
  const double total = arc_length(model.centerline);
  if (!(arc_length_mm > 0.0) || arc_length_mm > total + kArcCountToleranceMm) {
    throw DataError("split_colon: arc length must lie in (0, centerline length]");
  }
  const auto count = static_cast<std::size_t>(std::floor((total + kArcCountToleranceMm) / arc_length_mm));
  const auto cumulative = cumulative_arc_length(model.centerline);
  const PolylineIndex locator(model.centerline);
  std::vector<double> params(model.mesh.vertices.size());
  for (std::size_t v = 0; v < params.size(); ++v) params[v] = locator.nearest(model.mesh.vertices[v]).s;
  const std::size_t wall_faces =
      model.tube_face_count > 0 ? model.tube_face_count : model.mesh.faces.size();

  constexpr double kMargin = 5.0;
  std::vector<ColonSegment> segments;
  for (std::size_t k = 0; k < count; ++k) {
    const double s0 = arc_length_mm * static_cast<double>(k);
    const double s1 = std::min(arc_length_mm * static_cast<double>(k + 1), total);
    const Vec3 c0 = point_at(model.centerline, cumulative, s0);
    const Vec3 c1 = point_at(model.centerline, cumulative, s1);
    const Polyline arc = sub_polyline(model.centerline, s0, s1);
    const Vec3 t0 = normalized(arc.points[1] - arc.points[0]);
    const Vec3 t1 = normalized(arc.points[arc.size() - 1] - arc.points[arc.size() - 2]);
    // Tangents from the arc's end segments; use a finer estimate from the
    // full centerline when available.
    const auto cut_tangent = [&](double s, const Vec3& fallback) {
      const double h = 0.5;
      const Vec3 a = point_at(model.centerline, cumulative, std::max(0.0, s - h));
      const Vec3 b = point_at(model.centerline, cumulative, std::min(total, s + h));
      const Vec3 t = normalized(b - a);
      return squared_norm(t) > 0.0 ? t : fallback;
    };
    const Vec3 n0 = cut_tangent(s0, t0);
    const Vec3 n1 = cut_tangent(s1, t1);

    SegmentBuilder builder;
    for (std::size_t f = 0; f < wall_faces; ++f) {
      const Face& face = model.mesh.faces[f];
      const double lo = std::min({params[face[0]], params[face[1]], params[face[2]]});
      const double hi = std::max({params[face[0]], params[face[1]], params[face[2]]});
      if (hi < s0 - kMargin || lo > s1 + kMargin) continue;
      std::vector<ClipVertex> polygon;
      for (auto idx : face) polygon.push_back({model.mesh.vertices[idx], static_cast<long long>(idx)});
      if (lo < s0 + kMargin) {
        polygon = builder.clip(polygon, 0, [&](const Vec3& x) { return dot(x - c0, n0); });
      }
      if (polygon.size() >= 3 && hi > s1 - kMargin) {
        polygon = builder.clip(polygon, 1, [&](const Vec3& x) { return dot(c1 - x, n1); });
      }
      if (polygon.size() >= 3) builder.emit(polygon);
    }
    ColonSegment segment;
    segment.mesh = builder.take();
    segment.centerline = arc;
    segment.s_begin = s0;
    segment.s_end = s1;
    segments.push_back(std::move(segment));
  }
  return segments;
}

double removed_area_fraction(const TriMesh& mesh, const HoleSpec& holes) {
  check_holes(holes);
  const double total = surface_area(mesh);
  if (total <= 0.0) throw DataError("removed_area_fraction: mesh has zero area");
  if (holes.centers.empty()) return 0.0;
  return std::clamp(removed_area(mesh, holes, nullptr) / total, 0.0, 1.0);
}

CropResult crop_holes(const TriMesh& mesh, const HoleSpec& holes, std::uint64_t seed,
                      double points_per_mm2, double coverage_floor) {
  if (mesh.empty()) throw DataError("crop_holes: mesh is empty");
  check_holes(holes);
  if (points_per_mm2 < 0.25) throw DataError("crop_holes: density below 25 points per cm^2");

  Rng rng(seed);
  const PointCloud samples = sample_surface_random(mesh, points_per_mm2, rng);
  CropResult result;
  result.holes = holes;
  for (const Vec3& p : samples.points) {
    bool removed = false;
    for (std::size_t h = 0; h < holes.centers.size() && !removed; ++h) {
      removed = squared_distance(p, holes.centers[h]) < holes.radii[h] * holes.radii[h];
    }
    (removed ? result.hole_points : result.partial).points.push_back(p);
  }
  result.coverage = 1.0 - removed_area_fraction(mesh, holes);
  if (result.coverage < coverage_floor || result.partial.empty()) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "crop_holes: coverage %.4f below floor %.4f", result.coverage,
                  coverage_floor);
    throw DataError(msg);
  }
  return result;
}

CropResult crop_holes(const TriMesh& mesh, const HoleSamplerConfig& config, std::uint64_t seed) {
  if (mesh.empty()) throw DataError("crop_holes: mesh is empty");
  if (config.min_holes < 0 || config.max_holes < config.min_holes ||
      !(config.min_area_fraction > 0.0) || config.max_area_fraction < config.min_area_fraction) {
    throw DataError("crop_holes: invalid hole sampler config");
  }
  std::string last_error;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt), 0}));
    const HoleSpec holes = draw_holes(mesh, config, rng);
    try {
      return crop_holes(mesh, holes, derive_seed(seed, {static_cast<std::uint64_t>(attempt), 1}),
                        config.points_per_mm2, config.coverage_floor);
    } catch (const DataError& e) {
      last_error = e.what();
    }
  }
  throw DataError("crop_holes: gave up after " + std::to_string(config.max_attempts) +
                  " attempts (" + last_error + ")");
}

std::vector<SegmentSample> permute_holes(const ColonSegment& segment, int n,
                                         const HoleSamplerConfig& config, std::uint64_t seed,
                                         const std::string& id_prefix) {
  if (n < 1) throw DataError("permute_holes: n must be >= 1");
  std::vector<SegmentSample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    CropResult crop;
    try {
      crop = crop_holes(segment.mesh, config, derive_seed(seed, {static_cast<std::uint64_t>(p)}));
    } catch (const DataError& e) {
      throw DataError("permutation " + std::to_string(p) + ": " + e.what());
    }
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_p%02d", p);
    SegmentSample sample;
    sample.id = id_prefix + suffix;
    sample.partial = std::move(crop.partial);
    sample.gt_mesh = segment.mesh;
    sample.gt_centerline = segment.centerline;
    sample.gt_hole_points = std::move(crop.hole_points);
    sample.arc_length_mm = segment.s_end - segment.s_begin;
    sample.gt_coverage = crop.coverage;
    samples.push_back(std::move(sample));
  }
  return samples;
}

PointCloud add_noise(const PointCloud& cloud, double sigma_mm, std::uint64_t seed) {
  if (sigma_mm < 0.0) throw DataError("add_noise: sigma must be non-negative");
  if (sigma_mm == 0.0) return cloud;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma_mm);
  PointCloud out = cloud;
  for (Vec3& p : out.points) {
    p.x += gauss(rng);
    p.y += gauss(rng);
    p.z += gauss(rng);
  }
  return out;
}

SegmentSample augment(const SegmentSample& sample, const AugmentConfig& config, std::uint64_t seed) {
  if (config.scale_min < 0.8 || config.scale_max > 1.25 || config.scale_min > config.scale_max) {
    throw UsageError("augment: scale range must lie within [0.8, 1.25]");
  }
  if (config.deformation_max_mm < 0.0 || config.deformation_max_mm > 3.0) {
    throw UsageError("augment: deformation must lie within [0, 3] mm");
  }
  if (config.noise_sigma_min_mm < 0.0 || config.noise_sigma_max_mm > 0.5 ||
      config.noise_sigma_min_mm > config.noise_sigma_max_mm) {
    throw UsageError("augment: noise sigma must lie within [0, 0.5] mm");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = config.scale_min + (config.scale_max - config.scale_min) * unit(rng);

  // Uniform rotation from a random unit quaternion.
  double rot[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  if (config.rotate) {
    const double u1 = unit(rng), u2 = unit(rng), u3 = unit(rng);
    const double qx = std::sqrt(1 - u1) * std::sin(kTwoPi * u2);
    const double qy = std::sqrt(1 - u1) * std::cos(kTwoPi * u2);
    const double qz = std::sqrt(u1) * std::sin(kTwoPi * u3);
    const double qw = std::sqrt(u1) * std::cos(kTwoPi * u3);
    const double m[3][3] = {
        {1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)},
        {2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)},
        {2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)}};
    std::copy(&m[0][0], &m[0][0] + 9, &rot[0][0]);
  }

  struct Wave {
    Vec3 amplitude;
    Vec3 wave_vector;
    double phase;
  };
  std::vector<Wave> waves;
  if (config.deformation_max_mm > 0.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_unit = [&] {
      Vec3 v{};
      while (squared_norm(v) < 1e-12) v = {gauss(rng), gauss(rng), gauss(rng)};
      return normalized(v);
    };
    double weights[3];
    double weight_sum = 0.0;
    for (double& w : weights) {
      w = unit(rng);
      weight_sum += w;
    }
    const double budget = config.deformation_max_mm * unit(rng);
    for (double w : weights) {
      const double wavelength = 60.0 + 90.0 * unit(rng);
      waves.push_back({random_unit() * (budget * w / weight_sum),
                       random_unit() * (kTwoPi / wavelength), kTwoPi * unit(rng)});
    }
  }
  const double sigma = config.noise_sigma_min_mm +
                       (config.noise_sigma_max_mm - config.noise_sigma_min_mm) * unit(rng);
  const std::uint64_t noise_seed = rng();

  SegmentSample out = sample;
  const bool geometric = scale != 1.0 || config.rotate || !waves.empty();
  if (geometric) {
    Vec3 center{};
    for (const Vec3& p : sample.gt_mesh.vertices) center += p;
    if (!sample.gt_mesh.vertices.empty()) center = center / static_cast<double>(sample.gt_mesh.vertices.size());
    auto transform = [&](const Vec3& p) {
      Vec3 q = p;
      for (const Wave& w : waves) q += w.amplitude * std::sin(dot(w.wave_vector, p) + w.phase);
      const Vec3 d = (q - center) * scale;
      return center + Vec3{rot[0][0] * d.x + rot[0][1] * d.y + rot[0][2] * d.z,
                           rot[1][0] * d.x + rot[1][1] * d.y + rot[1][2] * d.z,
                           rot[2][0] * d.x + rot[2][1] * d.y + rot[2][2] * d.z};
    };
    for (Vec3& p : out.partial.points) p = transform(p);
    for (Vec3& p : out.gt_mesh.vertices) p = transform(p);
    for (Vec3& p : out.gt_centerline.points) p = transform(p);
    for (Vec3& p : out.gt_hole_points.points) p = transform(p);
    out.arc_length_mm = arc_length(out.gt_centerline);
  }
  if (sigma > 0.0) {
    out.partial = add_noise(out.partial, sigma, noise_seed);
    out.noise_sigma_mm = sigma;
  }
  return out;
}

}  // namespace covseg::datagen
