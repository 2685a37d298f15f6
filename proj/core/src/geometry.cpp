#include "covseg/geometry.hpp"

#include <algorithm>
#include <sstream>

#include "covseg/error.hpp"

namespace covseg {

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (n == 0.0) return {};
  return a / n;
}

Vec3 any_perpendicular(const Vec3& a) {
  // Cross with the axis least aligned with a.
  const double ax = std::abs(a.x), ay = std::abs(a.y), az = std::abs(a.z);
  Vec3 axis{1.0, 0.0, 0.0};
  if (ay <= ax && ay <= az) {
    axis = {0.0, 1.0, 0.0};
  } else if (az <= ax && az <= ay) {
    axis = {0.0, 0.0, 1.0};
  }
  return normalized(cross(a, axis));
}

bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

AxisBox bounding_box(std::span<const Vec3> points) {
  if (points.empty()) throw DataError("bounding_box: empty point set");
  AxisBox box{points.front(), points.front()};
  for (const Vec3& p : points) {
    for (int a = 0; a < 3; ++a) {
      box.min[a] = std::min(box.min[a], p[a]);
      box.max[a] = std::max(box.max[a], p[a]);
    }
  }
  return box;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * norm(cross(b - a, c - a));
}

double face_area(const TriMesh& mesh, std::size_t face) {
  const Face& f = mesh.faces[face];
  return triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
}

double surface_area(const TriMesh& mesh) {
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) total += face_area(mesh, f);
  return total;
}

void validate(const TriMesh& mesh) {
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!is_finite(mesh.vertices[i])) {
      throw DataError("mesh vertex " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  const auto n = mesh.vertices.size();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& face = mesh.faces[f];
    for (auto idx : face) {
      if (idx >= n) {
        std::ostringstream msg;
        msg << "mesh face " << f << " references vertex " << idx << " but only " << n
            << " vertices exist";
        throw DataError(msg.str());
      }
    }
    if (face[0] == face[1] && face[1] == face[2]) {
      throw DataError("mesh face " + std::to_string(f) + " is degenerate");
    }
  }
}

void validate(const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!is_finite(cloud.points[i])) {
      throw DataError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
}

void validate(const Polyline& line) {
  if (line.points.size() < 2) throw DataError("polyline needs at least two points");
  for (std::size_t i = 0; i < line.points.size(); ++i) {
    if (!is_finite(line.points[i])) {
      throw DataError("polyline point " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && line.points[i] == line.points[i - 1]) {
      throw DataError("polyline points " + std::to_string(i - 1) + " and " +
                      std::to_string(i) + " coincide");
    }
  }
}

double arc_length(const Polyline& line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.points.size(); ++i) {
    total += distance(line.points[i - 1], line.points[i]);
  }
  return total;
}

std::vector<double> cumulative_arc_length(const Polyline& line) {
  std::vector<double> cumulative(line.points.size(), 0.0);
  for (std::size_t i = 1; i < line.points.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + distance(line.points[i - 1], line.points[i]);
  }
  return cumulative;
}

Vec3 point_at(const Polyline& line, std::span<const double> cumulative, double s) {
  if (line.points.empty()) throw DataError("point_at: empty polyline");
  if (s <= 0.0 || line.points.size() == 1) return line.points.front();
  if (s >= cumulative.back()) return line.points.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
  const auto hi = static_cast<std::size_t>(it - cumulative.begin());
  const std::size_t lo = hi - 1;
  const double len = cumulative[hi] - cumulative[lo];
  const double t = len > 0.0 ? (s - cumulative[lo]) / len : 0.0;
  return line.points[lo] + (line.points[hi] - line.points[lo]) * t;
}

Polyline resample(const Polyline& line, double spacing) {
  if (spacing <= 0.0) throw DataError("resample: spacing must be positive");
  Polyline clean;
  for (const Vec3& p : line.points) {
    if (clean.points.empty() || !(clean.points.back() == p)) clean.points.push_back(p);
  }
  if (clean.points.size() < 2) return clean;
  const auto cumulative = cumulative_arc_length(clean);
  const double total = cumulative.back();
  const auto segments = static_cast<std::size_t>(std::max(1.0, std::ceil(total / spacing)));
  Polyline out;
  out.points.reserve(segments + 1);
  for (std::size_t i = 0; i <= segments; ++i) {
    if (i == segments) {
      out.points.push_back(clean.points.back());
    } else {
      out.points.push_back(point_at(clean, cumulative, total * static_cast<double>(i) /
                                                           static_cast<double>(segments)));
    }
  }
  return out;
}

Polyline sub_polyline(const Polyline& line, double s0, double s1) {
  const auto cumulative = cumulative_arc_length(line);
  Polyline out;
  out.points.push_back(point_at(line, cumulative, s0));
  for (std::size_t i = 0; i < line.points.size(); ++i) {
    if (cumulative[i] > s0 && cumulative[i] < s1) out.points.push_back(line.points[i]);
  }
  const Vec3 last = point_at(line, cumulative, s1);
  if (!(out.points.back() == last)) out.points.push_back(last);
  return out;
}

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b, double* t) {
  const Vec3 ab = b - a;
  const double len2 = squared_norm(ab);
  double u = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  if (t != nullptr) *t = u;
  return a + ab * u;
}

std::vector<Vec3> vertex_tangents(const Polyline& line) {
  const auto n = line.points.size();
  std::vector<Vec3> tangents(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 < n ? i + 1 : n - 1;
    tangents[i] = normalized(line.points[hi] - line.points[lo]);
  }
  return tangents;
}

std::vector<Vec3> transport_normals(const std::vector<Vec3>& tangents) {
  std::vector<Vec3> normals(tangents.size());
  if (tangents.empty()) return normals;
  normals[0] = any_perpendicular(tangents[0]);
  for (std::size_t i = 1; i < tangents.size(); ++i) {
    const Vec3& t = tangents[i];
    Vec3 n = normals[i - 1] - t * dot(normals[i - 1], t);
    if (squared_norm(n) < 1e-18) n = any_perpendicular(t);
    normals[i] = normalized(n);
  }
  return normals;
}

PointCloud to_cloud(const Polyline& line) { return PointCloud{line.points}; }

PointCloud to_cloud(const TriMesh& mesh) { return PointCloud{mesh.vertices}; }

}  // namespace covseg
