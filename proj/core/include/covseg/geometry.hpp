#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace covseg {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double squared_distance(const Vec3& a, const Vec3& b) { return squared_norm(a - b); }
inline double distance(const Vec3& a, const Vec3& b) { return std::sqrt(squared_distance(a, b)); }

/// Unit vector along `a`; returns the zero vector for a zero input.
Vec3 normalized(const Vec3& a);

/// Any unit vector perpendicular to `a` (which must be non-zero).
Vec3 any_perpendicular(const Vec3& a);

bool is_finite(const Vec3& a);

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

using Face = std::array<std::uint32_t, 3>;

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }
};

/// Ordered centerline points in mm.
struct Polyline {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
};

struct AxisBox {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5; }
};

/// Bounding box of a non-empty point span.
AxisBox bounding_box(std::span<const Vec3> points);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double face_area(const TriMesh& mesh, std::size_t face);
double surface_area(const TriMesh& mesh);

/// Throws DataError when a face index is out of range, a face is degenerate
/// (three identical indices) or a coordinate is not finite.
void validate(const TriMesh& mesh);
void validate(const PointCloud& cloud);
/// Checks at least two points, finite coordinates, distinct consecutive
/// points.
void validate(const Polyline& line);

double arc_length(const Polyline& line);

/// Slack when counting whole arcs along a centerline, so resampling
/// round-off (a 210 mm curve measuring 209.999 mm) does not drop a segment.
inline constexpr double kArcCountToleranceMm = 0.01;

/// Cumulative arc length at every vertex; front() == 0.
std::vector<double> cumulative_arc_length(const Polyline& line);

/// Point at arc-length parameter `s` (clamped to [0, length]).
Vec3 point_at(const Polyline& line, std::span<const double> cumulative, double s);

/// Uniformly resampled copy with spacing at most `spacing`. End points are
/// kept exactly. Consecutive duplicate input points are skipped.
Polyline resample(const Polyline& line, double spacing);

/// Sub-polyline between arc-length parameters s0 < s1.
Polyline sub_polyline(const Polyline& line, double s0, double s1);

/// Closest point on segment [a, b] to p, with its parameter t in [0, 1].
Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b, double* t = nullptr);

/// Unit tangent per vertex (central differences; one-sided at the ends).
std::vector<Vec3> vertex_tangents(const Polyline& line);

/// Normals transported along the tangents without twist; the first one is
/// any_perpendicular(tangents[0]).
std::vector<Vec3> transport_normals(const std::vector<Vec3>& tangents);

PointCloud to_cloud(const Polyline& line);
PointCloud to_cloud(const TriMesh& mesh);

}  // namespace covseg
