#include "covseg/sampling.hpp"

#include <algorithm>

#include "covseg/error.hpp"

namespace covseg {

Vec3 random_point_in_triangle(const Vec3& a, const Vec3& b, const Vec3& c, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r1 = std::sqrt(unit(rng));
  const double r2 = unit(rng);
  return a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
}

PointCloud sample_surface_random(const TriMesh& mesh, double points_per_mm2, Rng& rng) {
  if (!(points_per_mm2 > 0.0)) throw DataError("sampling density must be positive");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += face_area(mesh, f);
    cumulative[f] = total;
  }
  PointCloud cloud;
  if (total <= 0.0) return cloud;
  const auto count = static_cast<std::size_t>(std::llround(total * points_per_mm2));
  cloud.points.reserve(count);
  std::uniform_real_distribution<double> pick(0.0, total);
  for (std::size_t n = 0; n < count; ++n) {
    const double u = pick(rng);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const Face& face = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
    cloud.points.push_back(random_point_in_triangle(mesh.vertices[face[0]], mesh.vertices[face[1]],
                                                    mesh.vertices[face[2]], rng));
  }
  return cloud;
}

PointCloud sample_surface_regular(const TriMesh& mesh, double max_spacing) {
  if (!(max_spacing > 0.0)) throw DataError("sampling spacing must be positive");
  PointCloud cloud;
  cloud.points = mesh.vertices;
  for (const Face& face : mesh.faces) {
    const Vec3& a = mesh.vertices[face[0]];
    const Vec3& b = mesh.vertices[face[1]];
    const Vec3& c = mesh.vertices[face[2]];
    const double longest = std::max({distance(a, b), distance(b, c), distance(c, a)});
    const int n = std::max(1, static_cast<int>(std::ceil(longest / max_spacing)));
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        const int k = n - i - j;
        // Corners are already present as mesh vertices.
        if (i == n || j == n || k == n) continue;
        const double u = static_cast<double>(i) / n;
        const double v = static_cast<double>(j) / n;
        cloud.points.push_back(a * (1.0 - u - v) + b * u + c * v);
      }
    }
  }
  return cloud;
}

}  // namespace covseg
