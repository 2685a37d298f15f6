#pragma once

#include "covseg/geometry.hpp"
#include "covseg/rng.hpp"

namespace covseg {

/// Area-uniform random points on the mesh, round(area * density) of them.
PointCloud sample_surface_random(const TriMesh& mesh, double points_per_mm2, Rng& rng);

/// Deterministic barycentric lattice on every face with edge spacing at most
/// `max_spacing`; vertices included. Used where a gap-free sampling matters
/// more than randomness (voxelizing a complete surface).
PointCloud sample_surface_regular(const TriMesh& mesh, double max_spacing);

/// Area-uniform random point on a single triangle.
Vec3 random_point_in_triangle(const Vec3& a, const Vec3& b, const Vec3& c, Rng& rng);

}  // namespace covseg
