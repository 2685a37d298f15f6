#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "covseg/geometry.hpp"
#include "covseg/rng.hpp"

namespace covseg::datagen {

/// Wall radius as a function of arc length s (mm) and angle theta around the
/// centerline. Periodic inward ridges emulate haustral folds; a low-order
/// angular term gives the rounded-triangular lumen cross section.
struct RadiusProfile {
  double base_mm = 15.0;
  double fold_amplitude = 0.15;  // fraction of base radius
  double fold_period_mm = 25.0;
  double fold_phase = 0.0;
  int lobes = 3;
  double lobe_amplitude = 0.05;  // fraction of base radius
  double lobe_phase = 0.0;

  double operator()(double s, double theta) const;
  double max_radius() const { return base_mm * (1.0 + lobe_amplitude); }
};

struct ColonConfig {
  double length_mm = 300.0;
  double radius_min_mm = 12.0;
  double radius_max_mm = 18.0;
  /// Largest turn between consecutive waypoint directions (radians).
  double tortuosity = 0.6;
  double waypoint_spacing_mm = 35.0;
  double fold_amplitude = 0.15;
  double fold_period_mm = 25.0;
  double lobe_amplitude = 0.05;
  double ring_spacing_mm = 1.0;
  int angular_resolution = 96;
  int max_attempts = 10;
};

struct ColonModel {
  TriMesh mesh;
  Polyline centerline;
  RadiusProfile radius;
  /// Faces [0, tube_face_count) form the tube wall; the rest are the end caps.
  std::size_t tube_face_count = 0;
};

struct ColonSegment {
  TriMesh mesh;
  Polyline centerline;
  double s_begin = 0.0;
  double s_end = 0.0;
};

struct HoleSpec {
  std::vector<Vec3> centers;
  std::vector<double> radii;
};

struct HoleSamplerConfig {
  double mean_extra_holes = 3.0;  // hole count ~ 1 + Poisson(mean), clipped
  int min_holes = 1;
  int max_holes = 10;
  double min_area_fraction = 0.005;
  double max_area_fraction = 0.15;
  double coverage_floor = 0.3;
  int max_attempts = 10;
  double points_per_mm2 = 4.0;
};

struct CropResult {
  PointCloud partial;
  PointCloud hole_points;
  double coverage = 1.0;
  HoleSpec holes;
};

struct SegmentSample {
  std::string id;
  PointCloud partial;
  TriMesh gt_mesh;
  Polyline gt_centerline;
  PointCloud gt_hole_points;
  double arc_length_mm = 0.0;
  double gt_coverage = 1.0;
  double noise_sigma_mm = 0.0;
};

struct AugmentConfig {
  double scale_min = 1.0;
  double scale_max = 1.0;
  bool rotate = false;
  double deformation_max_mm = 0.0;
  double noise_sigma_min_mm = 0.0;
  double noise_sigma_max_mm = 0.0;
};

/// Sweeps a closed-ring tube along `centerline` using parallel-transport
/// frames. `radius(s, theta)` gives the wall distance. End caps are appended
/// after the wall faces when `caps` is set.
TriMesh sweep_tube(const Polyline& centerline, const std::function<double(double, double)>& radius,
                   int angular_resolution, bool caps, std::size_t* wall_face_count = nullptr);

/// Random colon-like tube: natural cubic spline through jittered waypoints,
/// radius modulated by folds. Deterministic in (seed, config).
ColonModel generate_colon(std::uint64_t seed, const ColonConfig& config = {});

/// Consecutive segments of `arc_length_mm` along the centerline; the shorter
/// remainder is discarded. Faces crossing a cut plane are clipped.
std::vector<ColonSegment> split_colon(const ColonModel& model, double arc_length_mm);

/// Removes the points inside any sphere of `holes` from a dense surface
/// sampling. Throws DataError when coverage falls below `coverage_floor`.
CropResult crop_holes(const TriMesh& mesh, const HoleSpec& holes, std::uint64_t seed,
                      double points_per_mm2 = 4.0, double coverage_floor = 0.3);

/// Draws hole spheres from the sampler config, retrying when the coverage
/// floor is violated.
CropResult crop_holes(const TriMesh& mesh, const HoleSamplerConfig& config, std::uint64_t seed);

/// Fraction of mesh area inside at least one sphere of `holes`.
double removed_area_fraction(const TriMesh& mesh, const HoleSpec& holes);

/// `n` independent hole draws on one segment, each on its own RNG substream.
std::vector<SegmentSample> permute_holes(const ColonSegment& segment, int n,
                                         const HoleSamplerConfig& config, std::uint64_t seed,
                                         const std::string& id_prefix = "sample");

/// Applies scale, rotation and a smooth deformation consistently to every
/// geometric field; Gaussian noise goes to the partial cloud only.
SegmentSample augment(const SegmentSample& sample, const AugmentConfig& config, std::uint64_t seed);

/// Adds i.i.d. Gaussian noise of `sigma_mm` per coordinate.
PointCloud add_noise(const PointCloud& cloud, double sigma_mm, std::uint64_t seed);

}  // namespace covseg::datagen
