#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "covseg/geometry.hpp"
#include "covseg/voxel_grid.hpp"

namespace covseg::io {

// Volume files (".vol"): one line of JSON header, then dx*dy*dz little-endian
// float32 values, x fastest.
void write_volume(const std::filesystem::path& path, const VoxelGrid& grid);
VoxelGrid read_volume(const std::filesystem::path& path);
/// Parses and checks a volume file without keeping the payload.
GridSpec validate_volume(const std::filesystem::path& path);

// ASCII PLY. Point clouds are vertex-only PLY files. The optional per-vertex
// flag is stored as a float `quality` property (1 = flagged).
void write_mesh(const std::filesystem::path& path, const TriMesh& mesh,
                const std::vector<bool>* vertex_flags = nullptr);
TriMesh read_mesh(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_cloud(const std::filesystem::path& path);

/// Reads the vertex `quality` flags of a PLY written by write_mesh.
std::vector<bool> read_vertex_flags(const std::filesystem::path& path);

// Polyline files: {"points_mm": [[x,y,z], ...]}.
void write_polyline(const std::filesystem::path& path, const Polyline& line);
Polyline read_polyline(const std::filesystem::path& path);

/// One dataset unit. File fields are paths relative to the manifest directory.
struct SampleRecord {
  std::string id;
  std::string partial_cloud;
  std::string gt_mesh;
  std::string gt_centerline;
  std::string gt_hole_points;
  double arc_length_mm = 0.0;
  double gt_coverage = 1.0;
  double noise_sigma_mm = 0.0;
  // Written by `gen-data --encode`; empty when absent.
  std::string h_input;
  std::string h_target;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records);
std::vector<SampleRecord> read_manifest(const std::filesystem::path& path);

/// Writes through a temporary sibling file and a rename; throws IoError.
void write_text(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace covseg::io
