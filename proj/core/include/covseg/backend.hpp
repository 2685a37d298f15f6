#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "covseg/geometry.hpp"
#include "covseg/voxel_grid.hpp"

namespace covseg {

struct Completion {
  VoxelGrid heatmap;
  std::vector<std::string> warnings;
};

/// Turns an input heatmap into a predicted target heatmap on the same grid.
/// Implementations are read-only after construction.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual Completion complete(const VoxelGrid& h_input, const std::string& id) const = 0;
  virtual std::string name() const = 0;
};

struct GroundTruth {
  TriMesh mesh;
  Polyline centerline;
};

/// Encodes the target heatmap from ground truth looked up by sample id.
class OracleBackend final : public CompletionBackend {
 public:
  using Lookup = std::function<GroundTruth(const std::string& id)>;

  explicit OracleBackend(Lookup lookup) : lookup_(std::move(lookup)) {}
  explicit OracleBackend(std::map<std::string, GroundTruth> truth);

  Completion complete(const VoxelGrid& h_input, const std::string& id) const override;
  std::string name() const override { return "oracle"; }

 private:
  Lookup lookup_;
};

/// Loads `<dir>/<id>.pred.vol`; values are clamped to [0, 1].
class FileStoreBackend final : public CompletionBackend {
 public:
  explicit FileStoreBackend(std::filesystem::path dir);

  Completion complete(const VoxelGrid& h_input, const std::string& id) const override;
  std::string name() const override { return "file:" + dir_.string(); }
  std::filesystem::path prediction_path(const std::string& id) const;

 private:
  std::filesystem::path dir_;
};

/// True when the grids agree in dims and (to round-off) in placement.
bool same_grid(const GridSpec& a, const GridSpec& b);

}  // namespace covseg
