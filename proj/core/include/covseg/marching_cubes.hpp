#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "covseg/geometry.hpp"
#include "covseg/voxel_grid.hpp"

namespace covseg {

struct IsoSurface {
  TriMesh mesh;
  /// Linear index (lower corner voxel) of the cell that emitted each face.
  std::vector<std::size_t> face_cells;
  /// Grid edge of each vertex: lower voxel linear index * 3 + axis.
  std::vector<std::size_t> vertex_edges;
  /// Set when no active cell crosses the isovalue.
  bool empty = true;
};

/// Marching cubes on the voxel-center lattice with linear edge interpolation.
/// A corner counts as inside when its value is below `isovalue`. When
/// `active` is given (one byte per voxel), only cells whose eight corners are
/// all active are polygonized. Vertices are shared per grid edge and emitted
/// in mm; output order is deterministic (cells in linear order).
IsoSurface marching_cubes(const ScalarField& field, double isovalue = 0.0,
                          const std::vector<std::uint8_t>* active = nullptr);

struct CrackReport {
  std::size_t boundary_edges = 0;
  /// Boundary edges lying on a cell face shared with another active cell.
  std::size_t interior_boundary_edges = 0;
  /// Edges used by more than two faces.
  std::size_t overused_edges = 0;

  bool ok() const { return interior_boundary_edges == 0 && overused_edges == 0; }
};

/// Checks that every edge is shared by at most two faces and that open edges
/// only occur on cell faces next to inactive or out-of-grid cells.
CrackReport check_cracks(const IsoSurface& surface, const GridSpec& spec,
                         const std::vector<std::uint8_t>* active = nullptr);

}  // namespace covseg
