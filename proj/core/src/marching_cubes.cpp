#include "covseg/marching_cubes.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "covseg/error.hpp"
#include "mc_tables.hpp"

namespace covseg {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

/// Lower voxel (relative to the cell) and axis of each cube edge.
struct CellEdge {
  int offset[3];
  int axis;
};

constexpr CellEdge cell_edge(int e) {
  const int* a = kCorner[kEdgeCorners[e][0]];
  const int* b = kCorner[kEdgeCorners[e][1]];
  CellEdge out{{std::min(a[0], b[0]), std::min(a[1], b[1]), std::min(a[2], b[2])}, 0};
  for (int axis = 0; axis < 3; ++axis) {
    if (a[axis] != b[axis]) out.axis = axis;
  }
  return out;
}

bool cell_active(const GridSpec& spec, const std::vector<std::uint8_t>* active, int i, int j, int k) {
  if (i < 0 || j < 0 || k < 0 || i >= spec.dims[0] - 1 || j >= spec.dims[1] - 1 || k >= spec.dims[2] - 1) {
    return false;
  }
  if (active == nullptr) return true;
  for (const auto& c : kCorner) {
    if ((*active)[spec.index(i + c[0], j + c[1], k + c[2])] == 0) return false;
  }
  return true;
}

}  // namespace

IsoSurface marching_cubes(const ScalarField& field, double isovalue,
                          const std::vector<std::uint8_t>* active) {
  const GridSpec& spec = field.spec;
  if (field.values.size() != spec.voxel_count()) throw DataError("marching_cubes: field size mismatch");
  if (active != nullptr && active->size() != spec.voxel_count()) {
    throw DataError("marching_cubes: mask size mismatch");
  }
  for (double v : field.values) {
    if (!std::isfinite(v)) throw DataError("marching_cubes: field has non-finite values");
  }
  IsoSurface out;
  std::unordered_map<std::size_t, std::uint32_t> vertex_of_edge;
  for (int k = 0; k + 1 < spec.dims[2]; ++k) {
    for (int j = 0; j + 1 < spec.dims[1]; ++j) {
      for (int i = 0; i + 1 < spec.dims[0]; ++i) {
        if (!cell_active(spec, active, i, j, k)) continue;
        double value[8];
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          value[c] = field(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
          if (value[c] < isovalue) cube |= 1 << c;
        }
        if (mc::kEdgeTable[cube] == 0) continue;
        std::uint32_t edge_vertex[12];
        for (int e = 0; e < 12; ++e) {
          if ((mc::kEdgeTable[cube] & (1 << e)) == 0) continue;
          const CellEdge ce = cell_edge(e);
          const Index3 lower{i + ce.offset[0], j + ce.offset[1], k + ce.offset[2]};
          const std::size_t key = spec.index(lower) * 3 + static_cast<std::size_t>(ce.axis);
          auto [it, inserted] = vertex_of_edge.try_emplace(key, 0);
          if (inserted) {
            Index3 upper = lower;
            ++upper[ce.axis];
            const double va = field[lower];
            const double vb = field[upper];
            const double t = va == vb ? 0.5 : (isovalue - va) / (vb - va);
            Vec3 p{static_cast<double>(lower[0]), static_cast<double>(lower[1]),
                   static_cast<double>(lower[2])};
            p[ce.axis] += t;
            it->second = static_cast<std::uint32_t>(out.mesh.vertices.size());
            out.mesh.vertices.push_back(spec.to_world(p));
            out.vertex_edges.push_back(key);
          }
          edge_vertex[e] = it->second;
        }
        const std::size_t cell = spec.index(i, j, k);
        for (int t = 0; mc::kTriTable[cube][t] != -1; t += 3) {
          out.mesh.faces.push_back({edge_vertex[mc::kTriTable[cube][t]],
                                    edge_vertex[mc::kTriTable[cube][t + 1]],
                                    edge_vertex[mc::kTriTable[cube][t + 2]]});
          out.face_cells.push_back(cell);
        }
      }
    }
  }
  out.empty = out.mesh.faces.empty();
  return out;
}

CrackReport check_cracks(const IsoSurface& surface, const GridSpec& spec,
                         const std::vector<std::uint8_t>* active) {
  struct Use {
    int count = 0;
    std::size_t cell = 0;
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, Use> edges;
  for (std::size_t f = 0; f < surface.mesh.faces.size(); ++f) {
    const Face& face = surface.mesh.faces[f];
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t a = face[static_cast<std::size_t>(e)];
      const std::uint32_t b = face[static_cast<std::size_t>((e + 1) % 3)];
      Use& use = edges[{std::min(a, b), std::max(a, b)}];
      ++use.count;
      use.cell = surface.face_cells[f];
    }
  }
  CrackReport report;
  for (const auto& [edge, use] : edges) {
    if (use.count > 2) ++report.overused_edges;
    if (use.count != 1) continue;
    ++report.boundary_edges;
    const Index3 cell = spec.coords(use.cell);
    const std::size_t ka = surface.vertex_edges[edge.first];
    const std::size_t kb = surface.vertex_edges[edge.second];
    const Index3 pa = spec.coords(ka / 3);
    const Index3 pb = spec.coords(kb / 3);
    const int axis_a = static_cast<int>(ka % 3);
    const int axis_b = static_cast<int>(kb % 3);
    bool on_open_face = false;
    for (int axis = 0; axis < 3 && !on_open_face; ++axis) {
      if (axis == axis_a || axis == axis_b) continue;
      for (int side = 0; side < 2; ++side) {
        if (pa[axis] != cell[axis] + side || pb[axis] != cell[axis] + side) continue;
        Index3 neighbour = cell;
        neighbour[axis] += side == 0 ? -1 : 1;
        if (!cell_active(spec, active, neighbour[0], neighbour[1], neighbour[2])) on_open_face = true;
      }
    }
    if (!on_open_face) ++report.interior_boundary_edges;
  }
  return report;
}

}  // namespace covseg
