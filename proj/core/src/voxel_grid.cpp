#include "covseg/voxel_grid.hpp"

#include <limits>
#include <sstream>

#include "covseg/error.hpp"

namespace covseg {

void validate(const GridSpec& spec) {
  for (int a = 0; a < 3; ++a) {
    if (spec.dims[a] <= 0) throw DataError("grid dims must be positive");
  }
  if (!(spec.voxel_size > 0.0) || !std::isfinite(spec.voxel_size)) {
    throw DataError("grid voxel_size must be positive and finite");
  }
  if (!is_finite(spec.origin)) throw DataError("grid origin must be finite");
}

VoxelSet::VoxelSet(const Index3& dims) : dims_(dims) {
  mask_.assign(static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
                   static_cast<std::size_t>(dims[2]),
               0);
}

bool VoxelSet::contains(const Index3& v) const {
  for (int a = 0; a < 3; ++a) {
    if (v[a] < 0 || v[a] >= dims_[a]) return false;
  }
  return mask_[static_cast<std::size_t>(v[0]) +
               static_cast<std::size_t>(dims_[0]) *
                   (static_cast<std::size_t>(v[1]) +
                    static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(v[2]))] != 0;
}

bool VoxelSet::insert(const Index3& v) {
  for (int a = 0; a < 3; ++a) {
    if (v[a] < 0 || v[a] >= dims_[a]) throw DataError("voxel coordinate out of range");
  }
  auto& cell = mask_[static_cast<std::size_t>(v[0]) +
                     static_cast<std::size_t>(dims_[0]) *
                         (static_cast<std::size_t>(v[1]) +
                          static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(v[2]))];
  if (cell != 0) return false;
  cell = 1;
  ++count_;
  return true;
}

std::vector<Index3> VoxelSet::coordinates() const {
  std::vector<Index3> out;
  out.reserve(count_);
  std::size_t linear = 0;
  for (int k = 0; k < dims_[2]; ++k) {
    for (int j = 0; j < dims_[1]; ++j) {
      for (int i = 0; i < dims_[0]; ++i, ++linear) {
        if (mask_[linear] != 0) out.push_back({i, j, k});
      }
    }
  }
  return out;
}

VoxelSet voxelize(std::span<const Vec3> points, const GridSpec& spec) {
  validate(spec);
  VoxelSet set(spec.dims);
  for (std::size_t n = 0; n < points.size(); ++n) {
    const Vec3& p = points[n];
    const Index3 v = spec.nearest(p);
    if (!is_finite(p) || !spec.contains(v)) {
      std::ostringstream msg;
      msg << "voxelize: point " << n << " (" << p.x << ", " << p.y << ", " << p.z
          << ") lies outside the grid";
      throw DataError(msg.str());
    }
    set.insert(v);
  }
  return set;
}

namespace {

constexpr double kFar = 1e20;

// One-dimensional squared distance transform (lower envelope of parabolas)
// of the strided line starting at `line`, in place.
void transform_line(double* line, std::size_t n, std::size_t stride, std::vector<int>& v,
                    std::vector<double>& z, std::vector<double>& f) {
  for (std::size_t q = 0; q < n; ++q) f[q] = line[q * stride];
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < static_cast<int>(n); ++q) {
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < static_cast<int>(n); ++q) {
    while (z[k + 1] < q) ++k;
    const double d = q - v[k];
    line[q * stride] = d * d + f[v[k]];
  }
}

}  // namespace

ScalarField squared_edt(const GridSpec& spec, const VoxelSet& seeds) {
  validate(spec);
  if (seeds.empty()) throw DataError("edt: seed set is empty");
  if (seeds.dims() != spec.dims) throw DataError("edt: seed set dims differ from grid dims");

  ScalarField field(spec, kFar);
  const auto mask = seeds.mask();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0) field.values[i] = 0.0;
  }

  const auto nx = static_cast<std::size_t>(spec.dims[0]);
  const auto ny = static_cast<std::size_t>(spec.dims[1]);
  const auto nz = static_cast<std::size_t>(spec.dims[2]);
  const std::size_t longest = std::max({nx, ny, nz});
  std::vector<int> v(longest);
  std::vector<double> z(longest + 1);
  std::vector<double> f(longest);

  double* data = field.values.data();
  auto run = [&](double* base, std::size_t n, std::size_t stride) {
    transform_line(base, n, stride, v, z, f);
  };

  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < ny; ++j) run(data + nx * (j + ny * k), nx, 1);
  }
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t i = 0; i < nx; ++i) run(data + i + nx * ny * k, ny, nx);
  }
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) run(data + i + nx * j, nz, nx * ny);
  }
  return field;
}

ScalarField edt(const GridSpec& spec, const VoxelSet& seeds) {
  ScalarField field = squared_edt(spec, seeds);
  for (double& value : field.values) value = std::sqrt(value);
  return field;
}

}  // namespace covseg
