#include "covseg/centerline.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <limits>
#include <queue>

#include "covseg/error.hpp"

namespace covseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(const Vec3& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.3f, %.3f, %.3f)", p.x, p.y, p.z);
  return buf;
}

/// Hop distances from `source` over the 26-connected node graph.
void bfs(const std::vector<std::vector<int>>& adjacency, int source, std::vector<int>& dist) {
  std::fill(dist.begin(), dist.end(), -1);
  std::deque<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adjacency[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
}

/// Farthest node from `source`; ties go to the lowest (lexicographic) node.
std::pair<int, int> farthest(const std::vector<std::vector<int>>& adjacency, int source,
                             std::vector<int>& dist) {
  bfs(adjacency, source, dist);
  int best = source;
  for (int v = 0; v < static_cast<int>(dist.size()); ++v) {
    if (dist[static_cast<std::size_t>(v)] > dist[static_cast<std::size_t>(best)]) best = v;
  }
  return {best, dist[static_cast<std::size_t>(best)]};
}

/// Smallest frozen neighbour time along each axis, then the first-order
/// upwind solution of sum((T - a_i)^2) = slowness^2.
double eikonal_update(const std::vector<double>& time, const std::vector<std::uint8_t>& frozen, const Index3& v,
                      const Index3& dims, std::size_t idx, const std::size_t stride[3], double slowness) {
  double a[3];
  int count = 0;
  for (int axis = 0; axis < 3; ++axis) {
    double best = kInf;
    if (v[axis] > 0 && frozen[idx - stride[axis]] != 0) best = time[idx - stride[axis]];
    if (v[axis] + 1 < dims[axis] && frozen[idx + stride[axis]] != 0) best = std::min(best, time[idx + stride[axis]]);
    if (best < kInf) a[count++] = best;
  }
  std::sort(a, a + count);
  double t = a[0] + slowness;
  if (count > 1 && t > a[1]) {
    const double diff = a[0] - a[1];
    t = 0.5 * (a[0] + a[1] + std::sqrt(std::max(0.0, 2.0 * slowness * slowness - diff * diff)));
    if (count > 2 && t > a[2]) {
      const double sum = a[0] + a[1] + a[2];
      const double sum_sq = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
      const double disc = sum * sum - 3.0 * (sum_sq - slowness * slowness);
      t = (sum + std::sqrt(std::max(0.0, disc))) / 3.0;
    }
  }
  return t;
}

Vec3 node_gradient(const ScalarField& time, int i, int j, int k) {
  const Index3& d = time.spec.dims;
  const int idx[3] = {i, j, k};
  Vec3 g;
  for (int axis = 0; axis < 3; ++axis) {
    Index3 lo{i, j, k}, hi{i, j, k};
    if (idx[axis] > 0) --lo[axis];
    if (idx[axis] < d[axis] - 1) ++hi[axis];
    const int span = hi[axis] - lo[axis];
    g[axis] = span == 0 ? 0.0 : (time[hi] - time[lo]) / span;
  }
  return g;
}

Vec3 interpolated_gradient(const ScalarField& time, const Vec3& p) {
  const Index3& d = time.spec.dims;
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double c = std::clamp(p[a], 0.0, static_cast<double>(d[a] - 1));
    base[a] = std::min(static_cast<int>(std::floor(c)), std::max(d[a] - 2, 0));
    frac[a] = c - base[a];
  }
  Vec3 g;
  for (int corner = 0; corner < 8; ++corner) {
    int idx[3];
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
      const int bit = (corner >> a) & 1;
      idx[a] = std::min(base[a] + bit, d[a] - 1);
      w *= bit ? frac[a] : 1.0 - frac[a];
    }
    if (w != 0.0) g += node_gradient(time, idx[0], idx[1], idx[2]) * w;
  }
  return g;
}

Vec3 as_vec(const Index3& v) {
  return {static_cast<double>(v[0]), static_cast<double>(v[1]), static_cast<double>(v[2])};
}

}  // namespace

EndpointPair estimate_endpoints(const VoxelGrid& h, double delta) {
  const GridSpec& spec = h.spec;
  const float threshold = static_cast<float>(1.0 - delta);
  std::vector<Index3> nodes;
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    if (h.values[i] > threshold) nodes.push_back(spec.coords(i));
  }
  if (nodes.size() < 2) {
    throw NoCenterlineSignal("estimate_endpoints: fewer than two voxels above 1 - delta");
  }
  std::sort(nodes.begin(), nodes.end());
  std::vector<int> node_of(spec.voxel_count(), -1);
  for (std::size_t n = 0; n < nodes.size(); ++n) node_of[spec.index(nodes[n])] = static_cast<int>(n);

  std::vector<std::vector<int>> adjacency(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const Index3 m{nodes[n][0] + dx, nodes[n][1] + dy, nodes[n][2] + dz};
          if (!spec.contains(m)) continue;
          const int other = node_of[spec.index(m)];
          if (other >= 0) adjacency[n].push_back(other);
        }
      }
    }
    std::sort(adjacency[n].begin(), adjacency[n].end());
  }

  // Largest component; the earliest (lexicographic) one wins ties.
  std::vector<int> dist(nodes.size());
  std::vector<int> component(nodes.size(), -1);
  int best_component = -1;
  std::size_t best_size = 0;
  int best_root = -1;
  for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
    if (component[static_cast<std::size_t>(n)] >= 0) continue;
    bfs(adjacency, n, dist);
    std::size_t size = 0;
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      if (dist[m] >= 0) {
        component[m] = n;
        ++size;
      }
    }
    if (size > best_size) {
      best_size = size;
      best_component = n;
      best_root = n;
    }
  }
  if (best_size < 2) {
    throw NoCenterlineSignal("estimate_endpoints: no connected pair of voxels above 1 - delta");
  }

  std::vector<int> members;
  std::vector<int> local(nodes.size(), -1);
  for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
    if (component[static_cast<std::size_t>(n)] == best_component) {
      local[static_cast<std::size_t>(n)] = static_cast<int>(members.size());
      members.push_back(n);
    }
  }
  std::vector<std::vector<int>> sub(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    for (int v : adjacency[static_cast<std::size_t>(members[m])]) {
      sub[m].push_back(local[static_cast<std::size_t>(v)]);
    }
  }
  dist.assign(members.size(), -1);

  int a = 0, b = 0, hops = -1;
  constexpr std::size_t kExactLimit = 20000;
  if (members.size() <= kExactLimit) {
    for (int u = 0; u < static_cast<int>(members.size()); ++u) {
      bfs(sub, u, dist);
      for (int v = u + 1; v < static_cast<int>(members.size()); ++v) {
        if (dist[static_cast<std::size_t>(v)] > hops) {
          hops = dist[static_cast<std::size_t>(v)];
          a = u;
          b = v;
        }
      }
    }
  } else {
    const int first = farthest(sub, local[static_cast<std::size_t>(best_root)], dist).first;
    const auto [second, length] = farthest(sub, first, dist);
    a = std::min(first, second);
    b = std::max(first, second);
    hops = length;
  }
  EndpointPair pair;
  pair.start = nodes[static_cast<std::size_t>(members[static_cast<std::size_t>(a)])];
  pair.end = nodes[static_cast<std::size_t>(members[static_cast<std::size_t>(b)])];
  pair.hops = static_cast<std::size_t>(hops);
  return pair;
}

TravelTimeField fast_march(const ScalarField& speed, const Index3& start) {
  const GridSpec& spec = speed.spec;
  if (!spec.contains(start)) {
    throw DataError("fast_march: start voxel (" + std::to_string(start[0]) + ", " +
                    std::to_string(start[1]) + ", " + std::to_string(start[2]) + ") out of bounds");
  }
  TravelTimeField field;
  field.start = start;
  field.time = ScalarField(spec, kInf);
  std::vector<double>& time = field.time.values;
  std::vector<std::uint8_t> frozen(spec.voxel_count(), 0);
  const Index3& dims = spec.dims;
  const std::size_t stride[3] = {1, static_cast<std::size_t>(dims[0]),
                                 static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1])};

  using Entry = std::pair<double, std::size_t>;
  std::vector<Entry> storage;
  storage.reserve(spec.voxel_count());
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap(std::greater<>{}, std::move(storage));
  // Point sources are the dominant error of a first-order scheme: seed a
  // small ball with straight-line travel times instead.
  const double start_slowness = 1.0 / std::clamp(speed[start], kMinSpeed, 1.0);
  const int r = static_cast<int>(std::ceil(kExactStartRadius));
  for (int dz = -r; dz <= r; ++dz) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const double d = std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
        const Index3 u{start[0] + dx, start[1] + dy, start[2] + dz};
        if (d > kExactStartRadius || !spec.contains(u)) continue;
        // Mean slowness along the segment (nearest-voxel samples).
        const int samples = std::max(1, static_cast<int>(std::ceil(2.0 * d)));
        double slowness = 0.5 * start_slowness;
        for (int q = 1; q <= samples; ++q) {
          const double w = static_cast<double>(q) / samples;
          const Index3 at{start[0] + static_cast<int>(std::lround(w * dx)), start[1] + static_cast<int>(std::lround(w * dy)),
                          start[2] + static_cast<int>(std::lround(w * dz))};
          slowness += (q == samples ? 0.5 : 1.0) / std::clamp(speed[at], kMinSpeed, 1.0);
        }
        const std::size_t ui = spec.index(u);
        time[ui] = d * slowness / samples;
        heap.emplace(time[ui], ui);
      }
    }
  }
  double last = 0.0;
  while (!heap.empty()) {
    const auto [t, idx] = heap.top();
    heap.pop();
    if (frozen[idx] != 0 || t > time[idx]) continue;
    if (t < last) throw NumericalError("fast_march: acceptance order is not monotone");
    last = t;
    frozen[idx] = 1;
    const Index3 v = spec.coords(idx);
    for (int axis = 0; axis < 3; ++axis) {
      for (int dir : {-1, 1}) {
        if (dir < 0 ? v[axis] == 0 : v[axis] + 1 == dims[axis]) continue;
        const std::size_t nidx = dir < 0 ? idx - stride[axis] : idx + stride[axis];
        if (frozen[nidx] != 0) continue;
        Index3 n = v;
        n[axis] += dir;
        const double f = std::clamp(speed.values[nidx], kMinSpeed, 1.0);
        const double candidate = eikonal_update(time, frozen, n, dims, nidx, stride, 1.0 / f);
        if (candidate < time[nidx]) {
          time[nidx] = candidate;
          heap.emplace(candidate, nidx);
        }
      }
    }
  }
  field.frozen = VoxelSet(dims);
  for (std::size_t i = 0; i < frozen.size(); ++i) {
    if (frozen[i] != 0) field.frozen.insert(spec.coords(i));
  }
  return field;
}

TravelTimeField fast_march(const VoxelGrid& speed, const Index3& start) {
  ScalarField s(speed.spec);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = speed.values[i];
  return fast_march(s, start);
}

Polyline backtrack(const TravelTimeField& field, const Index3& end, double step_voxels) {
  const ScalarField& time = field.time;
  const GridSpec& spec = time.spec;
  if (!spec.contains(end)) throw DataError("backtrack: end voxel out of bounds");
  if (!std::isfinite(time[end])) throw NumericalError("backtrack: travel time at end is not finite");
  if (!(step_voxels > 0.0)) throw DataError("backtrack: step must be positive");

  const Vec3 start = as_vec(field.start);
  const Vec3 upper = as_vec({spec.dims[0] - 1, spec.dims[1] - 1, spec.dims[2] - 1});
  const double diagonal = norm(upper);
  const auto max_steps = static_cast<std::size_t>(std::ceil(10.0 * diagonal / step_voxels));

  std::vector<Vec3> path{as_vec(end)};
  Vec3 p = path.back();
  double tp = time[end];
  bool reached = distance(p, start) <= 1.0;
  for (std::size_t step = 0; step < max_steps && !reached; ++step) {
    const Vec3 g = interpolated_gradient(time, p);
    const double gn = norm(g);
    bool moved = false;
    if (gn > 1e-12 && std::isfinite(gn)) {
      Vec3 q = p - g * (step_voxels / gn);
      for (int a = 0; a < 3; ++a) q[a] = std::clamp(q[a], 0.0, upper[a]);
      const double tq = trilinear(time, q);
      if (tq < tp) {
        p = q;
        tp = tq;
        moved = true;
      }
    }
    if (!moved) {
      const Index3 r = spec.nearest(spec.to_world(p));
      Index3 best{};
      double best_t = tp;
      for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const Index3 c{r[0] + dx, r[1] + dy, r[2] + dz};
            if (!spec.contains(c)) continue;
            if (time[c] < best_t) {
              best_t = time[c];
              best = c;
            }
          }
        }
      }
      if (!(best_t < tp)) {
        throw NumericalError("backtrack: descent stalled at voxel " + describe(p));
      }
      p = as_vec(best);
      tp = best_t;
    }
    path.push_back(p);
    reached = distance(p, start) <= 1.0;
  }
  if (!reached) {
    throw NumericalError("backtrack: no convergence to the start, last position " + describe(p));
  }
  if (path.size() == 1 || path.back() != start) path.push_back(start);
  std::reverse(path.begin(), path.end());
  Polyline line;
  line.points.reserve(path.size());
  for (const Vec3& v : path) line.points.push_back(spec.to_world(v));
  return line;
}

Polyline extract_centerline(const VoxelGrid& h, double delta, double spacing_mm) {
  const EndpointPair ends = estimate_endpoints(h, delta);
  const TravelTimeField field = fast_march(h, ends.start);
  return resample(backtrack(field, ends.end), spacing_mm);
}

}  // namespace covseg
