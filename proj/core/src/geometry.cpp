#include "blfmm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

namespace blfmm {

namespace {

// Grid bucket key for neighbor scans.
struct CellKey {
  long long i, j;
  bool operator<(const CellKey& o) const {
    return i != o.i ? i < o.i : j < o.j;
  }
};

double min_pair_distance_bucketed(const PointSet& ps, double cell) {
  std::map<CellKey, std::vector<int>> buckets;
  for (int i = 0; i < ps.size(); ++i) {
    CellKey key{static_cast<long long>(std::floor(ps.pts[i][0] / cell)),
                ps.d == 2
                    ? static_cast<long long>(std::floor(ps.pts[i][1] / cell))
                    : 0};
    buckets[key].push_back(i);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [key, members] : buckets) {
    for (long long di = -1; di <= 1; ++di) {
      for (long long dj = (ps.d == 2 ? -1 : 0); dj <= (ps.d == 2 ? 1 : 0);
           ++dj) {
        auto it = buckets.find(CellKey{key.i + di, key.j + dj});
        if (it == buckets.end()) continue;
        for (int a : members) {
          for (int b : it->second) {
            if (b <= a) continue;
            best = std::min(best, dist(ps.d, ps.pts[a], ps.pts[b]));
          }
        }
      }
    }
  }
  return best;
}

}  // namespace

double mesh_norm(const PointSet& ps, int probe_resolution) {
  if (ps.size() == 0) throw std::invalid_argument("empty point set");
  if (probe_resolution < 64)
    throw std::invalid_argument("probe_resolution must be >= 64");

  // Sorted-coordinate lookup for d=1; 2D scans all points per probe with
  // an early-out radius (fine at diagnostic sizes).
  if (ps.d == 1) {
    std::vector<double> xs(ps.size());
    for (int i = 0; i < ps.size(); ++i) xs[i] = ps.pts[i][0];
    std::sort(xs.begin(), xs.end());
    double h = 0.0;
    for (int p = 0; p <= probe_resolution; ++p) {
      double x = ps.domain.lo[0] +
                 ps.domain.side(0) * p / probe_resolution;
      auto it = std::lower_bound(xs.begin(), xs.end(), x);
      double best = std::numeric_limits<double>::infinity();
      if (it != xs.end()) best = *it - x;
      if (it != xs.begin()) best = std::min(best, x - *(it - 1));
      h = std::max(h, best);
    }
    return h;
  }

  double h = 0.0;
  for (int p1 = 0; p1 <= probe_resolution; ++p1) {
    for (int p2 = 0; p2 <= probe_resolution; ++p2) {
      Pt x{ps.domain.lo[0] + ps.domain.side(0) * p1 / probe_resolution,
           ps.domain.lo[1] + ps.domain.side(1) * p2 / probe_resolution};
      double best = std::numeric_limits<double>::infinity();
      for (const auto& pt : ps.pts) best = std::min(best, dist(2, x, pt));
      h = std::max(h, best);
    }
  }
  return h;
}

double separation_distance(const PointSet& ps) {
  int n = ps.size();
  if (n < 2) throw std::invalid_argument("need at least two points");

  double best = std::numeric_limits<double>::infinity();
  if (n <= 4096) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        best = std::min(best, dist(ps.d, ps.pts[i], ps.pts[j]));
  } else {
    // First pass with the expected quasi-uniform spacing; any pair closer
    // than the cell size is caught by an adjacent-cell scan, so if the
    // first pass already returned something below its cell size it is the
    // true minimum, otherwise rerun with the found value as cell size.
    double extent = std::max(ps.domain.side(0),
                             ps.d == 2 ? ps.domain.side(1) : 0.0);
    double cell = 2.0 * extent / std::pow(n, 1.0 / ps.d);
    best = min_pair_distance_bucketed(ps, cell);
    if (best > cell)
      best = min_pair_distance_bucketed(ps, best * 1.0000001);
  }
  if (best == 0.0) throw std::invalid_argument("duplicate points");
  return 0.5 * best;
}

PointSet generate_quasiuniform(int n, int d, const BoundingBox& domain,
                               std::uint64_t seed, double jitter) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (d != 1 && d != 2) throw std::invalid_argument("d must be 1 or 2");
  if (jitter < 0.0 || jitter >= 1.0)
    throw std::invalid_argument("jitter must be in [0,1)");

  PointSet ps;
  ps.d = d;
  ps.domain = domain;
  ps.pts.reserve(n);
  if (d == 1) {
    double spacing = domain.side(0) / n;
    for (int i = 0; i < n; ++i) {
      double u = 2.0 * uniform01(seed, i) - 1.0;
      double x = domain.lo[0] + (i + 0.5 + 0.5 * jitter * u) * spacing;
      ps.pts.push_back(Pt{x, 0.0});
    }
  } else {
    int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    double sx = domain.side(0) / k, sy = domain.side(1) / k;
    for (int idx = 0; idx < n; ++idx) {
      int i = idx / k, j = idx % k;
      double u = 2.0 * uniform01(seed, 2 * idx) - 1.0;
      double v = 2.0 * uniform01(seed, 2 * idx + 1) - 1.0;
      ps.pts.push_back(Pt{domain.lo[0] + (i + 0.5 + 0.5 * jitter * u) * sx,
                          domain.lo[1] + (j + 0.5 + 0.5 * jitter * v) * sy});
    }
  }
  return ps;
}

void write_points_csv(const std::string& path, const PointSet& ps) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  char buf[80];
  for (const auto& p : ps.pts) {
    if (ps.d == 1) {
      std::snprintf(buf, sizeof buf, "%.17g\n", p[0]);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p[0], p[1]);
    }
    out << buf;
  }
}

PointSet read_points_csv(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  PointSet ps;
  ps.d = d;
  std::string line;
  Pt lo{std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity()};
  Pt hi{-std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity()};
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    Pt p{0.0, 0.0};
    if (d == 1) {
      p[0] = std::stod(line);
    } else {
      auto comma = line.find(',');
      if (comma == std::string::npos)
        throw std::runtime_error("expected x,y in " + path);
      p[0] = std::stod(line.substr(0, comma));
      p[1] = std::stod(line.substr(comma + 1));
    }
    for (int k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
    ps.pts.push_back(p);
  }
  // Tight bounds padded a hair so every point is strictly binnable.
  for (int k = 0; k < d; ++k) {
    double pad = 1e-9 * std::max(1.0, hi[k] - lo[k]);
    ps.domain.lo[k] = lo[k] - pad;
    ps.domain.hi[k] = hi[k] + pad;
  }
  if (d == 1) {
    ps.domain.lo[1] = 0.0;
    ps.domain.hi[1] = 1.0;
  }
  return ps;
}

Pt BoxTree::center(int level, int box) const {
  int n = boxes_per_dim(level);
  Pt c{0.0, 0.0};
  if (d == 1) {
    c[0] = domain.lo[0] + (box + 0.5) * side(level, 0);
  } else {
    int i = box / n, j = box % n;
    c[0] = domain.lo[0] + (i + 0.5) * side(level, 0);
    c[1] = domain.lo[1] + (j + 0.5) * side(level, 1);
  }
  return c;
}

namespace {

inline void box_indices(int d, int level, int box, int& i, int& j) {
  int n = 1 << level;
  if (d == 1) {
    i = box;
    j = 0;
  } else {
    i = box / n;
    j = box % n;
  }
}

inline int box_id(int d, int level, int i, int j) {
  return d == 1 ? i : i * (1 << level) + j;
}

}  // namespace

int BoxTree::parent(int level, int box) const {
  int i, j;
  box_indices(d, level, box, i, j);
  return box_id(d, level - 1, i / 2, j / 2);
}

std::vector<int> BoxTree::children(int level, int box) const {
  std::vector<int> out;
  if (level >= leaf_level) return out;
  int i, j;
  box_indices(d, level, box, i, j);
  if (d == 1) {
    out = {box_id(1, level + 1, 2 * i, 0), box_id(1, level + 1, 2 * i + 1, 0)};
  } else {
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        out.push_back(box_id(2, level + 1, 2 * i + di, 2 * j + dj));
  }
  return out;
}

int BoxTree::leaf_of(const Pt& x) const {
  int n = boxes_per_dim(leaf_level);
  int i = std::clamp(
      static_cast<int>((x[0] - domain.lo[0]) / side(leaf_level, 0)), 0, n - 1);
  if (d == 1) return i;
  int j = std::clamp(
      static_cast<int>((x[1] - domain.lo[1]) / side(leaf_level, 1)), 0, n - 1);
  return box_id(2, leaf_level, i, j);
}

BoxTree build_tree(const PointSet& ps, int leaf_level) {
  if (leaf_level < 2) throw std::invalid_argument("leaf_level must be >= 2");
  if (ps.d * leaf_level > 24)
    throw std::invalid_argument("box count cap exceeded");

  BoxTree t;
  t.d = ps.d;
  t.leaf_level = leaf_level;
  t.domain = ps.domain;
  t.neighbors.resize(leaf_level + 1);
  t.interaction.resize(leaf_level + 1);

  for (int l = 0; l <= leaf_level; ++l) {
    int n = t.boxes_per_dim(l);
    int count = t.box_count(l);
    t.neighbors[l].resize(count);
    t.interaction[l].resize(count);
    for (int b = 0; b < count; ++b) {
      int i, j;
      box_indices(t.d, l, b, i, j);
      // 3^d block, clipped at the walls.
      for (int di = -1; di <= 1; ++di) {
        for (int dj = (t.d == 2 ? -1 : 0); dj <= (t.d == 2 ? 1 : 0); ++dj) {
          int ni = i + di, nj = j + dj;
          if (ni < 0 || ni >= n || (t.d == 2 && (nj < 0 || nj >= n)))
            continue;
          t.neighbors[l][b].push_back(box_id(t.d, l, ni, nj));
        }
      }
      std::sort(t.neighbors[l][b].begin(), t.neighbors[l][b].end());
      if (l < 2) continue;
      // Children of the parent's neighbors that are not own neighbors.
      int pi = i / 2, pj = j / 2;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = (t.d == 2 ? -1 : 0); dj <= (t.d == 2 ? 1 : 0); ++dj) {
          int qi = pi + di, qj = pj + dj;
          int np = n / 2;
          if (qi < 0 || qi >= np || (t.d == 2 && (qj < 0 || qj >= np)))
            continue;
          for (int ci = 0; ci < 2; ++ci) {
            for (int cj = 0; cj < (t.d == 2 ? 2 : 1); ++cj) {
              int ki = 2 * qi + ci, kj = 2 * qj + cj;
              if (std::abs(ki - i) <= 1 && (t.d == 1 || std::abs(kj - j) <= 1))
                continue;  // own neighbor
              t.interaction[l][b].push_back(box_id(t.d, l, ki, kj));
            }
          }
        }
      }
      std::sort(t.interaction[l][b].begin(), t.interaction[l][b].end());
    }
  }

  t.leaf_points.resize(t.box_count(leaf_level));
  for (int p = 0; p < ps.size(); ++p)
    t.leaf_points[t.leaf_of(ps.pts[p])].push_back(p);
  return t;
}

}  // namespace blfmm
