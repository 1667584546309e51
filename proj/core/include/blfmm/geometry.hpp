#pragma once

#include <cstdint>
#include <vector>

#include "blfmm/common.hpp"

namespace blfmm {

struct BoundingBox {
  Pt lo{0.0, 0.0};
  Pt hi{1.0, 1.0};
  double side(int dim) const { return hi[dim] - lo[dim]; }
};

struct PointSet {
  int d = 1;
  BoundingBox domain;
  std::vector<Pt> pts;

  int size() const { return static_cast<int>(pts.size()); }
};

// Fill distance sup_x min_j |x - x_j| approximated on an inclusive probe
// lattice with probe_resolution cells per dimension. The returned value
// h~ satisfies h~ <= h <= h~ + (probe cell diagonal).
double mesh_norm(const PointSet& ps, int probe_resolution);

// q_X = (1/2) min_{j != k} |x_j - x_k|. All pairs for N <= 4096, grid
// buckets beyond. Throws on duplicate points.
double separation_distance(const PointSet& ps);

// Jittered lattice: cell-centered lattice points displaced by
// +-jitter*(spacing/2), deterministic in seed. For d=2, n points are the
// first n cells (row-major) of the ceil(sqrt(n))^2 lattice.
PointSet generate_quasiuniform(int n, int d, const BoundingBox& domain,
                               std::uint64_t seed, double jitter);

// CSV round-trip, one point per line `x[,y]`, 17 significant digits.
// Lines starting with '#' are skipped on read.
void write_points_csv(const std::string& path, const PointSet& ps);
PointSet read_points_csv(const std::string& path, int d);

// Uniform 2^d-ary subdivision of the domain. Box b at level l has
// 2^l boxes per dimension; neighbors are the 3^d surrounding block
// including the box itself, the interaction list holds the children of
// the parent's neighbors that are not the box's own neighbors, so every
// member is at least two box widths away center-to-center.
struct BoxTree {
  int d = 1;
  int leaf_level = 2;
  BoundingBox domain;

  // Per level l in [0, leaf_level]: 2^{d*l} boxes, id row-major over the
  // per-dimension indices.
  std::vector<std::vector<std::vector<int>>> neighbors;    // [level][box]
  std::vector<std::vector<std::vector<int>>> interaction;  // [level][box]
  std::vector<std::vector<int>> leaf_points;               // [leaf box]

  int boxes_per_dim(int level) const { return 1 << level; }
  int box_count(int level) const { return 1 << (d * level); }
  double side(int level, int dim) const {
    return domain.side(dim) / boxes_per_dim(level);
  }
  Pt center(int level, int box) const;
  int parent(int level, int box) const;
  std::vector<int> children(int level, int box) const;
  int leaf_of(const Pt& x) const;
};

// leaf_level >= 2; throws if 2^{d*leaf_level} exceeds the box cap.
BoxTree build_tree(const PointSet& ps, int leaf_level);

}  // namespace blfmm
