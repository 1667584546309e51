#include "blfmm/mlfmm.hpp"

#include <algorithm>
#include <cmath>

namespace blfmm {

namespace {

using C = std::complex<double>;

// Per-dimension node values of a tensor grid (axis nodes are shared
// between dimensions).
std::vector<double> axis_nodes(const QuadratureGrid& g) {
  std::vector<double> out(g.m_per_dim);
  double dxi = g.dxi();
  for (int m = 0; m < g.m_per_dim; ++m) out[m] = -g.sigma + m * dxi;
  return out;
}

}  // namespace

void SparseInterp::apply(const C* x, C* y) const {
  for (int r = 0; r < rows; ++r) {
    C acc(0.0, 0.0);
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
      acc += vals[p] * x[col_idx[p]];
    y[r] = acc;
  }
}

void SparseInterp::apply_transpose(const C* x, C* y) const {
  for (int c = 0; c < cols; ++c) y[c] = C(0.0, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
      y[col_idx[p]] += vals[p] * x[r];
}

SparseInterp lagrange_matrix(const std::vector<double>& source_nodes,
                             const std::vector<double>& targets, int k) {
  int n = static_cast<int>(source_nodes.size());
  if (k < 1 || k > n) throw std::invalid_argument("stencil size out of range");
  for (int i = 1; i < n; ++i)
    if (!(source_nodes[i] > source_nodes[i - 1]))
      throw std::invalid_argument("source nodes must be strictly increasing");

  SparseInterp p;
  p.rows = static_cast<int>(targets.size());
  p.cols = n;
  p.row_ptr.assign(p.rows + 1, 0);
  p.col_idx.reserve(static_cast<std::size_t>(p.rows) * k);
  p.vals.reserve(static_cast<std::size_t>(p.rows) * k);

  for (int r = 0; r < p.rows; ++r) {
    double t = targets[r];
    // Window of the k nodes nearest t (nodes are sorted).
    auto it = std::lower_bound(source_nodes.begin(), source_nodes.end(), t);
    int lo = static_cast<int>(it - source_nodes.begin()) - k / 2;
    lo = std::clamp(lo, 0, n - k);
    while (lo > 0 &&
           t - source_nodes[lo - 1] < source_nodes[lo + k - 1] - t)
      --lo;
    while (lo + k < n &&
           source_nodes[lo + k] - t < t - source_nodes[lo])
      ++lo;
    for (int j = 0; j < k; ++j) {
      double w = 1.0;
      for (int l = 0; l < k; ++l) {
        if (l == j) continue;
        w *= (t - source_nodes[lo + l]) /
             (source_nodes[lo + j] - source_nodes[lo + l]);
      }
      p.col_idx.push_back(lo + j);
      p.vals.push_back(w);
    }
    p.row_ptr[r + 1] = static_cast<int>(p.col_idx.size());
  }
  return p;
}

double lagrange_phase_error(int k, double sigma, double a, int resolution) {
  if (k < 2) throw std::invalid_argument("need at least two nodes");
  std::vector<double> nodes(k);
  for (int j = 0; j < k; ++j)
    nodes[j] = -sigma + 2.0 * sigma * j / (k - 1);

  int nx = 81;
  double sup = 0.0;
  std::vector<double> w(k);
  for (int q = 0; q <= resolution; ++q) {
    double xi = -sigma + 2.0 * sigma * q / resolution;
    double t = 0.5 * xi;
    for (int j = 0; j < k; ++j) {
      double prod = 1.0;
      for (int l = 0; l < k; ++l) {
        if (l == j) continue;
        prod *= (t - nodes[l]) / (nodes[j] - nodes[l]);
      }
      w[j] = prod;
    }
    for (int p = 0; p < nx; ++p) {
      double x = -a + 2.0 * a * p / (nx - 1);
      C exact = std::polar(1.0, t * x);
      C approx(0.0, 0.0);
      for (int j = 0; j < k; ++j) approx += w[j] * std::polar(1.0, nodes[j] * x);
      sup = std::max(sup, std::abs(exact - approx));
    }
  }
  return sup;
}

LevelGrids make_level_grids(const RadialKernel& kernel, double sigma_leaf,
                            int m_leaf, int d, int leaf_level, GridMode mode,
                            int stencil_k) {
  if (leaf_level < 2) throw std::invalid_argument("leaf_level must be >= 2");
  LevelGrids g;
  g.mode = mode;
  g.d = d;
  g.leaf_level = leaf_level;
  g.stencil_k = std::min(stencil_k, m_leaf);
  g.kernel = kernel;
  g.grids.resize(leaf_level + 1);
  g.grids[leaf_level] = make_quadrature(sigma_leaf, m_leaf, d);
  for (int l = leaf_level - 1; l >= 2; --l)
    g.grids[l] = mode == GridMode::shared ? g.grids[l + 1]
                                          : rescale_grid(g.grids[l + 1], 2.0);
  g.factors.resize(leaf_level + 1);
  for (int l = 2; l <= leaf_level; ++l) {
    if (mode == GridMode::shared && l > 2)
      g.factors[l] = g.factors[2];
    else
      g.factors[l] = translation_coefficients(kernel, g.grids[l],
                                              TranslationMode::spectral);
  }
  if (mode == GridMode::scaled) {
    g.interp.resize(leaf_level + 1);
    for (int l = 3; l <= leaf_level; ++l)
      g.interp[l] = lagrange_matrix(axis_nodes(g.grids[l]),
                                    axis_nodes(g.grids[l - 1]), g.stencil_k);
  }
  return g;
}

namespace {

// Tensor application of the per-axis interpolation matrix: d=1 is a
// plain matvec, d=2 applies it along each index of the M x M array.
void interp_apply(const SparseInterp& p, int d, int m_src,
                  const std::vector<C>& x, std::vector<C>& out) {
  if (d == 1) {
    out.resize(p.rows);
    p.apply(x.data(), out.data());
    return;
  }
  int rows = p.rows;
  std::vector<C> tmp(static_cast<std::size_t>(rows) * m_src);
  // First axis: tmp[r, j] = sum_i P[r,i] x[i, j]
  std::vector<C> col(m_src), res(rows);
  for (int j = 0; j < m_src; ++j) {
    for (int i = 0; i < m_src; ++i) col[i] = x[static_cast<std::size_t>(i) * m_src + j];
    p.apply(col.data(), res.data());
    for (int r = 0; r < rows; ++r) tmp[static_cast<std::size_t>(r) * m_src + j] = res[r];
  }
  // Second axis: out[r, s] = sum_j P[s,j] tmp[r, j]
  out.assign(static_cast<std::size_t>(rows) * rows, C(0.0, 0.0));
  std::vector<C> row_out(rows);
  for (int r = 0; r < rows; ++r) {
    p.apply(&tmp[static_cast<std::size_t>(r) * m_src], row_out.data());
    for (int s = 0; s < rows; ++s)
      out[static_cast<std::size_t>(r) * rows + s] = row_out[s];
  }
}

void interp_apply_transpose(const SparseInterp& p, int d, int m_src,
                            const std::vector<C>& x, std::vector<C>& out) {
  if (d == 1) {
    out.resize(p.cols);
    p.apply_transpose(x.data(), out.data());
    return;
  }
  int rows = p.rows, cols = p.cols;
  (void)m_src;
  std::vector<C> tmp(static_cast<std::size_t>(cols) * rows);
  std::vector<C> col(rows), res(cols);
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < rows; ++i) col[i] = x[static_cast<std::size_t>(i) * rows + j];
    p.apply_transpose(col.data(), res.data());
    for (int r = 0; r < cols; ++r) tmp[static_cast<std::size_t>(r) * rows + j] = res[r];
  }
  out.assign(static_cast<std::size_t>(cols) * cols, C(0.0, 0.0));
  std::vector<C> row_out(cols);
  for (int r = 0; r < cols; ++r) {
    p.apply_transpose(&tmp[static_cast<std::size_t>(r) * rows], row_out.data());
    for (int s = 0; s < cols; ++s)
      out[static_cast<std::size_t>(r) * cols + s] = row_out[s];
  }
}

}  // namespace

LevelExpansions upsweep(const BoxTree& tree, const LevelGrids& grids,
                        const PointSet& ps,
                        const std::vector<double>& weights) {
  int leaf = tree.leaf_level;
  LevelExpansions exps(leaf + 1);
  for (int l = 2; l <= leaf; ++l) {
    int count = tree.box_count(l);
    exps[l].resize(count);
    int nodes = grids.grids[l].node_count();
    for (int b = 0; b < count; ++b) {
      exps[l][b].level = l;
      exps[l][b].box = b;
      exps[l][b].kind = Expansion::Kind::multipole;
      exps[l][b].coeffs.assign(nodes, C(0.0, 0.0));
    }
  }

  // P2M at the leaves.
  const QuadratureGrid& gleaf = grids.grids[leaf];
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < tree.box_count(leaf); ++b) {
    if (tree.leaf_points[b].empty()) continue;
    Pt xb = tree.center(leaf, b);
    auto& coeffs = exps[leaf][b].coeffs;
    for (int j : tree.leaf_points[b]) {
      Pt r{xb[0] - ps.pts[j][0], xb[1] - ps.pts[j][1]};
      for (int m = 0; m < gleaf.node_count(); ++m)
        coeffs[m] +=
            weights[j] * std::polar(1.0, dot(ps.d, gleaf.nodes[m], r));
    }
  }

  // M2M towards level 2: interpolate onto the parent grid, then shift.
  for (int l = leaf; l >= 3; --l) {
    const QuadratureGrid& gp = grids.grids[l - 1];
    int parents = tree.box_count(l - 1);
    std::vector<C> tmp;
#pragma omp parallel for schedule(dynamic) private(tmp)
    for (int p = 0; p < parents; ++p) {
      Pt xp = tree.center(l - 1, p);
      auto& out = exps[l - 1][p].coeffs;
      for (int c : tree.children(l - 1, p)) {
        const auto& vc = exps[l][c].coeffs;
        bool empty = true;
        for (const auto& z : vc)
          if (z != C(0.0, 0.0)) {
            empty = false;
            break;
          }
        if (empty) continue;
        Pt xc = tree.center(l, c);
        Pt r{xp[0] - xc[0], xp[1] - xc[1]};
        if (grids.mode == GridMode::shared) {
          for (int m = 0; m < gp.node_count(); ++m)
            out[m] += std::polar(1.0, dot(ps.d, gp.nodes[m], r)) * vc[m];
        } else {
          interp_apply(grids.interp[l], ps.d, grids.grids[l].m_per_dim, vc,
                       tmp);
          for (int m = 0; m < gp.node_count(); ++m)
            out[m] += std::polar(1.0, dot(ps.d, gp.nodes[m], r)) * tmp[m];
        }
      }
    }
  }
  return exps;
}

LevelExpansions couple(const BoxTree& tree, const LevelGrids& grids,
                       const LevelExpansions& multipoles) {
  int leaf = tree.leaf_level;
  LevelExpansions locals(leaf + 1);

  for (int l = 2; l <= leaf; ++l) {
    int count = tree.box_count(l);
    locals[l].resize(count);
    int nodes = grids.grids[l].node_count();
    for (int a = 0; a < count; ++a) {
      locals[l][a].level = l;
      locals[l][a].box = a;
      locals[l][a].kind = Expansion::Kind::local;
      locals[l][a].coeffs.assign(nodes, C(0.0, 0.0));
    }
    const QuadratureGrid& g = grids.grids[l];
    const std::vector<double>& cv = grids.factors[l].c_vals;
#pragma omp parallel for schedule(dynamic)
    for (int a = 0; a < count; ++a) {
      Pt xa = tree.center(l, a);
      auto& out = locals[l][a].coeffs;
      for (int b : tree.interaction[l][a]) {
        const auto& vb = multipoles[l][b].coeffs;
        Pt xb = tree.center(l, b);
        Pt r{xa[0] - xb[0], xa[1] - xb[1]};
        for (int m = 0; m < nodes; ++m)
          out[m] += cv[m] * std::polar(1.0, dot(g.d, g.nodes[m], r)) * vb[m];
      }
    }
  }
  return locals;
}

void downsweep(const BoxTree& tree, const LevelGrids& grids,
               const LevelExpansions& locals, const PointSet& ps,
               std::vector<double>& out, double* max_imag) {
  int leaf = tree.leaf_level;
  LevelExpansions acc = locals;  // accumulate L2L into a working copy

  for (int l = 2; l < leaf; ++l) {
    const QuadratureGrid& gc = grids.grids[l + 1];
    int parents = tree.box_count(l);
    double wratio =
        grids.grids[l].weights[0] / gc.weights[0];  // uniform weights
    std::vector<C> tmp;
#pragma omp parallel for schedule(dynamic) private(tmp)
    for (int p = 0; p < parents; ++p) {
      const auto& lp = acc[l][p].coeffs;
      bool empty = true;
      for (const auto& z : lp)
        if (z != C(0.0, 0.0)) {
          empty = false;
          break;
        }
      if (empty) continue;
      Pt xp = tree.center(l, p);
      for (int c : tree.children(l, p)) {
        Pt xc = tree.center(l + 1, c);
        Pt r{xc[0] - xp[0], xc[1] - xp[1]};
        auto& lc = acc[l + 1][c].coeffs;
        if (grids.mode == GridMode::shared) {
          for (int m = 0; m < gc.node_count(); ++m)
            lc[m] += std::polar(1.0, dot(ps.d, gc.nodes[m], r)) * lp[m];
        } else {
          interp_apply_transpose(grids.interp[l + 1], ps.d,
                                 grids.grids[l + 1].m_per_dim, lp, tmp);
          for (int m = 0; m < gc.node_count(); ++m)
            lc[m] += wratio * std::polar(1.0, dot(ps.d, gc.nodes[m], r)) *
                     tmp[m];
        }
      }
    }
  }

  const QuadratureGrid& g = grids.grids[leaf];
  double imag = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : imag)
  for (int a = 0; a < tree.box_count(leaf); ++a) {
    if (tree.leaf_points[a].empty()) continue;
    const auto& la = acc[leaf][a].coeffs;
    Pt xa = tree.center(leaf, a);
    for (int i : tree.leaf_points[a]) {
      Pt r{ps.pts[i][0] - xa[0], ps.pts[i][1] - xa[1]};
      C v(0.0, 0.0);
      for (int m = 0; m < g.node_count(); ++m)
        v += g.weights[m] * std::polar(1.0, dot(ps.d, g.nodes[m], r)) * la[m];
      out[i] += v.real();
      imag = std::max(imag, std::abs(v.imag()));
    }
  }
  if (max_imag) *max_imag = imag;
}

SumResult mlfmm_matvec(const SumRequest& req, const BoxTree& tree,
                       const LevelGrids& grids) {
  if (!req.ps) throw std::invalid_argument("request has no point set");
  const PointSet& ps = *req.ps;
  if (req.weights.size() != static_cast<std::size_t>(ps.size()))
    throw std::invalid_argument("weight count != point count");
  if (grids.d != ps.d || grids.leaf_level != tree.leaf_level)
    throw std::invalid_argument("grids incompatible with tree/points");
  int n = ps.size();
  int leaf = tree.leaf_level;

  SumResult res;
  res.values.assign(n, 0.0);

  LevelExpansions mult = upsweep(tree, grids, ps, req.weights);
  LevelExpansions loc = couple(tree, grids, mult);
  double imag = 0.0;
  downsweep(tree, grids, loc, ps, res.values, &imag);
  res.stats.max_imag_residual = imag;

  long long near = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : near)
  for (int a = 0; a < tree.box_count(leaf); ++a) {
    for (int i : tree.leaf_points[a]) {
      double v = 0.0;
      for (int b : tree.neighbors[leaf][a]) {
        for (int j : tree.leaf_points[b]) {
          v += req.weights[j] *
               eval_kernel(req.kernel, dist(ps.d, ps.pts[i], ps.pts[j]));
          ++near;
        }
      }
      res.values[i] += v;
    }
  }
  res.stats.near_pairs = near;

  long long far = 2LL * n * grids.grids[leaf].node_count();
  for (int l = 2; l <= leaf; ++l) {
    long long m = grids.grids[l].node_count();
    for (int a = 0; a < tree.box_count(l); ++a)
      far += static_cast<long long>(tree.interaction[l][a].size()) * m;
  }
  res.stats.far_work = far;
  return res;
}

}  // namespace blfmm
