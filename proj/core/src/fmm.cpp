#include "blfmm/fmm.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <limits>

#include "blfmm/mlfmm.hpp"

namespace blfmm {

namespace {

double domain_diameter(const PointSet& ps) {
  double dx = ps.domain.side(0);
  if (ps.d == 1) return dx;
  return std::hypot(dx, ps.domain.side(1));
}

void check_request(const SumRequest& req) {
  if (!req.ps) throw std::invalid_argument("request has no point set");
  if (static_cast<int>(req.weights.size()) != req.ps->size())
    throw std::invalid_argument("weights length != point count");
  if (!(req.sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (req.m_per_dim < 2) throw std::invalid_argument("m_per_dim must be >= 2");
}

}  // namespace

SumResult direct_matvec(const RadialKernel& k, const PointSet& ps,
                        const std::vector<double>& weights,
                        bool use_bandlimited, double sigma, int refinement) {
  int n = ps.size();
  if (static_cast<int>(weights.size()) != n)
    throw std::invalid_argument("weights length != point count");
  SumResult res;
  res.values.assign(n, 0.0);

  if (!use_bandlimited) {
    if (ps.d == 1) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        double xi = ps.pts[i][0];
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          acc += weights[j] * eval_kernel(k, xi - ps.pts[j][0]);
        res.values[i] = acc;
      }
    } else {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          acc += weights[j] * eval_kernel(k, dist(2, ps.pts[i], ps.pts[j]));
        res.values[i] = acc;
      }
    }
  } else {
    if (ps.d != 1)
      throw std::domain_error(
          "band-limited direct oracle is 1d (the d=2 band kernel is not "
          "radial)");
    const RadialTable& table =
        bandlimited_radial_table(k, sigma, domain_diameter(ps), refinement);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double xi = ps.pts[i][0];
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += weights[j] * table(xi - ps.pts[j][0]);
      res.values[i] = acc;
    }
  }
  res.stats.near_pairs = static_cast<long long>(n) * n;
  return res;
}

SumResult direct_matvec_hybrid(const RadialKernel& k, const PointSet& ps,
                               const BoxTree& tree,
                               const std::vector<double>& weights,
                               double sigma, int refinement) {
  if (ps.d != 1)
    throw std::domain_error("hybrid direct oracle is 1d only");
  int n = ps.size();
  const RadialTable& table =
      bandlimited_radial_table(k, sigma, domain_diameter(ps), refinement);

  // Membership mask per leaf box: true when source j is a near-field
  // point of the target's box.
  int leaves = tree.box_count(tree.leaf_level);
  std::vector<char> near_mask(static_cast<std::size_t>(leaves) * n, 0);
  for (int a = 0; a < leaves; ++a) {
    for (int b : tree.neighbors[tree.leaf_level][a])
      for (int j : tree.leaf_points[b])
        near_mask[static_cast<std::size_t>(a) * n + j] = 1;
  }

  SumResult res;
  res.values.assign(n, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    int a = tree.leaf_of(ps.pts[i]);
    const char* mask = &near_mask[static_cast<std::size_t>(a) * n];
    double xi = ps.pts[i][0];
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      double r = xi - ps.pts[j][0];
      acc += weights[j] * (mask[j] ? eval_kernel(k, r) : table(r));
    }
    res.values[i] = acc;
  }
  res.stats.near_pairs = static_cast<long long>(n) * n;
  return res;
}

int choose_truncation(long long n) {
  if (n < 4) throw std::invalid_argument("n must be >= 4");
  auto m = static_cast<long long>(
      std::ceil(std::sqrt(static_cast<double>(n))));
  if (m % 2 != 0) ++m;
  return static_cast<int>(m);
}

SumResult fmm_matvec_single(const SumRequest& req, const BoxTree& tree) {
  check_request(req);
  const PointSet& ps = *req.ps;
  int n = ps.size();
  int level = tree.leaf_level;
  int boxes = tree.box_count(level);

  QuadratureGrid grid = make_quadrature(req.sigma, req.m_per_dim, ps.d);
  LowRankFactors factors =
      translation_coefficients(req.kernel, grid, TranslationMode::spectral);
  int nodes = grid.node_count();

  SumResult res;
  res.values.assign(n, 0.0);
  using C = std::complex<double>;

  // P2M: V_b(xi_m) = sum_j w_j e^{i xi_m (x_b - x_j)}
  std::vector<std::vector<C>> mult(boxes);
  for (int b = 0; b < boxes; ++b) {
    if (tree.leaf_points[b].empty()) continue;
    mult[b].assign(nodes, C(0.0, 0.0));
    Pt xb = tree.center(level, b);
    for (int j : tree.leaf_points[b]) {
      Pt r{xb[0] - ps.pts[j][0], xb[1] - ps.pts[j][1]};
      for (int m = 0; m < nodes; ++m)
        mult[b][m] += req.weights[j] *
                      std::polar(1.0, dot(ps.d, grid.nodes[m], r));
    }
  }
  res.stats.far_work += static_cast<long long>(n) * nodes;

  // M2L across every non-neighbor box pair at the operative level.
  std::vector<char> is_neighbor(static_cast<std::size_t>(boxes) * boxes, 0);
  for (int a = 0; a < boxes; ++a)
    for (int b : tree.neighbors[level][a])
      is_neighbor[static_cast<std::size_t>(a) * boxes + b] = 1;

  std::vector<std::vector<C>> local(boxes);
  long long far_pairs = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : far_pairs)
  for (int a = 0; a < boxes; ++a) {
    if (tree.leaf_points[a].empty()) continue;
    local[a].assign(nodes, C(0.0, 0.0));
    Pt xa = tree.center(level, a);
    for (int b = 0; b < boxes; ++b) {
      if (is_neighbor[static_cast<std::size_t>(a) * boxes + b]) continue;
      if (mult[b].empty()) continue;
      Pt xb = tree.center(level, b);
      Pt r{xa[0] - xb[0], xa[1] - xb[1]};
      for (int m = 0; m < nodes; ++m)
        local[a][m] += factors.c_vals[m] *
                       std::polar(1.0, dot(ps.d, grid.nodes[m], r)) *
                       mult[b][m];
      ++far_pairs;
    }
  }
  res.stats.far_work += far_pairs * nodes;

  // L2P + near field, per target box.
  double max_imag = 0.0;
  long long near_pairs = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : near_pairs) \
    reduction(max : max_imag)
  for (int a = 0; a < boxes; ++a) {
    if (tree.leaf_points[a].empty()) continue;
    Pt xa = tree.center(level, a);
    for (int i : tree.leaf_points[a]) {
      C acc(0.0, 0.0);
      if (!local[a].empty()) {
        Pt r{ps.pts[i][0] - xa[0], ps.pts[i][1] - xa[1]};
        for (int m = 0; m < nodes; ++m)
          acc += grid.weights[m] *
                 std::polar(1.0, dot(ps.d, grid.nodes[m], r)) * local[a][m];
      }
      double v = acc.real();
      max_imag = std::max(max_imag, std::abs(acc.imag()));
      for (int b : tree.neighbors[level][a]) {
        for (int j : tree.leaf_points[b]) {
          v += req.weights[j] *
               eval_kernel(req.kernel, dist(ps.d, ps.pts[i], ps.pts[j]));
          ++near_pairs;
        }
      }
      res.values[i] = v;
    }
  }
  res.stats.far_work += static_cast<long long>(n) * nodes;
  res.stats.near_pairs = near_pairs;
  res.stats.max_imag_residual = max_imag;
  return res;
}

ComplexityTable complexity_probe(const RadialKernel& kernel,
                                 const std::vector<long long>& sizes,
                                 int reps, MatvecMode mode, double sigma,
                                 std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      throw std::invalid_argument("sizes must be ascending");

  ComplexityTable table;
  table.mode = mode;
  for (long long n : sizes) {
    PointSet ps = generate_quasiuniform(static_cast<int>(n), 1, BoundingBox{},
                                        seed + n, 0.35);
    std::vector<double> w(n);
    for (long long j = 0; j < n; ++j)
      w[j] = 2.0 * uniform01(seed ^ 0x77, j) - 1.0;

    ComplexityRow row;
    row.n = n;
    row.seconds = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < reps; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      SumResult r;
      switch (mode) {
        case MatvecMode::direct:
          r = direct_matvec(kernel, ps, w, false, sigma);
          break;
        case MatvecMode::single_level: {
          int level = std::max(
              2, static_cast<int>(std::lround(0.5 * std::log2(
                                      static_cast<double>(n)))));
          BoxTree tree = build_tree(ps, level);
          SumRequest req{kernel, sigma, &ps, w, choose_truncation(n)};
          r = fmm_matvec_single(req, tree);
          break;
        }
        case MatvecMode::multilevel: {
          int level = std::max(
              3, static_cast<int>(std::lround(
                     std::log2(static_cast<double>(n) / 32.0))));
          BoxTree tree = build_tree(ps, level);
          SumRequest req{kernel, sigma, &ps, w, 32};
          // Grid and tree construction count toward the multilevel cost.
          LevelGrids grids = make_level_grids(kernel, sigma, 32, 1, level,
                                              GridMode::shared, 10);
          r = mlfmm_matvec(req, tree, grids);
          break;
        }
      }
      auto t1 = std::chrono::steady_clock::now();
      double secs = std::chrono::duration<double>(t1 - t0).count();
      if (secs < row.seconds) {
        row.seconds = secs;
        row.near_pairs = r.stats.near_pairs;
        row.far_work = r.stats.far_work;
      }
    }
    table.rows.push_back(row);
  }

  // Least-squares slope of log t vs log n.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = static_cast<int>(table.rows.size());
  for (const auto& row : table.rows) {
    double x = std::log(static_cast<double>(row.n));
    double y = std::log(std::max(row.seconds, 1e-9));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  if (m >= 2) table.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return table;
}

}  // namespace blfmm
