#include "blfmm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace blfmm {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Second derivative of the band-limited kernel. The band integral
//   Phi_sigma''(x) = -(1/pi) int_0^sigma xi^2 Phihat(xi) cos(xi x) dxi
// converges absolutely even for MQ (xi^2 cancels the xi^{-2} pole), so a
// single adaptive rule covers every kernel with a closed-form transform.
double band_dxx_1d(const RadialKernel& k, double sigma, double x) {
  if (k.type == KernelType::WendlandC2 || k.type == KernelType::Wendland31)
    throw std::domain_error(
        "band-limited second derivative needs a closed-form transform");
  if (k.type == KernelType::TPS)
    throw std::domain_error(
        "xi^2 * spectrum is not integrable at 0 for thin-plate splines");
  auto f = [&](double xi) {
    return xi * xi * eval_fourier(k, xi, 1).value * std::cos(xi * x);
  };
  double err = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, sigma, 12, 1e-11, &err);
  return -v / kPi;
}

struct KrylovResult {
  std::vector<double> x;
  SolveStats stats;
};

using Matvec = std::function<std::vector<double>(const std::vector<double>&)>;

KrylovResult run_cg(const Matvec& apply, const std::vector<double>& b,
                    double tol, int max_iter) {
  int n = static_cast<int>(b.size());
  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  KrylovResult out;
  out.stats.method = "cg";
  out.x.assign(n, 0.0);
  if (bnorm == 0.0) {
    out.stats.converged = true;
    return out;
  }

  std::vector<double> r = b, p = b, ap;
  double rr = 0.0;
  for (double v : r) rr += v * v;
  double best = std::sqrt(rr) / bnorm;
  for (int it = 0; it < max_iter; ++it) {
    ap = apply(p);
    ++out.stats.matvecs;
    double pap = 0.0;
    for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (pap <= 0.0) break;  // matrix not PD to working precision
    double alpha = rr / pap;
    for (int i = 0; i < n; ++i) {
      out.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    double rr_new = 0.0;
    for (double v : r) rr_new += v * v;
    out.stats.iterations = it + 1;
    double rel = std::sqrt(rr_new) / bnorm;
    best = std::min(best, rel);
    if (rel <= tol) {
      out.stats.residual = rel;
      out.stats.converged = true;
      return out;
    }
    double beta = rr_new / rr;
    rr = rr_new;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  out.stats.residual = best;
  throw accuracy_error("cg did not reach tolerance", best);
}

KrylovResult run_gmres(const Matvec& apply, const std::vector<double>& b,
                       double tol, int max_iter) {
  int n = static_cast<int>(b.size());
  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  KrylovResult out;
  out.stats.method = "gmres";
  out.x.assign(n, 0.0);
  if (bnorm == 0.0) {
    out.stats.converged = true;
    return out;
  }

  int restart = std::min(max_iter, 300);
  double best = std::numeric_limits<double>::infinity();
  int total_it = 0;

  while (total_it < max_iter) {
    // Residual of the current iterate starts each cycle.
    std::vector<double> r;
    if (total_it == 0) {
      r = b;
    } else {
      r = apply(out.x);
      ++out.stats.matvecs;
      for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    }
    double beta = 0.0;
    for (double v : r) beta += v * v;
    beta = std::sqrt(beta);
    if (beta / bnorm <= tol) {
      out.stats.residual = beta / bnorm;
      out.stats.converged = true;
      return out;
    }

    int m = std::min(restart, max_iter - total_it);
    std::vector<std::vector<double>> v(1);
    v[0].resize(n);
    for (int i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    // Hessenberg columns, Givens cosines/sines, rotated rhs g.
    std::vector<std::vector<double>> h;
    std::vector<double> cs, sn, g;
    g.push_back(beta);
    int k = 0;
    for (; k < m; ++k) {
      std::vector<double> w = apply(v[k]);
      ++out.stats.matvecs;
      h.emplace_back(k + 2, 0.0);
      for (int j = 0; j <= k; ++j) {
        double dotp = 0.0;
        for (int i = 0; i < n; ++i) dotp += w[i] * v[j][i];
        h[k][j] = dotp;
        for (int i = 0; i < n; ++i) w[i] -= dotp * v[j][i];
      }
      double wn = 0.0;
      for (double val : w) wn += val * val;
      wn = std::sqrt(wn);
      h[k][k + 1] = wn;
      bool breakdown = wn < 1e-14 * beta;
      if (!breakdown) {
        v.emplace_back(n);
        for (int i = 0; i < n; ++i) v[k + 1][i] = w[i] / wn;
      }
      for (int j = 0; j < k; ++j) {
        double t = cs[j] * h[k][j] + sn[j] * h[k][j + 1];
        h[k][j + 1] = -sn[j] * h[k][j] + cs[j] * h[k][j + 1];
        h[k][j] = t;
      }
      double denom = std::hypot(h[k][k], h[k][k + 1]);
      cs.push_back(h[k][k] / denom);
      sn.push_back(h[k][k + 1] / denom);
      h[k][k] = denom;
      h[k][k + 1] = 0.0;
      g.push_back(-sn[k] * g[k]);
      g[k] = cs[k] * g[k];
      ++total_it;
      out.stats.iterations = total_it;
      double rel = std::abs(g[k + 1]) / bnorm;
      best = std::min(best, rel);
      if (rel <= tol || breakdown) {
        ++k;
        break;
      }
    }
    // Back substitution for y, then x += V y.
    std::vector<double> y(k, 0.0);
    for (int j = k - 1; j >= 0; --j) {
      double s = g[j];
      for (int l = j + 1; l < k; ++l) s -= h[l][j] * y[l];
      y[j] = s / h[j][j];
    }
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < n; ++i) out.x[i] += y[j] * v[j][i];

    std::vector<double> rr = apply(out.x);
    ++out.stats.matvecs;
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = b[i] - rr[i];
      res += d * d;
    }
    res = std::sqrt(res) / bnorm;
    best = std::min(best, res);
    if (res <= tol) {
      out.stats.residual = res;
      out.stats.converged = true;
      return out;
    }
  }
  out.stats.residual = best;
  throw accuracy_error("gmres did not reach tolerance", best);
}

}  // namespace

Eigen::MatrixXd assemble_dense(const RadialKernel& k, const PointSet& ps,
                               bool band_limited, double sigma,
                               int refinement) {
  int n = ps.size();
  if (n > 8192) throw std::length_error("dense assembly capped at N=8192");
  Eigen::MatrixXd a(n, n);
  if (!band_limited) {
    double diag = eval_kernel(k, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      a(i, i) = diag;
      for (int j = i + 1; j < n; ++j)
        a(i, j) = eval_kernel(k, dist(ps.d, ps.pts[i], ps.pts[j]));
    }
  } else {
    if (ps.d != 1)
      throw std::domain_error(
          "band-limited dense assembly is 1d (the d=2 band kernel is not "
          "radial)");
    double rmax = dist(ps.d, ps.domain.lo, ps.domain.hi) + 1e-12;
    const RadialTable& tab = bandlimited_radial_table(k, sigma, rmax,
                                                      refinement);
    double diag = tab(0.0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      a(i, i) = diag;
      for (int j = i + 1; j < n; ++j)
        a(i, j) = tab(dist(ps.d, ps.pts[i], ps.pts[j]));
    }
  }
  // Mirror the upper triangle so the matrix is exactly symmetric.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) a(i, j) = a(j, i);
  return a;
}

std::pair<std::vector<double>, SolveStats> solve_interpolation(
    const InterpolationProblem& prob) {
  if (!prob.ps) throw std::invalid_argument("problem has no point set");
  const PointSet& ps = *prob.ps;
  int n = ps.size();
  if (prob.rhs.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("rhs length != point count");
  if (!(prob.tol > 0.0)) throw std::invalid_argument("tol must be positive");

  double sigma = prob.sigma > 0.0 ? prob.sigma : kPi;
  int m = prob.m_per_dim > 0 ? prob.m_per_dim : choose_truncation(n);

  Matvec apply;
  Eigen::MatrixXd a;
  BoxTree tree;
  LevelGrids grids;
  switch (prob.backend) {
    case Backend::dense: {
      a = assemble_dense(prob.kernel, ps, false, sigma);
      apply = [&a, n](const std::vector<double>& x) {
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
        Eigen::VectorXd yv = a * xv;
        return std::vector<double>(yv.data(), yv.data() + n);
      };
      break;
    }
    case Backend::single_fmm: {
      int level = std::max(
          2, static_cast<int>(std::lround(
                 std::log2(std::sqrt(static_cast<double>(n))))));
      tree = build_tree(ps, prob.leaf_level > 0 ? prob.leaf_level : level);
      apply = [&, sigma, m](const std::vector<double>& x) {
        SumRequest req{prob.kernel, sigma, &ps, x, m};
        return fmm_matvec_single(req, tree).values;
      };
      break;
    }
    case Backend::mlfmm: {
      int level = std::max(
          3, static_cast<int>(std::lround(
                 std::log2(static_cast<double>(n) / 32.0))));
      if (prob.leaf_level > 0) level = prob.leaf_level;
      tree = build_tree(ps, level);
      grids = make_level_grids(prob.kernel, sigma, m, ps.d, level,
                               GridMode::shared, 10);
      apply = [&, sigma, m](const std::vector<double>& x) {
        SumRequest req{prob.kernel, sigma, &ps, x, m};
        return mlfmm_matvec(req, tree, grids).values;
      };
      break;
    }
  }

  KrylovResult kr = positive_definite(prob.kernel)
                        ? run_cg(apply, prob.rhs, prob.tol, prob.max_iter)
                        : run_gmres(apply, prob.rhs, prob.tol, prob.max_iter);
  return {std::move(kr.x), kr.stats};
}

CollocationResult solve_collocation_1d(int n, const RadialKernel& k,
                                       bool band_limited, double sigma) {
  if (n < 5) throw std::invalid_argument("need at least 5 collocation nodes");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = static_cast<double>(i) / (n - 1);

  const RadialTable* tab = nullptr;
  if (band_limited)
    tab = &bandlimited_radial_table(k, sigma, 1.0 + 1e-12, 2048);
  auto phi = [&](double r) {
    return band_limited ? (*tab)(std::abs(r)) : eval_kernel(k, std::abs(r));
  };
  auto phi_dxx = [&](double r) {
    return band_limited ? band_dxx_1d(k, sigma, r) : eval_kernel_dxx(k, r);
  };

  double pi2 = kPi * kPi;
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    bool boundary = i == 0 || i == n - 1;
    for (int j = 0; j < n; ++j) {
      double r = x[i] - x[j];
      a(i, j) = boundary ? phi(r) : -phi_dxx(r) + pi2 * phi(r);
    }
    b(i) = boundary ? 0.0 : 2.0 * pi2 * std::sin(kPi * x[i]);
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    double cond_est = a.norm() / std::max(lu.maxPivot(), 1e-300);
    throw std::runtime_error("singular collocation matrix, |A|/pivot ~ " +
                             std::to_string(cond_est));
  }
  Eigen::VectorXd lambda = lu.solve(b);

  CollocationResult res;
  res.sigma_used = band_limited ? sigma : 0.0;
  res.u_samples.resize(1001);
  double sq = 0.0;
  for (int p = 0; p <= 1000; ++p) {
    double t = p / 1000.0;
    double u = 0.0;
    for (int j = 0; j < n; ++j) u += lambda(j) * phi(t - x[j]);
    res.u_samples[p] = u;
    double diff = u - std::sin(kPi * t);
    sq += diff * diff;
  }
  res.rms = std::sqrt(sq / 1001.0);
  res.boundary_residual =
      std::max(std::abs(res.u_samples[0]), std::abs(res.u_samples[1000]));
  return res;
}

SpectralDiagnostics spectral_diagnostics(const RadialKernel& k,
                                         const PointSet& ps,
                                         SigmaPolicy policy, int refinement) {
  int n = ps.size();
  if (n > 2048) throw std::length_error("dense eigensolve capped at N=2048");
  SpectralDiagnostics d;
  d.q_x = separation_distance(ps);
  d.sigma = policy == SigmaPolicy::pi ? kPi : 2.0 * kPi / d.q_x;
  d.kappa = d.sigma * mesh_norm(ps, 2048);

  Eigen::MatrixXd a = assemble_dense(k, ps, true, d.sigma, refinement);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigensolve failed");
  d.gamma_min = es.eigenvalues()(0);
  d.gamma_max = es.eigenvalues()(n - 1);
  d.cond = d.gamma_max / d.gamma_min;

  double spec_at_sigma =
      (k.type == KernelType::WendlandC2 || k.type == KernelType::Wendland31)
          ? radial_fourier_numeric(k, 2.0 * kPi / d.q_x, ps.d, 1e-11)
          : eval_fourier(k, 2.0 * kPi / d.q_x, ps.d).value;
  d.bound_gamma_min = spec_at_sigma / d.q_x;
  d.bound_gamma_max = n * a.cwiseAbs().maxCoeff();
  d.gamma_min_bound_holds = d.gamma_min >= d.bound_gamma_min;
  d.gamma_max_bound_holds = d.gamma_max <= d.bound_gamma_max;

  switch (k.type) {
    case KernelType::MQ:
    case KernelType::IMQ:
      d.tau = 0.5 * (ps.d + 1);
      break;
    case KernelType::TPS:
      d.tau = 0.5 * (k.shape + ps.d);
      break;
    default:
      d.tau = 0.0;  // exponentially decaying spectrum, trend check skipped
  }
  d.bound_cond = d.tau > 0.0 ? std::pow(d.q_x, -2.0 * d.tau) : 0.0;
  return d;
}

}  // namespace blfmm
