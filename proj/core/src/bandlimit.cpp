#include "blfmm/bandlimit.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace blfmm {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
// Exclusion radius around the spectral pole of generalized transforms.
constexpr double kPoleBall = 1e-8;

// 8-point Gauss-Legendre panel rule; composite over `panels` uniform
// panels. Exact enough that panel count, not rule order, is the knob.
const double kGlNode[4] = {0.1834346424956498, 0.5255324099163290,
                           0.7966664774136267, 0.9602898564975363};
const double kGlWeight[4] = {0.3626837833783620, 0.3137066458778873,
                             0.2223810344533745, 0.1012285362903763};

template <typename F>
double composite_gl8(const F& f, double a, double b, int panels) {
  double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    double mid = a + (p + 0.5) * h;
    double half = 0.5 * h;
    double acc = 0.0;
    for (int q = 0; q < 4; ++q) {
      double dx = half * kGlNode[q];
      acc += kGlWeight[q] * (f(mid - dx) + f(mid + dx));
    }
    sum += acc * half;
  }
  return sum;
}

// Effective upper integration limit: where the spectrum has decayed to
// ~1e-17 of its scale, so composite panels are not wasted on zeros.
double spectrum_cutoff(const RadialKernel& k, double sigma) {
  switch (k.type) {
    case KernelType::Gaussian:
      return std::min(sigma, 12.6 * std::sqrt(k.shape) + 1.0);
    case KernelType::IMQ:
      return std::min(sigma, 46.0 / k.shape + 1.0);
    default:
      return sigma;
  }
}

// ---- d=1 band integral -------------------------------------------------

double band_integral_gaussian_1d(const RadialKernel& k, double sigma, double x,
                                 int refinement) {
  double hi = spectrum_cutoff(k, sigma);
  auto f = [&](double xi) {
    return eval_fourier(k, xi, 1).value * std::cos(xi * x);
  };
  return composite_gl8(f, 0.0, hi, refinement) / kPi;
}

double band_integral_imq_1d(const RadialKernel& k, double sigma, double x,
                            int refinement) {
  double hi = spectrum_cutoff(k, sigma);
  double delta = hi / refinement;
  auto f = [&](double xi) {
    return eval_fourier(k, std::abs(xi), 1).value * std::cos(xi * x);
  };
  // First panel holds the integrable log singularity of K_0; tanh_sinh
  // clusters nodes at the endpoint and never samples xi=0 itself.
  boost::math::quadrature::tanh_sinh<double> ts;
  double head = ts.integrate(f, 0.0, delta);
  double body = refinement > 1 ? composite_gl8(f, delta, hi, refinement - 1)
                               : 0.0;
  return (head + body) / kPi;
}

double band_integral_wendland_1d(const RadialKernel& k, double sigma, double x,
                                 int refinement) {
  auto f = [&](double xi) {
    return radial_fourier_numeric(k, xi, 1, 1e-11) * std::cos(xi * x);
  };
  return composite_gl8(f, 0.0, sigma, refinement) / kPi;
}

// MQ/TPS: the generalized spectrum is not integrable across the origin,
// but Phi - Phi_sigma only involves the band exterior where it is
// perfectly tame:
//   Phi_sigma(x) = phi(x) - (1/pi) \int_sigma^inf Phi^(xi) cos(xi x) dxi.
double tail_integral_1d(const RadialKernel& k, double sigma, double x) {
  x = std::abs(x);
  if (k.type == KernelType::MQ) {
    double c = k.shape;
    double hi = sigma + 60.0 / c;
    auto f = [&](double xi) {
      return eval_fourier(k, xi, 1).value * std::cos(xi * x);
    };
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, sigma, hi, 15, 1e-13, &err);
    return v / kPi;
  }
  // TPS: algebraic decay xi^{-(beta+1)}; shift the lower limit to zero and
  // split the phase so both pieces are standard half-line oscillatory
  // transforms of a monotone algebraic integrand.
  int beta = static_cast<int>(k.shape);
  double amp = eval_fourier(k, 1.0, 1).value;  // A with A xi^{-(beta+1)}
  double p = beta + 1.0;
  if (x == 0.0) return amp * std::pow(sigma, -(p - 1.0)) / (p - 1.0) / kPi;
  auto g = [&](double t) { return std::pow(sigma + t, -p); };
  static thread_local boost::math::quadrature::ooura_fourier_cos<double> oc(
      1e-11);
  static thread_local boost::math::quadrature::ooura_fourier_sin<double> os(
      1e-11);
  double cpart = oc.integrate(g, x).first;
  double spart = os.integrate(g, x).first;
  return amp *
         (std::cos(sigma * x) * cpart - std::sin(sigma * x) * spart) / kPi;
}

// ---- d=2 band integral -------------------------------------------------

// Polar integral of spectrum(rho) * cos(rho cos(t) x1) * cos(rho sin(t) x2)
// over the square [0, delta]^2 (the corner cell holding an integrable
// point singularity; rho * spectrum is smooth there).
template <typename Spectrum>
double corner_polar(const Spectrum& spec, double delta, double x1, double x2,
                    double r0) {
  boost::math::quadrature::gauss<double, 30> g;
  auto sector = [&](double t0, double t1, auto rmax) {
    auto outer = [&](double theta) {
      double rm = rmax(theta);
      auto inner = [&](double r) {
        return r * spec(r) * std::cos(r * std::cos(theta) * x1) *
               std::cos(r * std::sin(theta) * x2);
      };
      return g.integrate(inner, r0, rm);
    };
    return g.integrate(outer, t0, t1);
  };
  double v = sector(0.0, 0.25 * kPi,
                    [&](double t) { return delta / std::cos(t); });
  v += sector(0.25 * kPi, 0.5 * kPi,
              [&](double t) { return delta / std::sin(t); });
  return v;
}

double band_integral_2d(const RadialKernel& k, double sigma, const Pt& x,
                        int refinement) {
  if (k.type == KernelType::MQ || k.type == KernelType::TPS)
    throw std::domain_error(
        "band-limited reference for generalized transforms is 1d only");

  double hi = spectrum_cutoff(k, sigma);
  bool singular = fourier_singular_at_origin(k);

  // Radial spectrum evaluator; Wendland gets a sampled table since each
  // numeric transform is itself a quadrature.
  std::vector<double> table;
  double table_step = 0.0;
  bool tabulated = false;
  if (k.type == KernelType::WendlandC2 || k.type == KernelType::Wendland31) {
    int samples = 4 * refinement + 4;
    table_step = hi * std::sqrt(2.0) * 1.000001 / (samples - 3);
    table.resize(samples);
    for (int i = 0; i < samples; ++i)
      table[i] = radial_fourier_numeric(k, i * table_step, 1, 1e-11);
    tabulated = true;
  }
  auto spec = [&](double rho) -> double {
    if (tabulated) {
      double u = rho / table_step;
      int i = std::clamp(static_cast<int>(u), 1,
                         static_cast<int>(table.size()) - 3);
      double t = u - i;
      // 4-point Lagrange on consecutive samples.
      return table[i - 1] * (-t * (t - 1.0) * (t - 2.0) / 6.0) +
             table[i] * ((t * t - 1.0) * (t - 2.0) / 2.0) +
             table[i + 1] * (-t * (t + 1.0) * (t - 2.0) / 2.0) +
             table[i + 2] * (t * (t * t - 1.0) / 6.0);
    }
    return eval_fourier(k, rho, 2).value;
  };

  double delta = hi / refinement;
  auto f = [&](double xi1, double xi2) {
    return spec(std::hypot(xi1, xi2)) * std::cos(xi1 * x[0]) *
           std::cos(xi2 * x[1]);
  };

  double total = 0.0;
  for (int p1 = 0; p1 < refinement; ++p1) {
    double a1 = p1 * delta;
    for (int p2 = 0; p2 < refinement; ++p2) {
      double a2 = p2 * delta;
      if (singular && p1 == 0 && p2 == 0) continue;
      double acc = 0.0;
      double mid1 = a1 + 0.5 * delta, mid2 = a2 + 0.5 * delta;
      double half = 0.5 * delta;
      for (int q1 = 0; q1 < 8; ++q1) {
        double xi1 = mid1 + half * (q1 < 4 ? -kGlNode[q1] : kGlNode[q1 - 4]);
        double w1 = kGlWeight[q1 % 4];
        for (int q2 = 0; q2 < 8; ++q2) {
          double xi2 =
              mid2 + half * (q2 < 4 ? -kGlNode[q2] : kGlNode[q2 - 4]);
          acc += w1 * kGlWeight[q2 % 4] * f(xi1, xi2);
        }
      }
      total += acc * half * half;
    }
  }
  if (singular)
    total += corner_polar(spec, delta, x[0], x[1], kPoleBall);

  // Quarter-domain symmetry: 4 / (2 pi)^2.
  return total / (kPi * kPi);
}

}  // namespace

double RadialTable::operator()(double r) const {
  r = std::abs(r);
  double u = r / step_;
  int n = static_cast<int>(vals_.size());
  int i = std::clamp(static_cast<int>(u), 1, n - 3);
  double t = u - i;
  return vals_[i - 1] * (-t * (t - 1.0) * (t - 2.0) / 6.0) +
         vals_[i] * ((t * t - 1.0) * (t - 2.0) / 2.0) +
         vals_[i + 1] * (-t * (t + 1.0) * (t - 2.0) / 2.0) +
         vals_[i + 2] * (t * (t * t - 1.0) / 6.0);
}

const RadialTable& bandlimited_radial_table(const RadialKernel& k,
                                            double sigma, double rmax,
                                            int refinement) {
  // Clipped sigma keys the cache: spectra that have decayed to nothing by
  // the band edge produce identical tables for every larger sigma.
  double sigma_eff = spectrum_cutoff(k, sigma);
  using Key = std::tuple<int, double, double, double, int>;
  static std::mutex mu;
  static std::map<Key, RadialTable> cache;
  Key key{static_cast<int>(k.type), k.shape, sigma_eff, rmax, refinement};
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const int intervals = 1024;
  double step = rmax / intervals;
  std::vector<double> vals(intervals + 3);
  for (int i = 0; i < intervals + 3; ++i)
    vals[i] = eval_bandlimited(k, sigma, Pt{i * step, 0.0}, 1, refinement);
  auto [it, inserted] =
      cache.emplace(key, RadialTable(step, std::move(vals)));
  return it->second;
}

double mollifier_response(const Mollifier& m, double xi) {
  if (std::abs(xi) > m.sigma) return 0.0;
  return m.gain == Mollifier::Gain::unit ? 1.0 : 1.0 / m.sigma;
}

QuadratureGrid make_quadrature(double sigma, int m_per_dim, int d) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (m_per_dim < 2) throw std::invalid_argument("m_per_dim must be >= 2");
  if (d != 1 && d != 2) throw std::invalid_argument("d must be 1 or 2");

  QuadratureGrid g;
  g.sigma = sigma;
  g.m_per_dim = m_per_dim;
  g.d = d;
  double dxi = 2.0 * sigma / m_per_dim;
  if (d == 1) {
    g.nodes.reserve(m_per_dim);
    for (int m = 0; m < m_per_dim; ++m)
      g.nodes.push_back(Pt{-sigma + m * dxi, 0.0});
    g.weights.assign(m_per_dim, dxi);
  } else {
    g.nodes.reserve(static_cast<std::size_t>(m_per_dim) * m_per_dim);
    for (int m1 = 0; m1 < m_per_dim; ++m1)
      for (int m2 = 0; m2 < m_per_dim; ++m2)
        g.nodes.push_back(Pt{-sigma + m1 * dxi, -sigma + m2 * dxi});
    g.weights.assign(g.nodes.size(), dxi * dxi);
  }
  return g;
}

QuadratureGrid rescale_grid(const QuadratureGrid& grid, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("s must be positive");
  QuadratureGrid g = grid;
  g.sigma = grid.sigma / s;
  double wscale = grid.d == 1 ? 1.0 / s : 1.0 / (s * s);
  for (auto& n : g.nodes) {
    n[0] /= s;
    n[1] /= s;
  }
  for (auto& w : g.weights) w *= wscale;  // keeps sum w = (2 sigma/s)^d
  return g;
}

double eval_bandlimited(const RadialKernel& k, double sigma, const Pt& x,
                        int d, int refinement) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (d != 1 && d != 2) throw std::invalid_argument("d must be 1 or 2");
  int min_refine = d == 1 ? 1024 : 256;
  if (refinement < min_refine)
    throw std::invalid_argument("refinement below reference resolution");

  if (d == 2) return band_integral_2d(k, sigma, x, refinement);

  double r = std::abs(x[0]);
  switch (k.type) {
    case KernelType::Gaussian:
      return band_integral_gaussian_1d(k, sigma, r, refinement);
    case KernelType::IMQ:
      return band_integral_imq_1d(k, sigma, r, refinement);
    case KernelType::WendlandC2:
    case KernelType::Wendland31:
      return band_integral_wendland_1d(k, sigma, r, refinement);
    case KernelType::MQ:
    case KernelType::TPS:
      return eval_kernel(k, r) - tail_integral_1d(k, sigma, r);
  }
  throw std::logic_error("unreachable kernel type");
}

namespace {

// Average of the spectrum over one weight cell, pole excluded. 1D.
double cell_average_1d(const RadialKernel& k, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double xi) { return eval_fourier(k, std::abs(xi), 1).value; };
  double lo = a, hi = b;
  double integral = 0.0;
  if (lo < 0.0 && hi > 0.0) {
    integral = ts.integrate(f, lo, -kPoleBall) +
               ts.integrate(f, kPoleBall, hi);
  } else {
    if (lo == 0.0) lo = kPoleBall;
    if (hi == 0.0) hi = -kPoleBall;
    integral = ts.integrate(f, lo, hi);
  }
  return integral / (b - a);
}

// Average over the rectangle [a1,b1]x[a2,b2]; cells touching the origin
// go through polar coordinates (with the pole ball excluded), others
// through a tensor Gauss rule on |xi|-folded coordinates.
double cell_average_2d(const RadialKernel& k, double a1, double b1, double a2,
                       double b2) {
  auto spec = [&](double rho) { return eval_fourier(k, rho, 2).value; };
  // Fold into the positive quadrant (spectrum is radial).
  if (b1 <= 0.0) std::swap(a1, b1), a1 = -a1, b1 = -b1;
  if (b2 <= 0.0) std::swap(a2, b2), a2 = -a2, b2 = -b2;
  if (a1 < 0.0 || a2 < 0.0) {
    // Straddles an axis: split and recurse.
    double area = (b1 - a1) * (b2 - a2);
    double v = 0.0;
    if (a1 < 0.0) {
      v = cell_average_2d(k, a1, 0.0, a2, b2) * (-a1) * (b2 - a2) +
          cell_average_2d(k, 0.0, b1, a2, b2) * b1 * (b2 - a2);
    } else {
      v = cell_average_2d(k, a1, b1, a2, 0.0) * (b1 - a1) * (-a2) +
          cell_average_2d(k, a1, b1, 0.0, b2) * (b1 - a1) * b2;
    }
    return v / area;
  }
  double area = (b1 - a1) * (b2 - a2);
  if (a1 == 0.0 && a2 == 0.0 && b1 == b2) {
    return corner_polar(spec, b1, 0.0, 0.0, kPoleBall) / area;
  }
  boost::math::quadrature::gauss<double, 30> g;
  auto outer = [&](double xi1) {
    auto inner = [&](double xi2) { return spec(std::hypot(xi1, xi2)); };
    return g.integrate(inner, a2, b2);
  };
  return g.integrate(outer, a1, b1) / area;
}

}  // namespace

LowRankFactors translation_coefficients(const RadialKernel& k,
                                        const QuadratureGrid& grid,
                                        TranslationMode mode, int q) {
  LowRankFactors f;
  f.grid = grid;
  int n = grid.node_count();
  f.c_vals.resize(n);
  double inv2pi_d = grid.d == 1 ? 1.0 / kTwoPi : 1.0 / (kTwoPi * kTwoPi);

  if (mode == TranslationMode::fourier_series) {
    if (grid.d != 1)
      throw std::domain_error("fourier_series translation is 1d only");
    int big_q = q > 0 ? q : grid.m_per_dim / 2;
    f.q_terms = big_q;
    for (int m = 0; m < n; ++m) {
      double xi = grid.nodes[m][0];
      double acc = eval_kernel(k, 0.0);
      for (int j = 1; j <= big_q; ++j)
        acc += 2.0 * eval_kernel(k, static_cast<double>(j)) * std::cos(j * xi);
      f.c_vals[m] = acc * inv2pi_d;
    }
    return f;
  }

  bool singular = fourier_singular_at_origin(k);
  double dxi = grid.dxi();
  if (!singular) {
    for (int m = 0; m < n; ++m) {
      double rho = grid.d == 1 ? std::abs(grid.nodes[m][0])
                               : std::hypot(grid.nodes[m][0], grid.nodes[m][1]);
      double v;
      if (k.type == KernelType::WendlandC2 ||
          k.type == KernelType::Wendland31) {
        v = radial_fourier_numeric(k, rho, grid.d, 1e-11);
      } else {
        v = eval_fourier(k, rho, grid.d).value;
      }
      f.c_vals[m] = inv2pi_d * v;
    }
    return f;
  }

  // Spectra with a pole at xi=0: point samples near the origin are
  // arbitrarily wrong and the slow decay leaves an O(dxi) rule error
  // everywhere, so each node takes the average of the spectrum over its
  // own weight cell instead (pole ball excluded).
  f.regularized.reserve(n);
  for (int m = 0; m < n; ++m) {
    f.regularized.push_back(m);
    if (grid.d == 1) {
      double a = grid.nodes[m][0];
      f.c_vals[m] = inv2pi_d * cell_average_1d(k, a, a + dxi);
    } else {
      double a1 = grid.nodes[m][0], a2 = grid.nodes[m][1];
      f.c_vals[m] =
          inv2pi_d * cell_average_2d(k, a1, a1 + dxi, a2, a2 + dxi);
    }
  }
  return f;
}

double lowrank_eval(const LowRankFactors& f, const Pt& xi_pt, const Pt& xj_pt,
                    double* imag_residual) {
  Pt diff{xi_pt[0] - xj_pt[0], xi_pt[1] - xj_pt[1]};
  double re = 0.0, im = 0.0;
  int n = f.grid.node_count();
  for (int m = 0; m < n; ++m) {
    double phase = dot(f.grid.d, f.grid.nodes[m], diff);
    double amp = f.grid.weights[m] * f.c_vals[m];
    re += amp * std::cos(phase);
    im += amp * std::sin(phase);
  }
  if (imag_residual) *imag_residual = im;
  return re;
}

}  // namespace blfmm
