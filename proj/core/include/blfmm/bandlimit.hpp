#pragma once

#include <complex>
#include <vector>

#include "blfmm/kernels.hpp"

namespace blfmm {

// Frequency cutoff eta_sigma. Unit gain (the operative definition) is the
// plain indicator of [-sigma, sigma]; the `paper` variant carries a
// 1/sigma prefactor and exists only so documentation tests can state the
// difference.
struct Mollifier {
  double sigma = 1.0;
  enum class Gain { unit, paper } gain = Gain::unit;
};

double mollifier_response(const Mollifier& m, double xi);

// Uniform left-endpoint frequency grid on [-sigma, sigma]^d:
//   xi_m = -sigma + (m-1) * dxi, dxi = 2 sigma / M, omega_m = dxi,
// tensorized row-major for d=2. Even M places xi=0 on the grid.
struct QuadratureGrid {
  double sigma = 0.0;
  int m_per_dim = 0;
  int d = 1;
  std::vector<Pt> nodes;
  std::vector<double> weights;

  int node_count() const { return static_cast<int>(nodes.size()); }
  double dxi() const { return 2.0 * sigma / m_per_dim; }
};

QuadratureGrid make_quadrature(double sigma, int m_per_dim, int d);

// Nodes and weights divided by s: the grid for sources scaled into a box
// s times larger. s=2 is the parent-level grid of the multilevel scheme.
QuadratureGrid rescale_grid(const QuadratureGrid& grid, double s);

// Band-limited kernel
//   Phi_sigma(x) = (2pi)^{-d} \int_{[-sigma,sigma]^d} Phi^(xi) e^{i xi.x} dxi,
// evaluated by composite high-order quadrature with `refinement` panels
// per dimension (>= 1024 for d=1; d=2 accepts >= 256 since cost is
// quadratic). This is the slow reference evaluator.
//
// Integrable spectra (Gaussian, IMQ, Wendland) integrate the band
// directly; the IMQ origin cell gets a series patch for its log
// singularity (d=1) or a polar-coordinate corner panel (d=2).
// MQ/TPS spectra are not integrable across 0, so for d=1 the equivalent
// tail form  Phi_sigma = Phi - (2pi)^{-1} \int_{|xi|>sigma} Phi^ e^{i xi x} dxi
// is used instead; MQ/TPS with d=2 are unsupported and throw.
double eval_bandlimited(const RadialKernel& k, double sigma, const Pt& x,
                        int d, int refinement);

inline double eval_bandlimited(const RadialKernel& k, double sigma, double x,
                               int refinement = 2048) {
  return eval_bandlimited(k, sigma, Pt{x, 0.0}, 1, refinement);
}

// Cubic-interpolated samples of r -> Phi_sigma(r) on [0, rmax], the
// lookup that makes O(N^2) band-limited oracles affordable (d=1; the d=2
// band kernel is not radial). Entries are eval_bandlimited values at the
// given refinement; tables are cached process-wide since rebuilding one
// costs thousands of quadratures.
class RadialTable {
 public:
  RadialTable(double step, std::vector<double> vals)
      : step_(step), vals_(std::move(vals)) {}
  double operator()(double r) const;

 private:
  double step_;
  std::vector<double> vals_;
};

const RadialTable& bandlimited_radial_table(const RadialKernel& k,
                                            double sigma, double rmax,
                                            int refinement);

enum class TranslationMode { spectral, fourier_series };

struct LowRankFactors {
  QuadratureGrid grid;
  std::vector<double> c_vals;
  int q_terms = 0;
  // Node indices whose value came from cell averaging instead of point
  // sampling (singular spectra).
  std::vector<int> regularized;
};

// Translation spectrum C(xi_m) of the separated far-field form
//   Phi_sigma(x_i - x_j) ~ Re sum_m omega_m C(xi_m) e^{i xi_m (x_i - x_j)}.
//
// spectral mode: C(xi_m) = (2pi)^{-d} Phi^(xi_m) sampled pointwise for
// smooth spectra. Kernels singular at xi=0 (MQ/IMQ/TPS) instead average
// Phi^ over every weight cell (the pole makes point samples near 0
// arbitrarily wrong, and for slowly decaying spectra the cell average
// also absorbs the O(dxi) rule error elsewhere); the origin-adjacent
// cells exclude a 1e-8 ball around the pole. Averaged nodes are listed
// in `regularized`.
//
// fourier_series mode (d=1 only): C(xi_m) = (2pi)^{-1} sum_{q=-Q}^{Q}
// phi(q) e^{-i q xi_m}, the truncated-series form that stays finite for
// generalized transforms; q_terms = Q (default M/2 when q <= 0).
LowRankFactors translation_coefficients(const RadialKernel& k,
                                        const QuadratureGrid& grid,
                                        TranslationMode mode, int q = 0);

// Outgoing phase e^{-i xi . x_j} (unit modulus).
inline std::complex<double> p2m_factor(int d, const Pt& xi, const Pt& x) {
  return std::polar(1.0, -dot(d, xi, x));
}

// Incoming phase omega e^{i xi . x} (modulus omega).
inline std::complex<double> l2p_factor(int d, const Pt& xi, double weight,
                                       const Pt& x) {
  return std::polar(weight, dot(d, xi, x));
}

// Re sum_m omega_m C(xi_m) e^{i xi_m (x_i - x_j)}; the imaginary residual,
// which must vanish for real even spectra, is written to *imag_residual
// when given.
double lowrank_eval(const LowRankFactors& f, const Pt& xi_pt, const Pt& xj_pt,
                    double* imag_residual = nullptr);

}  // namespace blfmm
