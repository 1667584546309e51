#pragma once

#include <Eigen/Dense>
#include <vector>

#include "blfmm/mlfmm.hpp"

namespace blfmm {

// A_ij = phi(|x_i - x_j|), or Phi_sigma when band_limited; exactly
// symmetric (upper triangle mirrored). N capped at 8192.
Eigen::MatrixXd assemble_dense(const RadialKernel& k, const PointSet& ps,
                               bool band_limited, double sigma,
                               int refinement = 1024);

enum class Backend { dense, single_fmm, mlfmm };

struct InterpolationProblem {
  RadialKernel kernel;
  const PointSet* ps = nullptr;
  std::vector<double> rhs;
  Backend backend = Backend::dense;
  double tol = 1e-10;
  int max_iter = 2000;
  // Fast-backend parameters; sigma <= 0 defaults to pi, m_per_dim <= 0 to
  // choose_truncation(N).
  double sigma = 0.0;
  int m_per_dim = 0;
  int leaf_level = 0;  // 0: pick from N
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // final ||A x - b||_2 / ||b||_2
  long long matvecs = 0;
  std::string method;  // "cg" or "gmres"
  bool converged = false;
};

// Krylov solve of A lambda = rhs with matrix products from the selected
// backend: CG when the kernel is positive definite (SPD system), GMRES
// with Givens rotations otherwise (MQ/TPS are only conditionally positive
// definite). Throws on max_iter with the best residual in the message.
std::pair<std::vector<double>, SolveStats> solve_interpolation(
    const InterpolationProblem& prob);

struct CollocationResult {
  double rms = 0.0;                // against the manufactured solution
  std::vector<double> u_samples;   // on the 1001-point evaluation lattice
  double boundary_residual = 0.0;  // max |u| at the two boundary nodes
  double sigma_used = 0.0;         // 0 for the plain column
};

// Unsymmetric (Kansa) collocation of the two-point model problem
//   -u'' + pi^2 u = 2 pi^2 sin(pi x) on (0,1), u(0) = u(1) = 0,
// exact solution sin(pi x). n uniform nodes including both endpoints;
// interior rows apply (-d^2/dx^2 + pi^2) to the kernel columns, boundary
// rows the identity; dense LU. RMS is taken against sin(pi x) on the
// fixed inclusive 1001-point lattice. band_limited replaces phi by
// Phi_sigma (and its second derivative) throughout.
CollocationResult solve_collocation_1d(int n, const RadialKernel& k,
                                       bool band_limited, double sigma);

enum class SigmaPolicy { pi, two_pi_over_q };

struct SpectralDiagnostics {
  double gamma_min = 0.0;
  double gamma_max = 0.0;
  double cond = 0.0;
  double q_x = 0.0;
  double sigma = 0.0;
  double kappa = 0.0;            // sigma * h, reported only
  double bound_gamma_min = 0.0;  // q_X^{-1} Phi^(2 pi / q_X)
  double bound_gamma_max = 0.0;  // N * max_jk |Phi_sigma(x_j - x_k)|
  bool gamma_min_bound_holds = false;
  bool gamma_max_bound_holds = false;
  // Algebraic-decay order used by the cond ~ q^{-2 tau} trend check;
  // 0 marks kernels with exponentially decaying spectra, for which the
  // check does not apply. bound_cond is the unit-constant envelope
  // q^{-2 tau}; the constant is fitted across instances by the caller.
  double tau = 0.0;
  double bound_cond = 0.0;
};

// Dense symmetric eigensolve of the band-limited interpolation matrix
// plus the spectral bounds it is checked against. N capped at 2048.
// refinement controls the band-table quadrature; the default is overkill
// for certificate sweeps whose margins are many orders of magnitude.
SpectralDiagnostics spectral_diagnostics(const RadialKernel& k,
                                         const PointSet& ps,
                                         SigmaPolicy policy,
                                         int refinement = 1024);

}  // namespace blfmm
