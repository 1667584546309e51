#pragma once

#include <complex>
#include <vector>

#include "blfmm/fmm.hpp"

namespace blfmm {

// Level-to-level grid policy.
//   shared: every level reuses the leaf grid verbatim; transfers are pure
//           phase shifts and the multilevel sweep telescopes to the
//           single-level sum exactly. Default.
//   scaled: bandwidth halves per coarsening step (sigma_{l-1} = sigma_l/2,
//           nodes and weights divided by 2) so each level re-expands
//           sources scaled into a unit box; transfers then need Lagrange
//           interpolation between node sets. Coupling at level l uses a
//           band of width sigma/2^{leaf-l}, which is an intrinsically
//           coarser far-field model, so results are compared against the
//           per-pair coupling-level form rather than the single-level sum.
enum class GridMode { shared, scaled };

// CSR interpolation matrix: row t holds the Lagrange basis weights of the
// k source nodes nearest target t.
struct SparseInterp {
  int rows = 0, cols = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> vals;

  void apply(const std::complex<double>* x, std::complex<double>* y) const;
  void apply_transpose(const std::complex<double>* x,
                       std::complex<double>* y) const;
};

// Rows sum to 1 (Lagrange partition of unity); throws on coincident
// source nodes.
SparseInterp lagrange_matrix(const std::vector<double>& source_nodes,
                             const std::vector<double>& targets, int k);

// sup_{|xi|<=sigma, |x|<=a} |e^{i xi x / 2} - sum_k l_k(xi/2) e^{i xi_k x}|
// over k uniform nodes xi_k spanning [-sigma, sigma] inclusive: the
// one-step interpolation error of a half-band phase, the quantity that
// bounds the per-level transfer error.
double lagrange_phase_error(int k, double sigma = 3.14159265358979323846,
                            double a = 1.0, int resolution = 400);

struct LevelGrids {
  GridMode mode = GridMode::shared;
  int d = 1;
  int leaf_level = 2;
  int stencil_k = 10;
  RadialKernel kernel;
  std::vector<QuadratureGrid> grids;  // [0..leaf_level]; levels 0,1 unused
  std::vector<LowRankFactors> factors;  // translation spectra per level
  // interp[l] maps level-l nodes to level-(l-1) nodes, one dimension at a
  // time (tensor-applied for d=2); built for scaled mode only.
  std::vector<SparseInterp> interp;
};

LevelGrids make_level_grids(const RadialKernel& kernel, double sigma_leaf,
                            int m_leaf, int d, int leaf_level, GridMode mode,
                            int stencil_k);

struct Expansion {
  enum class Kind { multipole, local };
  int level = 0;
  int box = 0;
  Kind kind = Kind::multipole;
  std::vector<std::complex<double>> coeffs;
};

// expansions[level][box]; levels 0 and 1 stay empty.
using LevelExpansions = std::vector<std::vector<Expansion>>;

// P2M at the leaves, then M2M up to level 2:
//   V_{b,l-1}(xi') = e^{i xi' (x_parent - x_child)} (P V_{b,l})(xi')
// summed over children. Shared mode has P = identity.
LevelExpansions upsweep(const BoxTree& tree, const LevelGrids& grids,
                        const PointSet& ps,
                        const std::vector<double>& weights);

// Diagonal M2L over every interaction-list pair at every level:
//   L_a(xi_m) += C_l(xi_m) e^{i xi_m (x_a - x_b)} V_b(xi_m).
// Weights omega do not enter here; they are applied once at L2P.
LevelExpansions couple(const BoxTree& tree, const LevelGrids& grids,
                       const LevelExpansions& multipoles);

// L2L from level 2 down, then leaf L2P into out (+= Re):
//   child += e^{i xi_l (x_child - x_parent)} (1/omega_l) P^T (omega_{l-1} . parent)
//   u_i   += Re sum_m omega_m e^{i xi_m (x_i - x_a)} L_a(xi_m)
void downsweep(const BoxTree& tree, const LevelGrids& grids,
               const LevelExpansions& locals, const PointSet& ps,
               std::vector<double>& out, double* max_imag = nullptr);

// Near field direct at the leaf level + upsweep/couple/downsweep.
// Requires tree depth >= 3 (use fmm_matvec_single for shallower trees).
SumResult mlfmm_matvec(const SumRequest& req, const BoxTree& tree,
                       const LevelGrids& grids);

}  // namespace blfmm
