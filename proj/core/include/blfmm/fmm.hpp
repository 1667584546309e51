#pragma once

#include <vector>

#include "blfmm/bandlimit.hpp"
#include "blfmm/geometry.hpp"

namespace blfmm {

struct SumStats {
  long long near_pairs = 0;
  long long far_work = 0;  // complex multiply-accumulate count, far field
  double max_imag_residual = 0.0;
};

struct SumResult {
  std::vector<double> values;
  SumStats stats;
};

struct SumRequest {
  RadialKernel kernel;
  double sigma = 0.0;
  const PointSet* ps = nullptr;
  std::vector<double> weights;
  int m_per_dim = 0;
};

// O(N^2) oracle: values_i = sum_j w_j phi(|x_i - x_j|), or Phi_sigma via
// eval_bandlimited when use_bandlimited is set (distances are looked up
// in a cubic-interpolated radial table built at `refinement` panels; the
// table is what makes the N^2 band-limited oracle affordable).
SumResult direct_matvec(const RadialKernel& k, const PointSet& ps,
                        const std::vector<double>& weights,
                        bool use_bandlimited, double sigma,
                        int refinement = 1024);

// Hybrid oracle matching the fast method's split: original phi inside the
// neighbor block of the leaf level, Phi_sigma outside it.
SumResult direct_matvec_hybrid(const RadialKernel& k, const PointSet& ps,
                               const BoxTree& tree,
                               const std::vector<double>& weights,
                               double sigma, int refinement = 1024);

// M = ceil(sqrt(n)) rounded up to even, the M ~ sqrt(N) balance point;
// even M keeps xi=0 on the grid.
int choose_truncation(long long n);

// Single-level fast matvec: near field direct with the original kernel,
// far field through the three separated stages
//   V_b(xi_m)  = sum_{j in b} w_j e^{i xi_m (x_b - x_j)}         (P2M)
//   L_a(xi_m) += C(xi_m) e^{i xi_m (x_a - x_b)} V_b(xi_m)        (M2L)
//   u_i       += Re sum_m omega_m e^{i xi_m (x_i - x_a)} L_a(xi_m)  (L2P)
// over every non-neighbor box pair at the tree's leaf level.
SumResult fmm_matvec_single(const SumRequest& req, const BoxTree& tree);

enum class MatvecMode { direct, single_level, multilevel };

struct ComplexityRow {
  long long n = 0;
  double seconds = 0.0;
  long long near_pairs = 0;
  long long far_work = 0;
};

struct ComplexityTable {
  MatvecMode mode{};
  std::vector<ComplexityRow> rows;
  double slope = 0.0;  // least-squares log-log fit of seconds vs n
};

// Times one matvec mode over ascending sizes; each row is the best of
// `reps` runs. single_level uses M = N_bar = choose_truncation(N);
// multilevel targets ~32 points per leaf with a fixed per-level M of 32.
ComplexityTable complexity_probe(const RadialKernel& kernel,
                                 const std::vector<long long>& sizes,
                                 int reps, MatvecMode mode, double sigma,
                                 std::uint64_t seed);

}  // namespace blfmm
