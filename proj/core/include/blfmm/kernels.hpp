#pragma once

#include <string>

#include "blfmm/common.hpp"

namespace blfmm {

// Wendland31 is the compact function (1-er)_+^3(3er+1) used by the
// experiment harness; WendlandC2 is the classical C2 function
// (1-er)_+^4(4er+1). Both are C2 and positive definite in d <= 3.
enum class KernelType { Gaussian, MQ, IMQ, TPS, WendlandC2, Wendland31 };

struct RadialKernel {
  KernelType type = KernelType::Gaussian;
  // c for Gaussian/MQ/IMQ, support scale eps for Wendland, exponent beta
  // for TPS (positive even integer).
  double shape = 1.0;
};

enum class FourierKind { classical, generalized };

struct FourierValue {
  double value = 0.0;
  FourierKind kind = FourierKind::classical;
};

// Parses `name:param=value`, case-insensitive; e.g. "imq:c=1",
// "wendland:eps=0.5", "tps:beta=2". Omitted parameter keeps the default
// shape (c=1, eps=0.5, beta=2). Throws std::invalid_argument on junk.
RadialKernel parse_kernel_spec(const std::string& spec);
std::string kernel_name(const RadialKernel& k);

// phi(r); callers pass |x - x_j|. TPS returns 0 at r=0 (continuity limit).
double eval_kernel(const RadialKernel& k, double r);

// d^2/dx^2 phi(|x|) along a line, needed by 1D collocation rows.
// Available for Gaussian/MQ/IMQ/Wendland; TPS throws.
double eval_kernel_dxx(const RadialKernel& k, double x);

// Closed-form (generalized) Fourier transform in the convention
//   F(xi) = \int phi(|x|) e^{-i xi . x} dx,
// so the inverse carries (2pi)^{-d}. MQ/TPS are generalized transforms
// and reject xi=0; IMQ's classical transform is also singular at xi=0
// (its kernel is not integrable) and rejects it too. Wendland kernels
// have no closed form and direct callers to radial_fourier_numeric.
FourierValue eval_fourier(const RadialKernel& k, double xi, int d);

// Numeric radial transform, same convention as eval_fourier:
//   d=1: 2 \int_0^inf phi(t) cos(xi t) dt
//   d=2: 2pi \int_0^inf phi(t) t J_0(xi t) dt
// Supports integrable kernels (Gaussian, Wendland) everywhere and IMQ for
// xi > 0 (conditionally convergent oscillatory path). MQ/TPS are not
// transformable this way and throw. Throws accuracy_error if the
// quadrature cannot certify `tol` absolute error.
double radial_fourier_numeric(const RadialKernel& k, double xi, int d,
                              double tol);

// True for kernels whose transform blows up at xi=0 (MQ, IMQ, TPS);
// quadrature grids must regularize the origin cell for these.
bool fourier_singular_at_origin(const RadialKernel& k);

// Strictly positive transform where defined.
bool positive_definite(const RadialKernel& k);

// Radius beyond which phi vanishes identically; +inf for global kernels.
double support_radius(const RadialKernel& k);

}  // namespace blfmm
