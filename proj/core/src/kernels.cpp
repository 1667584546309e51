#include "blfmm/kernels.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace blfmm {

namespace {

constexpr double kPi = 3.14159265358979323846;

double pow_int(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

bool is_wendland(KernelType t) {
  return t == KernelType::WendlandC2 || t == KernelType::Wendland31;
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// K_0, K_1 from the standard library (verified against a multiprecision
// oracle to ~1e-15 relative on [1e-6, 120]); hard underflow past z ~ 700
// short-circuits to 0 before the library can misbehave.
double bessel_k0(double z) {
  if (z > 690.0) return 0.0;
  return std::cyl_bessel_k(0.0, z);
}

double bessel_k1(double z) {
  if (z > 690.0) return 0.0;
  return std::cyl_bessel_k(1.0, z);
}

}  // namespace

RadialKernel parse_kernel_spec(const std::string& spec) {
  std::string s = to_lower(spec);
  std::string name = s;
  std::string param;
  if (auto colon = s.find(':'); colon != std::string::npos) {
    name = s.substr(0, colon);
    param = s.substr(colon + 1);
  }

  RadialKernel k;
  std::string expect_key;
  if (name == "gaussian" || name == "ga") {
    k = {KernelType::Gaussian, 1.0};
    expect_key = "c";
  } else if (name == "mq" || name == "multiquadric") {
    k = {KernelType::MQ, 1.0};
    expect_key = "c";
  } else if (name == "imq") {
    k = {KernelType::IMQ, 1.0};
    expect_key = "c";
  } else if (name == "tps") {
    k = {KernelType::TPS, 2.0};
    expect_key = "beta";
  } else if (name == "wendland" || name == "wendlandc2") {
    k = {KernelType::WendlandC2, 0.5};
    expect_key = "eps";
  } else if (name == "wendland31") {
    k = {KernelType::Wendland31, 0.5};
    expect_key = "eps";
  } else {
    throw std::invalid_argument("unknown kernel '" + name + "'");
  }

  if (!param.empty()) {
    auto eq = param.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("kernel parameter must be key=value, got '" +
                                  param + "'");
    std::string key = param.substr(0, eq);
    if (key != expect_key)
      throw std::invalid_argument("kernel '" + name + "' takes parameter '" +
                                  expect_key + "', not '" + key + "'");
    std::size_t used = 0;
    double value = std::stod(param.substr(eq + 1), &used);
    if (used != param.size() - eq - 1)
      throw std::invalid_argument("bad numeric value in '" + param + "'");
    if (!(value > 0.0) || !std::isfinite(value))
      throw std::invalid_argument("kernel parameter must be positive");
    if (k.type == KernelType::TPS) {
      if (value != std::floor(value) || std::fmod(value, 2.0) != 0.0)
        throw std::invalid_argument("tps beta must be a positive even integer");
    }
    k.shape = value;
  }
  return k;
}

std::string kernel_name(const RadialKernel& k) {
  std::ostringstream os;
  switch (k.type) {
    case KernelType::Gaussian:
      os << "gaussian:c=";
      break;
    case KernelType::MQ:
      os << "mq:c=";
      break;
    case KernelType::IMQ:
      os << "imq:c=";
      break;
    case KernelType::TPS:
      os << "tps:beta=";
      break;
    case KernelType::WendlandC2:
      os << "wendland:eps=";
      break;
    case KernelType::Wendland31:
      os << "wendland31:eps=";
      break;
  }
  os << k.shape;
  return os.str();
}

double eval_kernel(const RadialKernel& k, double r) {
  r = std::abs(r);
  double c = k.shape;
  switch (k.type) {
    case KernelType::Gaussian:
      return std::exp(-c * r * r);
    case KernelType::MQ:
      return std::sqrt(r * r + c * c);
    case KernelType::IMQ:
      return 1.0 / std::sqrt(r * r + c * c);
    case KernelType::TPS: {
      if (r == 0.0) return 0.0;  // limit of r^beta log r
      int beta = static_cast<int>(c);
      double sign = (1 + beta / 2) % 2 == 0 ? 1.0 : -1.0;
      return sign * pow_int(r, beta) * std::log(r);
    }
    case KernelType::WendlandC2: {
      double u = c * r;
      if (u >= 1.0) return 0.0;
      double v = 1.0 - u;
      return v * v * v * v * (4.0 * u + 1.0);
    }
    case KernelType::Wendland31: {
      double u = c * r;
      if (u >= 1.0) return 0.0;
      double v = 1.0 - u;
      return v * v * v * (3.0 * u + 1.0);
    }
  }
  throw std::logic_error("unreachable kernel type");
}

double eval_kernel_dxx(const RadialKernel& k, double x) {
  double c = k.shape;
  double x2 = x * x;
  switch (k.type) {
    case KernelType::Gaussian:
      return (4.0 * c * c * x2 - 2.0 * c) * std::exp(-c * x2);
    case KernelType::MQ:
      return c * c / std::pow(x2 + c * c, 1.5);
    case KernelType::IMQ:
      return (2.0 * x2 - c * c) / std::pow(x2 + c * c, 2.5);
    case KernelType::WendlandC2: {
      double u = c * std::abs(x);
      if (u >= 1.0) return 0.0;
      double v = 1.0 - u;
      return -20.0 * c * c * v * v * (1.0 - 4.0 * u);
    }
    case KernelType::Wendland31: {
      double u = c * std::abs(x);
      if (u >= 1.0) return 0.0;
      return -12.0 * c * c * (1.0 - u) * (1.0 - 3.0 * u);
    }
    case KernelType::TPS:
      throw std::domain_error("tps second derivative unsupported");
  }
  throw std::logic_error("unreachable kernel type");
}

FourierValue eval_fourier(const RadialKernel& k, double xi, int d) {
  if (d != 1 && d != 2) throw std::invalid_argument("d must be 1 or 2");
  xi = std::abs(xi);  // radial kernels have even spectra
  double c = k.shape;
  switch (k.type) {
    case KernelType::Gaussian: {
      double v = std::pow(kPi / c, 0.5 * d) * std::exp(-xi * xi / (4.0 * c));
      return {v, FourierKind::classical};
    }
    case KernelType::IMQ: {
      // Classical transform but the kernel is not integrable, so the
      // transform still diverges (logarithmically / like 1/xi) at the
      // origin.
      if (xi == 0.0)
        throw std::domain_error("imq transform singular at xi=0");
      double v = d == 1 ? 2.0 * bessel_k0(c * xi)
                        : 2.0 * kPi * std::exp(-c * xi) / xi;
      return {v, FourierKind::classical};
    }
    case KernelType::MQ: {
      if (xi == 0.0)
        throw std::domain_error("mq generalized transform singular at xi=0");
      double v;
      if (d == 1) {
        v = -2.0 * c * bessel_k1(c * xi) / xi;
      } else {
        // K_{3/2} in elementary form folded in:
        //   -2 pi (1 + c xi) e^{-c xi} / xi^3.
        v = -2.0 * kPi * (1.0 + c * xi) * std::exp(-c * xi) / (xi * xi * xi);
      }
      return {v, FourierKind::generalized};
    }
    case KernelType::TPS: {
      if (xi == 0.0)
        throw std::domain_error("tps generalized transform singular at xi=0");
      int beta = static_cast<int>(c);
      double v = std::pow(2.0 * kPi, 0.5 * d) *
                 std::pow(2.0, beta - 1 + 0.5 * d) *
                 std::tgamma(0.5 * (beta + d)) * std::tgamma(0.5 * beta + 1) /
                 std::pow(xi, beta + d);
      return {v, FourierKind::generalized};
    }
    case KernelType::WendlandC2:
    case KernelType::Wendland31:
      throw std::domain_error(
          "no closed-form transform; use radial_fourier_numeric");
  }
  throw std::logic_error("unreachable kernel type");
}

namespace {

// W(s) = \int_0^inf (t/sqrt(t^2+c^2) - 1) cos(st) dt. The integrand is
// O(1/t^2) so the oscillatory integral converges absolutely; W(0) = -c
// and dW/ds -> pi c^2 / 4, used as the small-s expansion where the
// oscillatory rule loses its footing.
double imq_counterterm_cos(double c, double s) {
  if (s < 1e-4) return -c + 0.25 * kPi * c * c * s;
  static thread_local boost::math::quadrature::ooura_fourier_cos<double>
      integrator(1e-11);
  auto f = [c](double t) { return t / std::sqrt(t * t + c * c) - 1.0; };
  return integrator.integrate(f, s).first;
}

}  // namespace

double radial_fourier_numeric(const RadialKernel& k, double xi, int d,
                              double tol) {
  if (d != 1 && d != 2) throw std::invalid_argument("d must be 1 or 2");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  xi = std::abs(xi);  // radial kernels have even spectra
  const double c = k.shape;

  if (k.type == KernelType::MQ || k.type == KernelType::TPS)
    throw std::domain_error(
        "kernel not absolutely integrable; numeric transform unsupported");

  if (k.type == KernelType::IMQ) {
    if (xi == 0.0)
      throw std::domain_error("imq transform singular at xi=0");
    if (d == 1) {
      static thread_local boost::math::quadrature::ooura_fourier_cos<double>
          integrator(1e-11);
      auto f = [c](double t) { return 1.0 / std::sqrt(t * t + c * c); };
      auto [val, rel] = integrator.integrate(f, xi);
      double result = 2.0 * val;
      if (rel * std::abs(result) > tol)
        throw accuracy_error("oscillatory quadrature did not converge",
                             rel * std::abs(result));
      return result;
    }
    // d=2: 2pi \int_0^inf t phi(t) J_0(xi t) dt with t phi -> 1. Subtract
    // the J_0 mass \int_0^inf J_0(xi t) dt = 1/xi and fold J_0 into its
    // cosine representation so the remainder is a family of absolutely
    // convergent cosine transforms:
    //   result = 2pi/xi + 4 \int_0^{pi/2} W(xi sin theta) dtheta.
    double err = 0.0;
    auto outer = [&](double theta) {
      return imq_counterterm_cos(c, xi * std::sin(theta));
    };
    double inner =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            outer, 0.0, 0.5 * kPi, 15, 1e-13, &err);
    double result = 2.0 * kPi / xi + 4.0 * inner;
    if (4.0 * err > tol)
      throw accuracy_error("counterterm quadrature did not converge",
                           4.0 * err);
    return result;
  }

  // Integrable kernels: plain adaptive quadrature over the (effective)
  // support.
  double radius;
  if (k.type == KernelType::Gaussian) {
    radius = std::sqrt(37.5 / c);  // exp(-37.5) ~ 5e-17
  } else {
    radius = support_radius(k);
  }

  double err = 0.0;
  double result;
  if (d == 1) {
    auto f = [&](double t) { return eval_kernel(k, t) * std::cos(xi * t); };
    result = 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::
                       integrate(f, 0.0, radius, 15, 1e-13, &err);
    err *= 2.0;
  } else {
    auto f = [&](double t) {
      return eval_kernel(k, t) * t * std::cyl_bessel_j(0.0, xi * t);
    };
    result = 2.0 * kPi * boost::math::quadrature::gauss_kronrod<double, 61>::
                             integrate(f, 0.0, radius, 15, 1e-13, &err);
    err *= 2.0 * kPi;
  }
  if (err > tol)
    throw accuracy_error("radial transform quadrature did not converge", err);
  return result;
}

bool fourier_singular_at_origin(const RadialKernel& k) {
  return k.type == KernelType::MQ || k.type == KernelType::IMQ ||
         k.type == KernelType::TPS;
}

bool positive_definite(const RadialKernel& k) {
  return k.type == KernelType::Gaussian || k.type == KernelType::IMQ ||
         is_wendland(k.type);
}

double support_radius(const RadialKernel& k) {
  if (is_wendland(k.type)) return 1.0 / k.shape;
  return std::numeric_limits<double>::infinity();
}

}  // namespace blfmm
