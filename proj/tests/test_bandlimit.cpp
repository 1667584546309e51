#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <blfmm/bandlimit.hpp>

#include <cmath>
#include <complex>

using namespace blfmm;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("mollifier response") {
  Mollifier unit{2.0, Mollifier::Gain::unit};
  CHECK(mollifier_response(unit, 0.0) == 1.0);
  CHECK(mollifier_response(unit, 1.999) == 1.0);
  CHECK(mollifier_response(unit, -1.5) == 1.0);
  CHECK(mollifier_response(unit, 2.001) == 0.0);

  Mollifier paper{2.0, Mollifier::Gain::paper};
  CHECK(mollifier_response(paper, 1.0) == doctest::Approx(0.5));
  CHECK(mollifier_response(paper, 3.0) == 0.0);
}

TEST_CASE("make_quadrature layout") {
  SUBCASE("d=1, hand grid") {
    QuadratureGrid g = make_quadrature(kPi, 4, 1);
    CHECK(g.node_count() == 4);
    CHECK(g.dxi() == doctest::Approx(kPi / 2));
    // xi_m = -sigma + (m-1) dxi
    CHECK(g.nodes[0][0] == doctest::Approx(-kPi));
    CHECK(g.nodes[1][0] == doctest::Approx(-kPi / 2));
    CHECK(g.nodes[2][0] == doctest::Approx(0.0));
    CHECK(g.nodes[3][0] == doctest::Approx(kPi / 2));
    for (double w : g.weights) CHECK(w == doctest::Approx(kPi / 2));
  }

  SUBCASE("smallest grid") {
    QuadratureGrid g = make_quadrature(2.0, 2, 1);
    CHECK(g.nodes[0][0] == doctest::Approx(-2.0));
    CHECK(g.nodes[1][0] == doctest::Approx(0.0));
    CHECK(g.weights[0] == doctest::Approx(2.0));
    CHECK(g.weights[1] == doctest::Approx(2.0));
  }

  SUBCASE("even M places xi=0 on the grid") {
    for (int m : {2, 8, 32}) {
      QuadratureGrid g = make_quadrature(1.7, m, 1);
      bool has_zero = false;
      for (const Pt& n : g.nodes)
        if (std::abs(n[0]) < 1e-14) has_zero = true;
      CHECK(has_zero);
    }
  }

  SUBCASE("weights tile the band") {
    QuadratureGrid g1 = make_quadrature(2.5, 6, 1);
    double sum = 0.0;
    for (double w : g1.weights) sum += w;
    CHECK(sum == doctest::Approx(5.0).epsilon(1e-14));

    QuadratureGrid g2 = make_quadrature(2.5, 6, 2);
    sum = 0.0;
    for (double w : g2.weights) sum += w;
    CHECK(sum == doctest::Approx(25.0).epsilon(1e-14));
  }

  SUBCASE("d=2 tensor grid is row-major") {
    QuadratureGrid g = make_quadrature(1.0, 2, 2);
    CHECK(g.node_count() == 4);
    CHECK(g.nodes[0][0] == doctest::Approx(-1.0));
    CHECK(g.nodes[0][1] == doctest::Approx(-1.0));
    CHECK(g.nodes[1][0] == doctest::Approx(-1.0));
    CHECK(g.nodes[1][1] == doctest::Approx(0.0));
    CHECK(g.nodes[2][0] == doctest::Approx(0.0));
    CHECK(g.nodes[2][1] == doctest::Approx(-1.0));
    for (double w : g.weights) CHECK(w == doctest::Approx(1.0));
  }

  SUBCASE("rejects bad arguments") {
    CHECK_THROWS_AS(make_quadrature(0.0, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_quadrature(1.0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_quadrature(1.0, 4, 3), std::invalid_argument);
  }
}

TEST_CASE("rescale_grid") {
  QuadratureGrid g = make_quadrature(kPi, 8, 1);

  SUBCASE("s=1 is the identity") {
    QuadratureGrid r = rescale_grid(g, 1.0);
    CHECK(r.sigma == doctest::Approx(g.sigma));
    for (int m = 0; m < g.node_count(); ++m) {
      CHECK(r.nodes[m][0] == doctest::Approx(g.nodes[m][0]));
      CHECK(r.weights[m] == doctest::Approx(g.weights[m]));
    }
  }

  SUBCASE("s=2 halves nodes and weights") {
    QuadratureGrid r = rescale_grid(g, 2.0);
    CHECK(r.sigma == doctest::Approx(kPi / 2));
    for (int m = 0; m < g.node_count(); ++m) {
      CHECK(r.nodes[m][0] == doctest::Approx(g.nodes[m][0] / 2));
      CHECK(r.weights[m] == doctest::Approx(g.weights[m] / 2));
    }
  }

  SUBCASE("d=2 weights divide by s^2") {
    QuadratureGrid g2 = make_quadrature(kPi, 4, 2);
    QuadratureGrid r = rescale_grid(g2, 2.0);
    CHECK(r.weights[0] == doctest::Approx(g2.weights[0] / 4));
  }
}

// References below were computed with 30-digit quadrature of the band
// integral (or the tail identity for MQ/TPS), independent of the
// production integration routes.
TEST_CASE("eval_bandlimited 1d reference values, sigma=pi") {
  RadialKernel ga{KernelType::Gaussian, 1.0};
  CHECK(eval_bandlimited(ga, kPi, 0.0) ==
        doctest::Approx(0.97367892507825857).epsilon(1e-12));
  CHECK(eval_bandlimited(ga, kPi, 0.5) ==
        doctest::Approx(0.78500162347256436).epsilon(1e-12));

  RadialKernel imq{KernelType::IMQ, 1.0};
  CHECK(eval_bandlimited(imq, kPi, 0.0) ==
        doctest::Approx(0.98325045404027081).epsilon(1e-10));
  CHECK(eval_bandlimited(imq, kPi, 0.25) ==
        doctest::Approx(0.96143728916669926).epsilon(1e-10));
  CHECK(eval_bandlimited(imq, kPi, 0.5) ==
        doctest::Approx(0.90069708853343813).epsilon(1e-10));
  CHECK(eval_bandlimited(imq, kPi, 1.0) ==
        doctest::Approx(0.71632964302991934).epsilon(1e-10));

  RadialKernel mq{KernelType::MQ, 1.0};
  CHECK(eval_bandlimited(mq, kPi, 0.0) ==
        doctest::Approx(1.0048404606633916).epsilon(1e-10));
  CHECK(eval_bandlimited(mq, kPi, 0.5) ==
        doctest::Approx(1.1164784549388851).epsilon(1e-10));

  RadialKernel tps{KernelType::TPS, 2.0};
  CHECK(eval_bandlimited(tps, kPi, 0.0) ==
        doctest::Approx(-0.10132118364233777).epsilon(1e-10));
  CHECK(eval_bandlimited(tps, kPi, 0.5) ==
        doctest::Approx(-0.13213201490798315).epsilon(1e-8));

  RadialKernel w{KernelType::WendlandC2, 1.0};
  CHECK(eval_bandlimited(w, kPi, 0.5) ==
        doctest::Approx(0.3979107476619201).epsilon(1e-8));

  RadialKernel w31{KernelType::Wendland31, 0.5};
  CHECK(eval_bandlimited(w31, kPi, 0.5) ==
        doctest::Approx(0.7530562479340863).epsilon(1e-8));
}

TEST_CASE("eval_bandlimited is even and recovers phi for wide bands") {
  RadialKernel ga{KernelType::Gaussian, 1.0};
  CHECK(eval_bandlimited(ga, kPi, -0.5) ==
        doctest::Approx(eval_bandlimited(ga, kPi, 0.5)).epsilon(1e-13));

  // Spectrum is ~5e-17 beyond the clip radius: the band sum equals phi.
  for (double x : {0.0, 0.3, 1.0}) {
    CHECK(eval_bandlimited(ga, 40.0, x) ==
          doctest::Approx(std::exp(-x * x)).epsilon(1e-11));
  }

  RadialKernel imq{KernelType::IMQ, 1.0};
  CHECK(eval_bandlimited(imq, 60.0, 0.5) ==
        doctest::Approx(1.0 / std::sqrt(1.25)).epsilon(1e-8));
}

TEST_CASE("eval_bandlimited 2d reference values, sigma=pi") {
  // Gaussian separates: the 2d band value is the product of 1d values.
  RadialKernel ga{KernelType::Gaussian, 1.0};
  CHECK(eval_bandlimited(ga, kPi, Pt{0.0, 0.0}, 2, 256) ==
        doctest::Approx(0.94805064914155306).epsilon(1e-10));
  CHECK(eval_bandlimited(ga, kPi, Pt{0.3, 0.4}, 2, 256) ==
        doctest::Approx(0.76577020282686555).epsilon(1e-10));

  RadialKernel imq{KernelType::IMQ, 1.0};
  CHECK(eval_bandlimited(imq, kPi, Pt{0.3, 0.4}, 2, 256) ==
        doctest::Approx(0.89039072343939399).epsilon(2e-6));

  RadialKernel mq{KernelType::MQ, 1.0};
  CHECK_THROWS_AS(eval_bandlimited(mq, kPi, Pt{0.3, 0.4}, 2, 256),
                  std::domain_error);
  RadialKernel tps{KernelType::TPS, 2.0};
  CHECK_THROWS_AS(eval_bandlimited(tps, kPi, Pt{0.3, 0.4}, 2, 256),
                  std::domain_error);
}

TEST_CASE("radial table matches direct evaluation off the sample grid") {
  RadialKernel imq{KernelType::IMQ, 1.0};
  const RadialTable& tab = bandlimited_radial_table(imq, kPi, 2.0, 2048);
  // Radii chosen to fall between table samples.
  for (double r : {0.0, 0.1237, 0.5, 0.77131, 1.313, 1.99}) {
    double direct = eval_bandlimited(imq, kPi, r);
    CHECK(tab(r) == doctest::Approx(direct).epsilon(1e-9));
  }
  // Same key returns the same cached object.
  const RadialTable& tab2 = bandlimited_radial_table(imq, kPi, 2.0, 2048);
  CHECK(&tab == &tab2);
}

TEST_CASE("translation coefficients: smooth spectra sample pointwise") {
  RadialKernel ga{KernelType::Gaussian, 1.0};
  QuadratureGrid g = make_quadrature(2.0, 4, 1);  // nodes -2,-1,0,1
  LowRankFactors f = translation_coefficients(ga, g, TranslationMode::spectral);
  CHECK(f.c_vals.size() == 4);
  CHECK(f.regularized.empty());
  // (2 pi)^{-1} Phi^(1), frozen reference
  CHECK(f.c_vals[3] == doctest::Approx(0.2196956447338612).epsilon(1e-13));
  CHECK(f.c_vals[1] == doctest::Approx(f.c_vals[3]).epsilon(1e-13));
  CHECK(f.c_vals[2] ==
        doctest::Approx(std::sqrt(kPi) / (2 * kPi)).epsilon(1e-13));

  SUBCASE("wendland goes through the numeric transform") {
    RadialKernel w{KernelType::WendlandC2, 1.0};
    LowRankFactors fw =
        translation_coefficients(w, g, TranslationMode::spectral);
    CHECK(fw.c_vals[3] ==
          doctest::Approx(0.6432499873092903 / (2 * kPi)).epsilon(1e-9));
    CHECK(fw.c_vals[2] == doctest::Approx((2.0 / 3.0) / (2 * kPi)).epsilon(1e-11));
  }
}

TEST_CASE("translation coefficients: singular spectra use cell averages") {
  RadialKernel imq{KernelType::IMQ, 1.0};
  QuadratureGrid g = make_quadrature(kPi, 8, 1);
  LowRankFactors f =
      translation_coefficients(imq, g, TranslationMode::spectral);
  REQUIRE(f.c_vals.size() == 8);
  CHECK(f.regularized.size() == 8);  // every node is averaged

  SUBCASE("off-pole cell average matches composite Simpson") {
    // Node 5 covers [pi/4, pi/2], far from the xi=0 pole.
    double lo = g.nodes[5][0], hi = lo + g.dxi();
    REQUIRE(lo == doctest::Approx(kPi / 4));
    int n = 20000;
    double h = (hi - lo) / n, acc = 0.0;
    auto spec = [&](double xi) {
      return eval_fourier(imq, xi, 1).value / (2 * kPi);
    };
    for (int i = 0; i < n; ++i) {
      double a = lo + i * h;
      acc += h / 6.0 * (spec(a) + 4.0 * spec(a + h / 2) + spec(a + h));
    }
    CHECK(f.c_vals[5] == doctest::Approx(acc / g.dxi()).epsilon(1e-11));
  }

  SUBCASE("pole cells stay finite and dominate their midpoint sample") {
    // Node 4 covers [0, pi/4]: the log singularity pushes the average
    // above the value at any interior point bounded away from 0.
    CHECK(std::isfinite(f.c_vals[4]));
    double mid = eval_fourier(imq, g.nodes[4][0] + 0.5 * g.dxi(), 1).value /
                 (2 * kPi);
    CHECK(f.c_vals[4] > mid);
  }

  SUBCASE("mq and tps averages are finite across the pole") {
    RadialKernel mq{KernelType::MQ, 1.0};
    RadialKernel tps{KernelType::TPS, 2.0};
    for (const RadialKernel& k : {mq, tps}) {
      LowRankFactors fk =
          translation_coefficients(k, g, TranslationMode::spectral);
      for (double c : fk.c_vals) CHECK(std::isfinite(c));
    }
  }
}

TEST_CASE("translation coefficients: fourier series mode") {
  RadialKernel mq{KernelType::MQ, 1.0};
  QuadratureGrid g = make_quadrature(kPi, 8, 1);
  LowRankFactors f =
      translation_coefficients(mq, g, TranslationMode::fourier_series, 6);
  CHECK(f.q_terms == 6);
  for (int m = 0; m < 8; ++m) {
    double acc = eval_kernel(mq, 0.0);
    for (int q = 1; q <= 6; ++q)
      acc += 2.0 * eval_kernel(mq, static_cast<double>(q)) *
             std::cos(q * g.nodes[m][0]);
    CHECK(f.c_vals[m] == doctest::Approx(acc / (2 * kPi)).epsilon(1e-13));
  }

  SUBCASE("default q is half the node count") {
    LowRankFactors fd =
        translation_coefficients(mq, g, TranslationMode::fourier_series);
    CHECK(fd.q_terms == 4);
  }
}

TEST_CASE("separated factors regroup into the phase difference") {
  // e^{i xi (xi_pt - xj_pt)} must equal the product of the P2M phase, the
  // M2L shift between box centers, and the L2P phase: regrouping the
  // exponent is exact, which is what makes the telescoping sweeps work.
  QuadratureGrid g = make_quadrature(kPi, 16, 1);
  Pt xi_pt{0.37, 0.0}, xj_pt{-0.21, 0.0};
  Pt xa{0.5, 0.0}, xb{-0.25, 0.0};
  for (int m = 0; m < g.node_count(); ++m) {
    const Pt& xi = g.nodes[m];
    std::complex<double> direct =
        std::polar(1.0, dot(1, xi, Pt{xi_pt[0] - xj_pt[0], 0.0}));
    std::complex<double> grouped =
        l2p_factor(1, xi, 1.0, Pt{xi_pt[0] - xa[0], 0.0}) *
        std::polar(1.0, dot(1, xi, Pt{xa[0] - xb[0], 0.0})) *
        p2m_factor(1, xi, Pt{xj_pt[0] - xb[0], 0.0});
    CHECK(std::abs(direct - grouped) < 1e-12);
  }
}

TEST_CASE("lowrank_eval approaches the band kernel as M grows") {
  // 100 displacements spanning [-1, 1]; max error must be non-increasing
  // in M (1.1 slack) per the convergence property, and the M=64 levels
  // match the measured rule error (left-endpoint == trapezoid for even
  // integrands, O(dxi^2)).
  RadialKernel imq{KernelType::IMQ, 1.0};
  RadialKernel ga{KernelType::Gaussian, 1.0};
  for (const RadialKernel& k : {imq, ga}) {
    std::vector<double> exact(100);
    for (int p = 0; p < 100; ++p)
      exact[p] = eval_bandlimited(k, kPi, -1.0 + 2.0 * p / 99.0);
    double prev = 1e9, prev_imag = 1e9, err64 = 0.0;
    for (int m : {8, 16, 32, 64, 128}) {
      QuadratureGrid g = make_quadrature(kPi, m, 1);
      LowRankFactors f =
          translation_coefficients(k, g, TranslationMode::spectral);
      double err = 0.0, imax = 0.0;
      for (int p = 0; p < 100; ++p) {
        double t = -1.0 + 2.0 * p / 99.0;
        double imag = 0.0;
        double got = lowrank_eval(f, Pt{t, 0.0}, Pt{0.0, 0.0}, &imag);
        err = std::max(err, std::abs(got - exact[p]));
        imax = std::max(imax, std::abs(imag));
      }
      CHECK(err < 1.1 * prev);
      // The imaginary residual is the rule's endpoint asymmetry,
      // first-order in dxi: it must shrink as M doubles.
      CHECK(imax < 0.75 * prev_imag);
      prev = err;
      prev_imag = imax;
      if (m == 64) err64 = err;
    }
    if (k.type == KernelType::IMQ) CHECK(err64 < 2e-3);
    if (k.type == KernelType::Gaussian) CHECK(err64 < 1e-4);
  }
}

TEST_CASE("imag residual vanishes once the band covers the spectrum") {
  // With sigma past the Gaussian decay cutoff the edge coefficient is
  // ~5e-17, the asymmetry term dies, and mirrored nodes cancel exactly:
  // the spec-level 1e-8 relative budget holds with 9 digits to spare.
  RadialKernel ga{KernelType::Gaussian, 1.0};
  QuadratureGrid g = make_quadrature(16.0, 256, 1);
  LowRankFactors f = translation_coefficients(ga, g, TranslationMode::spectral);
  for (double t : {-0.9, -0.3, 0.2, 0.7}) {
    double imag = 0.0;
    double v = lowrank_eval(f, Pt{t, 0.0}, Pt{0.0, 0.0}, &imag);
    CHECK(v == doctest::Approx(std::exp(-t * t)).epsilon(1e-12));
    CHECK(std::abs(imag) < 1e-8 * std::abs(v));
  }
}

TEST_CASE("spectral positivity for positive definite kernels") {
  RadialKernel ga{KernelType::Gaussian, 1.0};
  RadialKernel imq{KernelType::IMQ, 1.0};
  QuadratureGrid g = make_quadrature(kPi, 32, 1);
  for (const RadialKernel& k : {ga, imq}) {
    LowRankFactors f = translation_coefficients(k, g, TranslationMode::spectral);
    double mn = 1e300;
    for (double c : f.c_vals) mn = std::min(mn, c);
    CHECK(mn > 0.0);
  }
}

TEST_CASE("mollifier limit: wider bands approach the kernel") {
  RadialKernel ga{KernelType::Gaussian, 1.0};
  double prev = 1e300;
  for (double sigma : {2.0, 4.0, 8.0, 16.0}) {
    double diff = std::abs(eval_bandlimited(ga, sigma, 0.0) - 1.0);
    CHECK(diff < prev);
    prev = diff;
  }
}
