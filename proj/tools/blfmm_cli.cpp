// blfmm command-line driver: kernel/spectrum dumps, two-cluster accuracy
// sweeps, complexity benchmarks, interpolation and collocation runs, and
// the reference-table reproductions.
//
// Conventions shared by every command:
//   - CSV artifacts open with `#` metadata lines (version, command line,
//     seed, timestamp); only the timestamp line differs between reruns
//     with identical flags. bench additionally carries measured wall
//     times, which no seed can pin down.
//   - errors and failed embedded checks go to stderr as single-line JSON;
//     exit 0 iff every embedded check passed (2 for usage/IO errors).
//   - all randomness is counter-hashed from --seed; there is no global
//     RNG state, so reruns and --threads variations agree bitwise.

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <string>
#include <vector>

#include "blfmm/bandlimit.hpp"
#include "blfmm/fmm.hpp"
#include "blfmm/geometry.hpp"
#include "blfmm/kernels.hpp"
#include "blfmm/mlfmm.hpp"
#include "blfmm/solver.hpp"

namespace {

using nlohmann::json;
using namespace blfmm;

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// The one line allowed to differ between reruns.
std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CsvFile {
  std::ofstream out;

  CsvFile(const std::string& path, const std::string& cmdline,
          std::uint64_t seed) {
    out.open(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# blfmm " << kVersion << "\n";
    out << "# command: " << cmdline << "\n";
    out << "# seed: " << seed << "\n";
    out << "# generated: " << timestamp_utc() << "\n";
  }
};

std::vector<double> read_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    v.push_back(std::stod(line));
  }
  return v;
}

// Peeks the first data line: a comma means y-columns are present.
int infer_dimension(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    return line.find(',') == std::string::npos ? 1 : 2;
  }
  throw std::runtime_error("no data lines in " + path);
}

// "5", "5..12", or "5,7,9".
std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  auto dots = s.find("..");
  if (dots != std::string::npos) {
    int a = std::stoi(s.substr(0, dots));
    int b = std::stoi(s.substr(dots + 2));
    if (b < a) throw std::invalid_argument("descending range " + s);
    for (int i = a; i <= b; ++i) out.push_back(i);
    return out;
  }
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    out.push_back(std::stoi(s.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

// MQ/TPS have generalized transforms with a non-integrable pole at
// xi = 0; point or cell sampling cannot represent them, the truncated
// Fourier series can.
TranslationMode default_translation(const RadialKernel& k) {
  return (k.type == KernelType::MQ || k.type == KernelType::TPS)
             ? TranslationMode::fourier_series
             : TranslationMode::spectral;
}

// Everything the subcommands consume, validated by the CLI layer.
struct RunConfig {
  std::string kernel_spec;
  std::string points_path, weights_path, rhs_path;
  std::string out, out_dir = ".", dump_expansions;
  std::string mode = "single", backend = "dense", translation = "auto";
  std::string n_list = "9..15";
  double sigma = kPi;
  double tol = 1e-8;
  double budget_seconds = 120.0;
  int m = 0;  // 0: choose_truncation(N)
  int levels = 0;
  int stencil_k = 10;
  int r_points = 201;
  int n = 64;
  int max_iter = 2000;
  int reps = 3;
  int threads = 0;
  int k_min = 5, k_max = 12;
  int n_min = 9, n_max = 15;
  bool bandlimited = false;
  std::uint64_t seed = 1234;
  std::vector<double> r_list{1.0, 2.0, 4.0};
  std::vector<int> m_list{8, 16, 32, 64};
  std::vector<long long> sizes{1024, 2048, 4096, 8192, 16384, 32768, 65536};
  std::vector<std::string> modes{"direct", "single", "mlfmm"};
};

TranslationMode pick_translation(const RunConfig& cfg, const RadialKernel& k) {
  if (cfg.translation == "spectral") return TranslationMode::spectral;
  if (cfg.translation == "fourier_series")
    return TranslationMode::fourier_series;
  return default_translation(k);
}

int finish(const std::string& command, const std::vector<std::string>& fails) {
  if (fails.empty()) return 0;
  json j{{"command", command},
         {"error", "embedded checks failed"},
         {"failures", fails}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
  return 1;
}

// ---------------------------------------------------------------- kernel-dump

int cmd_kernel_dump(const RunConfig& cfg, const std::string& cmdline) {
  RadialKernel k = parse_kernel_spec(cfg.kernel_spec);
  QuadratureGrid grid = make_quadrature(cfg.sigma, cfg.m, 1);
  LowRankFactors f = translation_coefficients(k, grid, pick_translation(cfg, k));

  std::vector<std::string> fails;
  double max_imag = 0.0;
  {
    CsvFile csv(cfg.out + "_kernel.csv", cmdline, cfg.seed);
    csv.out << "r,phi,phi_sigma_fmm\n";
    for (int j = 0; j < cfg.r_points; ++j) {
      double r = static_cast<double>(j) / (cfg.r_points - 1);
      double imag = 0.0;
      double phi = eval_kernel(k, r);
      double lr = lowrank_eval(f, Pt{r, 0.0}, Pt{0.0, 0.0}, &imag);
      max_imag = std::max(max_imag, std::abs(imag));
      if (!std::isfinite(phi) || !std::isfinite(lr))
        fails.push_back("non-finite kernel value at r=" + fmt(r));
      csv.out << fmt(r) << ',' << fmt(phi) << ',' << fmt(lr) << '\n';
    }
    csv.out << "# max_imag_residual: " << fmt(max_imag) << "\n";
  }
  {
    CsvFile csv(cfg.out + "_spectrum.csv", cmdline, cfg.seed);
    csv.out << "node_index,c_value_re,c_value_im\n";
    for (int m = 0; m < grid.node_count(); ++m) {
      if (!std::isfinite(f.c_vals[m]))
        fails.push_back("non-finite spectrum at node " + std::to_string(m));
      csv.out << m << ',' << fmt(f.c_vals[m]) << ',' << fmt(0.0) << '\n';
    }
    if (grid.node_count() != cfg.m)
      fails.push_back("spectrum row count != m");
  }
  {
    CsvFile csv(cfg.out + "_grid.csv", cmdline, cfg.seed);
    csv.out << "dim_index,node,weight\n";
    for (int m = 0; m < grid.m_per_dim; ++m)
      csv.out << 0 << ',' << fmt(grid.nodes[m][0]) << ','
              << fmt(grid.weights[m]) << '\n';
  }
  return finish("kernel-dump", fails);
}

// ------------------------------------------------------------- accuracy-sweep

// Two unit clusters separated by a gap R ([0,1] and [1+R, 2+R]). The gap
// decides which error term wins: the closest cross pair carries the
// mollification gap, which decays with R, while the farthest pair carries
// the frequency-rule phase error, which only grows mildly since the span
// stays R+2.
int cmd_accuracy_sweep(const RunConfig& cfg, const std::string& cmdline) {
  RadialKernel k = parse_kernel_spec(cfg.kernel_spec);
  TranslationMode mode = pick_translation(cfg, k);

  std::vector<std::string> fails;
  CsvFile csv(cfg.out, cmdline, cfg.seed);
  csv.out << "r,m,linf_error\n";
  for (double big_r : cfg.r_list) {
    PointSet src = generate_quasiuniform(
        cfg.n, 1, BoundingBox{Pt{0.0, 0.0}, Pt{1.0, 1.0}}, cfg.seed, 0.35);
    PointSet tgt = generate_quasiuniform(
        cfg.n, 1, BoundingBox{Pt{1.0 + big_r, 0.0}, Pt{2.0 + big_r, 1.0}},
        cfg.seed + 1, 0.35);
    std::vector<double> w(cfg.n);
    for (int j = 0; j < cfg.n; ++j)
      w[j] = 2.0 * uniform01(cfg.seed ^ 0x5eed, j) - 1.0;

    std::vector<double> exact(cfg.n, 0.0);
    for (int i = 0; i < cfg.n; ++i)
      for (int j = 0; j < cfg.n; ++j)
        exact[i] += w[j] * eval_kernel(k, dist(1, tgt.pts[i], src.pts[j]));

    std::vector<double> errs;
    for (int m : cfg.m_list) {
      QuadratureGrid grid = make_quadrature(cfg.sigma, m, 1);
      LowRankFactors f = translation_coefficients(k, grid, mode);
      double err = 0.0;
      for (int i = 0; i < cfg.n; ++i) {
        double u = 0.0;
        for (int j = 0; j < cfg.n; ++j)
          u += w[j] * lowrank_eval(f, tgt.pts[i], src.pts[j]);
        err = std::max(err, std::abs(u - exact[i]));
      }
      errs.push_back(err);
      csv.out << fmt(big_r) << ',' << cfg.m_list[errs.size() - 1] << ','
              << fmt(err) << '\n';
      if (!std::isfinite(err)) fails.push_back("non-finite error");
    }
    // Refining the frequency grid must not hurt while the rule error
    // still dominates; once the column saturates at the mollification
    // floor (within 2x of its best), the two error terms trade signs and
    // the column may wiggle.
    double floor = *std::min_element(errs.begin(), errs.end());
    for (std::size_t i = 1; i < errs.size(); ++i)
      if (errs[i] > 1.1 * errs[i - 1] && errs[i] > 2.0 * floor)
        fails.push_back("error grew with m at r=" + fmt(big_r) + ", m=" +
                        std::to_string(cfg.m_list[i]) + ": " + fmt(errs[i]) +
                        " > 1.1*" + fmt(errs[i - 1]));
  }
  return finish("accuracy-sweep", fails);
}

// --------------------------------------------------------------------- bench

MatvecMode parse_mode(const std::string& s) {
  if (s == "direct") return MatvecMode::direct;
  if (s == "single") return MatvecMode::single_level;
  if (s == "mlfmm") return MatvecMode::multilevel;
  throw std::invalid_argument("unknown mode " + s);
}

int cmd_bench(const RunConfig& cfg, const std::string& cmdline) {
  RadialKernel k = parse_kernel_spec(cfg.kernel_spec);
  std::vector<std::string> fails;
  CsvFile csv(cfg.out, cmdline, cfg.seed);
  csv.out << "mode,n,seconds,near_pairs,far_work\n";

  double elapsed = 0.0;
  for (const std::string& mode_name : cfg.modes) {
    MatvecMode mode = parse_mode(mode_name);
    // Growth exponents used only to predict the next size's cost before
    // spending it; deliberately above the expected asymptotics.
    double expo = mode == MatvecMode::direct         ? 2.2
                  : mode == MatvecMode::single_level ? 1.8
                                                     : 1.5;
    std::vector<ComplexityRow> rows;
    for (long long n : cfg.sizes) {
      if (!rows.empty()) {
        double predicted =
            rows.back().seconds *
            std::pow(static_cast<double>(n) / rows.back().n, expo) * cfg.reps;
        if (elapsed + predicted > cfg.budget_seconds) {
          csv.out << "# skipped " << mode_name << " n=" << n
                  << " predicted=" << fmt(predicted)
                  << "s elapsed=" << fmt(elapsed) << "s budget="
                  << fmt(cfg.budget_seconds) << "s\n";
          break;
        }
      }
      auto t0 = std::chrono::steady_clock::now();
      ComplexityTable t =
          complexity_probe(k, {n}, cfg.reps, mode, cfg.sigma, cfg.seed);
      elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                               t0)
                     .count();
      const ComplexityRow& row = t.rows[0];
      rows.push_back(row);
      csv.out << mode_name << ',' << row.n << ',' << fmt(row.seconds) << ','
              << row.near_pairs << ',' << row.far_work << '\n';
      if (!(row.seconds > 0.0) || !std::isfinite(row.seconds))
        fails.push_back("bad timing for " + mode_name + " n=" +
                        std::to_string(n));
    }
    if (rows.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (const auto& row : rows) {
        double x = std::log(static_cast<double>(row.n));
        double y = std::log(std::max(row.seconds, 1e-9));
        sx += x, sy += y, sxx += x * x, sxy += x * y;
      }
      int m = static_cast<int>(rows.size());
      double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      csv.out << "# slope " << mode_name << "=" << fmt(slope)
              << " rows=" << m << '\n';
      std::printf("slope %s=%.3f over %d sizes\n", mode_name.c_str(), slope,
                  m);
    } else {
      csv.out << "# slope " << mode_name << "=nan rows="
              << rows.size() << " (need >= 2 within budget)\n";
    }
  }
  return finish("bench", fails);
}

// ---------------------------------------------------------------- fmm-matvec

int cmd_fmm_matvec(const RunConfig& cfg, const std::string& cmdline) {
  RadialKernel k = parse_kernel_spec(cfg.kernel_spec);
  PointSet ps = read_points_csv(cfg.points_path, infer_dimension(cfg.points_path));
  std::vector<double> w = read_vector_csv(cfg.weights_path);
  if (static_cast<int>(w.size()) != ps.size())
    throw std::invalid_argument("weights length " + std::to_string(w.size()) +
                                " != point count " + std::to_string(ps.size()));
  if (!cfg.dump_expansions.empty() && cfg.mode != "mlfmm")
    throw std::invalid_argument("--dump-expansions needs --mode mlfmm");
  int n = ps.size();
  int m = cfg.m > 0 ? cfg.m : choose_truncation(n);

  SumResult res;
  if (cfg.mode == "direct") {
    res = direct_matvec(k, ps, w, false, cfg.sigma);
  } else if (cfg.mode == "single") {
    int level = cfg.levels > 0
                    ? cfg.levels
                    : std::max(2, static_cast<int>(std::lround(
                                      0.5 * std::log2(static_cast<double>(n)))));
    BoxTree tree = build_tree(ps, level);
    SumRequest req{k, cfg.sigma, &ps, w, m};
    res = fmm_matvec_single(req, tree);
  } else {
    int level = cfg.levels > 0
                    ? cfg.levels
                    : std::max(3, static_cast<int>(std::lround(std::log2(
                                      static_cast<double>(n) / 32.0))));
    if (level < 3)
      throw std::invalid_argument("mlfmm needs --levels >= 3");
    BoxTree tree = build_tree(ps, level);
    LevelGrids grids = make_level_grids(k, cfg.sigma, m, ps.d, level,
                                        GridMode::shared, cfg.stencil_k);
    if (!cfg.dump_expansions.empty()) {
      LevelExpansions mult = upsweep(tree, grids, ps, w);
      CsvFile csv(cfg.dump_expansions, cmdline, cfg.seed);
      csv.out << "level,box,node,coeff_re,coeff_im\n";
      for (std::size_t l = 0; l < mult.size(); ++l)
        for (const Expansion& e : mult[l])
          for (std::size_t node = 0; node < e.coeffs.size(); ++node)
            csv.out << e.level << ',' << e.box << ',' << node << ','
                    << fmt(e.coeffs[node].real()) << ','
                    << fmt(e.coeffs[node].imag()) << '\n';
    }
    SumRequest req{k, cfg.sigma, &ps, w, m};
    res = mlfmm_matvec(req, tree, grids);
  }

  std::vector<std::string> fails;
  CsvFile csv(cfg.out, cmdline, cfg.seed);
  csv.out << "# mode: " << cfg.mode << "\n";
  csv.out << "# near_pairs: " << res.stats.near_pairs << "\n";
  csv.out << "# far_work: " << res.stats.far_work << "\n";
  csv.out << "# max_imag_residual: " << fmt(res.stats.max_imag_residual)
          << "\n";
  for (double v : res.values) {
    if (!std::isfinite(v)) fails.push_back("non-finite output value");
    csv.out << fmt(v) << '\n';
  }
  return finish("fmm-matvec", fails);
}

// --------------------------------------------------------------------- solve

int cmd_solve(const RunConfig& cfg, const std::string& cmdline) {
  InterpolationProblem prob;
  prob.kernel = parse_kernel_spec(cfg.kernel_spec);
  PointSet ps =
      read_points_csv(cfg.points_path, infer_dimension(cfg.points_path));
  prob.ps = &ps;
  prob.rhs = read_vector_csv(cfg.rhs_path);
  prob.backend = cfg.backend == "dense"        ? Backend::dense
                 : cfg.backend == "single_fmm" ? Backend::single_fmm
                                               : Backend::mlfmm;
  prob.tol = cfg.tol;
  prob.max_iter = cfg.max_iter;
  prob.sigma = cfg.sigma;
  prob.m_per_dim = cfg.m;
  prob.leaf_level = cfg.levels;

  auto [lambda, stats] = solve_interpolation(prob);

  std::vector<std::string> fails;
  CsvFile csv(cfg.out, cmdline, cfg.seed);
  csv.out << "# backend: " << cfg.backend << "\n";
  csv.out << "# method: " << stats.method << "\n";
  csv.out << "# iterations: " << stats.iterations << "\n";
  csv.out << "# matvecs: " << stats.matvecs << "\n";
  csv.out << "# residual: " << fmt(stats.residual) << "\n";
  csv.out << "# converged: " << (stats.converged ? 1 : 0) << "\n";
  for (double v : lambda) {
    if (!std::isfinite(v)) fails.push_back("non-finite coefficient");
    csv.out << fmt(v) << '\n';
  }
  if (!stats.converged) fails.push_back("solver did not converge");
  return finish("solve", fails);
}

// --------------------------------------------------------------- collocate1d

int cmd_collocate1d(const RunConfig& cfg, const std::string& cmdline) {
  RadialKernel k = parse_kernel_spec(cfg.kernel_spec);
  std::vector<int> ns = parse_int_list(cfg.n_list);
  for (int n : ns)
    if (n < 5 || n > 1024)
      throw std::invalid_argument("collocation n out of range [5,1024]");

  std::vector<std::string> fails;
  CsvFile csv(cfg.out, cmdline, cfg.seed);
  csv.out << "n,rms\n";
  for (int n : ns) {
    CollocationResult r =
        solve_collocation_1d(n, k, cfg.bandlimited, cfg.sigma);
    csv.out << n << ',' << fmt(r.rms) << '\n';
    csv.out << "# n=" << n << " sigma_used=" << fmt(r.sigma_used)
            << " boundary_residual=" << fmt(r.boundary_residual) << '\n';
    if (!std::isfinite(r.rms)) fails.push_back("non-finite rms");
    // Boundary rows are identities, so the interpolant must vanish there
    // up to LU roundoff amplified by the conditioning; coefficient
    // cancellation on near-singular band matrices tracks the achieved rms
    // instead, so the gate is whichever is larger. A broken assembly
    // shows up as an O(1) boundary value either way.
    if (r.boundary_residual > std::max(1e-8, 2.0 * r.rms))
      fails.push_back("boundary residual " + fmt(r.boundary_residual) +
                      " at n=" + std::to_string(n));
  }
  return finish("collocate1d", fails);
}

// -------------------------------------------------------------------- tables

// Frozen references; indexing starts at K=5 / N=9.
constexpr double kTable5Ref[] = {0.0830,     0.0211,     0.0048,
                                 5.7199e-04, 8.1828e-05, 1.3111e-05,
                                 1.9350e-06, 1.5142e-07};
constexpr double kTable4Ref[] = {1.469348643e-04, 9.414500417e-05,
                                 2.806645307e-05, 1.823679202e-05,
                                 5.348123608e-06, 3.512156051e-06,
                                 1.007928224e-06};

int cmd_tables(const RunConfig& cfg, const std::string& cmdline) {
  std::vector<std::string> fails;
  {
    CsvFile csv(cfg.out_dir + "/table5.csv", cmdline, cfg.seed);
    csv.out << "k,sup_error,reference,pass\n";
    double prev = 0.0;
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
      double err = lagrange_phase_error(k);
      double ref = kTable5Ref[k - 5];
      bool ok = err < 5.0 * ref && err > ref / 5.0;
      if (k > cfg.k_min && err >= prev) {
        ok = false;
        fails.push_back("table5 not decreasing at k=" + std::to_string(k));
      }
      prev = err;
      if (!ok) fails.push_back("table5 row k=" + std::to_string(k) +
                               " outside x5 of reference");
      csv.out << k << ',' << fmt(err) << ',' << fmt(ref) << ','
              << (ok ? 1 : 0) << '\n';
    }
  }
  {
    RadialKernel k = parse_kernel_spec(cfg.kernel_spec);
    CsvFile csv(cfg.out_dir + "/table4.csv", cmdline, cfg.seed);
    csv.out << "n,rms_plain,rms_bandlimited,pass\n";
    double prev = 0.0;
    for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
      CollocationResult plain = solve_collocation_1d(n, k, false, 0.0);
      // Candidate bandwidths: the paper's fixed pi plus the two
      // separation-scaled choices. The reported band column is the best
      // RMS of the three (pi can beat the plain column outright: the
      // model solution sin(pi x) lies inside that band). The agreement
      // check instead uses sigma = 2 pi / q_X, the bandwidth at which the
      // band-limited matrix reproduces the plain one.
      double q = 0.5 / (n - 1);
      double best = std::numeric_limits<double>::infinity();
      double best_sigma = 0.0;
      double rms_matched = 0.0;
      for (double sigma : {kPi, 2.0 * kPi / q, 4.0 * kPi / q}) {
        CollocationResult band = solve_collocation_1d(n, k, true, sigma);
        if (band.rms < best) {
          best = band.rms;
          best_sigma = sigma;
        }
        if (sigma == 2.0 * kPi / q) rms_matched = band.rms;
      }
      double ref = kTable4Ref[n - 9];
      bool ok = plain.rms < 10.0 * ref && plain.rms > ref / 10.0;
      if (!ok) fails.push_back("table4 rms_plain n=" + std::to_string(n) +
                               " outside x10 of reference");
      // Two significant digits of agreement while the matrix stays
      // solvable past the mollification; at N=15 conditioning amplifies
      // the band-table noise beyond that.
      if (n <= 14 && std::abs(rms_matched - plain.rms) > 1e-2 * plain.rms) {
        ok = false;
        fails.push_back("table4 matched-band column off plain at n=" +
                        std::to_string(n));
      }
      if (n > cfg.n_min && plain.rms >= prev) {
        ok = false;
        fails.push_back("table4 rms_plain not decreasing at n=" +
                        std::to_string(n));
      }
      prev = plain.rms;
      csv.out << n << ',' << fmt(plain.rms) << ',' << fmt(best) << ','
              << (ok ? 1 : 0) << '\n';
      csv.out << "# n=" << n << " sigma_best=" << fmt(best_sigma)
              << " rms_sigma_matched=" << fmt(rms_matched) << '\n';
    }
  }
  return finish("tables", fails);
}

}  // namespace

int main(int argc, char** argv) {
  std::string cmdline;
  for (int i = 0; i < argc; ++i) {
    if (i) cmdline += ' ';
    cmdline += argv[i];
  }

  RunConfig cfg;
  CLI::App app{"band-limited kernel FMM driver"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--kernel", cfg.kernel_spec, "kernel spec, name:param=value");
    sub->add_option("--sigma", cfg.sigma, "frequency cutoff")
        ->check(CLI::Range(1e-6, 1e6));
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--threads", cfg.threads, "OpenMP threads (0: default)")
        ->check(CLI::Range(0, 256));
  };

  CLI::App* dump = app.add_subcommand(
      "kernel-dump", "kernel, low-rank kernel, spectrum, and grid CSVs");
  add_common(dump);
  dump->get_option("--kernel")->required();
  dump->add_option("--m", cfg.m, "frequency nodes")->check(CLI::Range(2, 16384));
  dump->add_option("--r-points", cfg.r_points, "r lattice size on [0,1]")
      ->check(CLI::Range(2, 100001));
  dump->add_option("--translation", cfg.translation,
                   "auto|spectral|fourier_series")
      ->check(CLI::IsMember({"auto", "spectral", "fourier_series"}));
  dump->add_option("--out", cfg.out, "output path prefix")->required();

  CLI::App* sweep = app.add_subcommand(
      "accuracy-sweep", "two-cluster low-rank vs direct error surface");
  add_common(sweep);
  sweep->get_option("--kernel")->required();
  sweep->add_option("--r-list", cfg.r_list, "cluster lengths");
  sweep->add_option("--m-list", cfg.m_list, "truncation numbers");
  sweep->add_option("--n", cfg.n, "points per cluster")
      ->check(CLI::Range(2, 4096));
  sweep->add_option("--translation", cfg.translation,
                    "auto|spectral|fourier_series")
      ->check(CLI::IsMember({"auto", "spectral", "fourier_series"}));
  sweep->add_option("--out", cfg.out, "output CSV")->required();

  CLI::App* bench = app.add_subcommand("bench", "matvec complexity benchmark");
  add_common(bench);
  bench->add_option("--modes", cfg.modes, "subset of direct single mlfmm")
      ->check(CLI::IsMember({"direct", "single", "mlfmm"}));
  bench->add_option("--sizes", cfg.sizes, "ascending point counts");
  bench->add_option("--reps", cfg.reps, "repetitions, best kept")
      ->check(CLI::Range(1, 100));
  bench->add_option("--budget-seconds", cfg.budget_seconds,
                    "refuse sizes predicted to exceed this")
      ->check(CLI::Range(1e-3, 86400.0));
  bench->add_option("--out", cfg.out, "output CSV")->required();

  CLI::App* matvec = app.add_subcommand("fmm-matvec", "one kernel summation");
  add_common(matvec);
  matvec->get_option("--kernel")->required();
  matvec->add_option("--points", cfg.points_path, "points CSV, x[,y] lines")
      ->required()
      ->check(CLI::ExistingFile);
  matvec->add_option("--weights", cfg.weights_path, "one weight per line")
      ->required()
      ->check(CLI::ExistingFile);
  matvec->add_option("--mode", cfg.mode, "single|direct|mlfmm")
      ->check(CLI::IsMember({"single", "direct", "mlfmm"}));
  matvec->add_option("--m", cfg.m, "frequency nodes (0: sqrt-N rule)")
      ->check(CLI::Range(0, 16384));
  matvec->add_option("--levels", cfg.levels, "leaf level (0: from N)")
      ->check(CLI::Range(0, 12));
  matvec->add_option("--stencil-k", cfg.stencil_k, "interpolation stencil")
      ->check(CLI::Range(2, 64));
  matvec->add_option("--dump-expansions", cfg.dump_expansions,
                     "write per-level multipole coefficients (mlfmm)");
  matvec->add_option("--out", cfg.out, "output CSV")->required();

  CLI::App* solve = app.add_subcommand("solve", "fit interpolation weights");
  add_common(solve);
  solve->get_option("--kernel")->required();
  solve->add_option("--points", cfg.points_path, "points CSV")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--rhs", cfg.rhs_path, "one value per line")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--backend", cfg.backend, "dense|single_fmm|mlfmm")
      ->check(CLI::IsMember({"dense", "single_fmm", "mlfmm"}));
  solve->add_option("--tol", cfg.tol, "relative residual target")
      ->check(CLI::Range(1e-15, 1.0));
  solve->add_option("--max-iter", cfg.max_iter, "iteration cap")
      ->check(CLI::Range(1, 100000));
  solve->add_option("--m", cfg.m, "frequency nodes (0: sqrt-N rule)")
      ->check(CLI::Range(0, 16384));
  solve->add_option("--levels", cfg.levels, "leaf level (0: from N)")
      ->check(CLI::Range(0, 12));
  solve->add_option("--out", cfg.out, "coefficients CSV")->required();

  CLI::App* coll = app.add_subcommand("collocate1d",
                                      "two-point collocation RMS sweep");
  add_common(coll);
  coll->add_option("--n", cfg.n_list, "node counts: A, A..B, or A,B,C");
  coll->add_flag("--bandlimited", cfg.bandlimited,
                 "collocate with the band-limited kernel");
  coll->add_option("--out", cfg.out, "output CSV")->required();

  CLI::App* tables = app.add_subcommand("tables", "reference table CSVs");
  add_common(tables);
  tables->add_option("--out-dir", cfg.out_dir, "directory for table CSVs");
  tables->add_option("--k-min", cfg.k_min)->check(CLI::Range(5, 12));
  tables->add_option("--k-max", cfg.k_max)->check(CLI::Range(5, 12));
  tables->add_option("--n-min", cfg.n_min)->check(CLI::Range(9, 15));
  tables->add_option("--n-max", cfg.n_max)->check(CLI::Range(9, 15));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    json j{{"error", e.what()}, {"command", "parse"}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
    return 2;
  }

  // Per-command defaults that CLI11's shared bindings cannot express:
  // dump wants a fixed grid, bench and the table commands have canonical
  // kernels, and solve defers the sigma policy to the library.
  if (dump->parsed() && dump->count("--m") == 0) cfg.m = 128;
  if (bench->parsed() && bench->count("--kernel") == 0)
    cfg.kernel_spec = "imq:c=1";
  if ((coll->parsed() || tables->parsed()) && cfg.kernel_spec.empty())
    cfg.kernel_spec = "mq:c=1";
  if (solve->parsed() && solve->count("--sigma") == 0) cfg.sigma = 0.0;
  if (tables->parsed() && (cfg.k_max < cfg.k_min || cfg.n_max < cfg.n_min)) {
    json j{{"error", "descending table range"}, {"command", "tables"}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
    return 2;
  }

  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  try {
    if (dump->parsed()) return cmd_kernel_dump(cfg, cmdline);
    if (sweep->parsed()) return cmd_accuracy_sweep(cfg, cmdline);
    if (bench->parsed()) return cmd_bench(cfg, cmdline);
    if (matvec->parsed()) return cmd_fmm_matvec(cfg, cmdline);
    if (solve->parsed()) return cmd_solve(cfg, cmdline);
    if (coll->parsed()) return cmd_collocate1d(cfg, cmdline);
    if (tables->parsed()) return cmd_tables(cfg, cmdline);
  } catch (const accuracy_error& e) {
    json j{{"error", e.what()},
           {"achieved", e.achieved()},
           {"command", cmdline}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
    return 1;
  } catch (const std::exception& e) {
    json j{{"error", e.what()}, {"command", cmdline}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
    return 2;
  }
  return 2;
}
