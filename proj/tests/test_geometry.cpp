#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "blfmm/geometry.hpp"

using namespace blfmm;

namespace {

PointSet make_1d(std::vector<double> xs) {
  PointSet ps;
  ps.d = 1;
  for (double x : xs) ps.pts.push_back(Pt{x, 0.0});
  return ps;
}

// Brute-force oracle for separation_distance.
double min_gap_allpairs(const PointSet& ps) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ps.size(); ++i)
    for (int j = i + 1; j < ps.size(); ++j)
      best = std::min(best, dist(ps.d, ps.pts[i], ps.pts[j]));
  return 0.5 * best;
}

}  // namespace

TEST_CASE("mesh norm: equispaced and single-point hand cases") {
  // 5 points spacing 0.25 incl endpoints; probe 1024 hits the midpoints.
  auto ps = make_1d({0.0, 0.25, 0.5, 0.75, 1.0});
  double h = mesh_norm(ps, 1024);
  CHECK(h == doctest::Approx(0.125).epsilon(1e-12));
  // Bracket h~ <= h <= h~ + probe cell diagonal.
  CHECK(h <= 0.125);
  CHECK(0.125 <= h + 1.0 / 1024);

  auto one = make_1d({0.5});
  CHECK(mesh_norm(one, 64) == doctest::Approx(0.5).epsilon(1e-12));

  PointSet ctr;
  ctr.d = 2;
  ctr.pts.push_back(Pt{0.5, 0.5});
  CHECK(mesh_norm(ctr, 64) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("mesh norm: bracketing against a 10x finer probe") {
  for (int d : {1, 2}) {
    auto ps = generate_quasiuniform(500, d, BoundingBox{}, 42, 0.4);
    double coarse = mesh_norm(ps, 64);
    double fine = mesh_norm(ps, 640);
    // Coarse probe nodes are a subset of the fine ones.
    CHECK(fine >= coarse);
    double diag = std::sqrt(static_cast<double>(d)) / 64.0;
    CHECK(fine <= coarse + diag);
  }
}

TEST_CASE("mesh norm: argument validation") {
  PointSet empty;
  CHECK_THROWS_AS(mesh_norm(empty, 64), std::invalid_argument);
  auto ps = make_1d({0.5});
  CHECK_THROWS_AS(mesh_norm(ps, 63), std::invalid_argument);
}

TEST_CASE("separation distance: hand cases") {
  CHECK(separation_distance(make_1d({0.0, 1.0, 3.0})) == 0.5);
  CHECK(separation_distance(make_1d({0.0, 0.25, 0.5, 0.75, 1.0})) == 0.125);

  CHECK_THROWS_AS(separation_distance(make_1d({0.5})),
                  std::invalid_argument);
  CHECK_THROWS_AS(separation_distance(make_1d({0.3, 0.7, 0.3})),
                  std::invalid_argument);
}

TEST_CASE("separation distance: bucketed path matches all-pairs") {
  // N > 4096 exercises the grid buckets.
  for (int d : {1, 2}) {
    auto ps = generate_quasiuniform(5000, d, BoundingBox{}, 7, 0.6);
    CHECK(separation_distance(ps) == min_gap_allpairs(ps));
  }

  // Duplicates must be caught on the bucketed path too.
  auto ps = generate_quasiuniform(5000, 1, BoundingBox{}, 7, 0.6);
  ps.pts.push_back(ps.pts[123]);
  CHECK_THROWS_AS(separation_distance(ps), std::invalid_argument);
}

TEST_CASE("quasi-uniform generator: lattice, determinism, jitter bound") {
  // jitter=0 is the exact cell-centered lattice.
  auto lat = generate_quasiuniform(8, 1, BoundingBox{}, 0, 0.0);
  REQUIRE(lat.size() == 8);
  for (int i = 0; i < 8; ++i)
    CHECK(lat.pts[i][0] == doctest::Approx((i + 0.5) / 8.0).epsilon(1e-15));
  CHECK(mesh_norm(lat, 1024) / separation_distance(lat) ==
        doctest::Approx(1.0).epsilon(1e-10));

  // d=2, n=k^2: corner-to-center ratio sqrt(2), below the asserted cap 2.
  auto lat2 = generate_quasiuniform(16, 2, BoundingBox{}, 0, 0.0);
  REQUIRE(lat2.size() == 16);
  double ratio2 = mesh_norm(lat2, 256) / separation_distance(lat2);
  CHECK(ratio2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(ratio2 <= 2.0);

  // d=2 with non-square n takes the first n row-major cells.
  auto part = generate_quasiuniform(10, 2, BoundingBox{}, 0, 0.0);
  REQUIRE(part.size() == 10);
  CHECK(part.pts[9][0] == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(part.pts[9][1] == doctest::Approx(0.375).epsilon(1e-15));

  auto a = generate_quasiuniform(300, 2, BoundingBox{}, 99, 0.5);
  auto b = generate_quasiuniform(300, 2, BoundingBox{}, 99, 0.5);
  auto c = generate_quasiuniform(300, 2, BoundingBox{}, 100, 0.5);
  bool same = true, differs = false;
  for (int i = 0; i < 300; ++i) {
    same = same && a.pts[i] == b.pts[i];
    differs = differs || a.pts[i] != c.pts[i];
  }
  CHECK(same);
  CHECK(differs);

  // All points inside the domain.
  for (const auto& p : a.pts) {
    CHECK(p[0] >= a.domain.lo[0]);
    CHECK(p[0] <= a.domain.hi[0]);
    CHECK(p[1] >= a.domain.lo[1]);
    CHECK(p[1] <= a.domain.hi[1]);
  }

  // Quasi-uniformity ratio within (1+2*jitter)/(1-jitter) for d=1. The
  // probe must resolve the 1e-3 spacing for the slack term to be small.
  auto q = generate_quasiuniform(1000, 1, BoundingBox{}, 3, 0.3);
  double h = mesh_norm(q, 1 << 20) + 1.0 / (1 << 20);
  CHECK(h / separation_distance(q) <= 1.6 / 0.7);

  CHECK_THROWS_AS(generate_quasiuniform(0, 1, BoundingBox{}, 0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_quasiuniform(4, 3, BoundingBox{}, 0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_quasiuniform(4, 1, BoundingBox{}, 0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_quasiuniform(4, 1, BoundingBox{}, 0, -0.1),
                  std::invalid_argument);
}

TEST_CASE("points csv: bit-faithful round-trip and comment skipping") {
  for (int d : {1, 2}) {
    auto ps = generate_quasiuniform(37, d, BoundingBox{}, 11, 0.4);
    std::string path = "test_geometry_points.csv";
    write_points_csv(path, ps);
    auto back = read_points_csv(path, d);
    REQUIRE(back.size() == ps.size());
    for (int i = 0; i < ps.size(); ++i)
      for (int k = 0; k < d; ++k) CHECK(back.pts[i][k] == ps.pts[i][k]);
    // Recovered domain must contain every point.
    for (const auto& p : back.pts)
      for (int k = 0; k < d; ++k) {
        CHECK(p[k] >= back.domain.lo[k]);
        CHECK(p[k] <= back.domain.hi[k]);
      }
  }

  {
    std::ofstream out("test_geometry_comment.csv");
    out << "# header line\n0.5\n\n0.75\n";
  }
  auto ps = read_points_csv("test_geometry_comment.csv", 1);
  REQUIRE(ps.size() == 2);
  CHECK(ps.pts[0][0] == 0.5);
  CHECK(ps.pts[1][0] == 0.75);

  CHECK_THROWS(read_points_csv("no_such_file.csv", 1));
}

TEST_CASE("box tree: 1d four-box hand enumeration") {
  auto ps = generate_quasiuniform(16, 1, BoundingBox{}, 0, 0.0);
  auto t = build_tree(ps, 2);

  CHECK(t.box_count(2) == 4);
  CHECK(t.neighbors[2][0] == std::vector<int>{0, 1});
  CHECK(t.neighbors[2][1] == std::vector<int>{0, 1, 2});
  CHECK(t.neighbors[2][2] == std::vector<int>{1, 2, 3});
  CHECK(t.neighbors[2][3] == std::vector<int>{2, 3});

  // Children of the parent's neighbors minus own neighbors. Box 2 is not
  // adjacent to box 0, so it must appear (otherwise the pair (0,2) would
  // never be handled: level 1 has only mutual neighbors).
  CHECK(t.interaction[2][0] == std::vector<int>{2, 3});
  CHECK(t.interaction[2][1] == std::vector<int>{3});
  CHECK(t.interaction[2][2] == std::vector<int>{0});
  CHECK(t.interaction[2][3] == std::vector<int>{0, 1});

  CHECK(t.neighbors[1][0] == std::vector<int>{0, 1});
  CHECK(t.interaction[1][0].empty());
  CHECK(t.interaction[1][1].empty());
  CHECK(t.neighbors[0][0] == std::vector<int>{0});

  CHECK(t.side(2, 0) == 0.25);
  CHECK(t.center(2, 1)[0] == doctest::Approx(0.375).epsilon(1e-15));
}

TEST_CASE("box tree: 2d sixteen-box counts and separation") {
  auto ps = generate_quasiuniform(64, 2, BoundingBox{}, 0, 0.0);
  auto t = build_tree(ps, 2);
  CHECK(t.box_count(2) == 16);

  // id = ix*4 + iy. Corner box (0,0), interior box (1,1).
  CHECK(t.neighbors[2][0] == std::vector<int>{0, 1, 4, 5});
  CHECK(t.neighbors[2][5].size() == 9);
  CHECK(t.interaction[2][0].size() == 12);
  CHECK(t.interaction[2][5].size() == 7);

  for (int b = 0; b < 16; ++b) {
    CHECK(t.interaction[2][b].size() <= 27);
    for (int m : t.interaction[2][b]) {
      double dcc = dist(2, t.center(2, b), t.center(2, m));
      CHECK(dcc >= 2.0 * t.side(2, 0) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("box tree: interaction symmetry") {
  auto ps1 = generate_quasiuniform(64, 1, BoundingBox{}, 0, 0.0);
  auto t1 = build_tree(ps1, 4);
  auto ps2 = generate_quasiuniform(64, 2, BoundingBox{}, 0, 0.0);
  auto t2 = build_tree(ps2, 3);
  for (const auto& t : {t1, t2}) {
    for (int l = 2; l <= t.leaf_level; ++l) {
      for (int b = 0; b < t.box_count(l); ++b) {
        for (int m : t.interaction[l][b]) {
          const auto& rev = t.interaction[l][m];
          CHECK(std::find(rev.begin(), rev.end(), b) != rev.end());
        }
      }
    }
  }
}

TEST_CASE("box tree: every leaf pair handled exactly once") {
  // For leaf boxes a, b: either b is a leaf neighbor of a, or exactly one
  // ancestor level has anc(b) in the interaction list of anc(a). This is
  // the partition the multilevel far-field traversal relies on.
  auto ps1 = generate_quasiuniform(64, 1, BoundingBox{}, 0, 0.0);
  auto ps2 = generate_quasiuniform(64, 2, BoundingBox{}, 0, 0.0);
  for (int d : {1, 2}) {
    int leaf = d == 1 ? 4 : 3;
    auto t = build_tree(d == 1 ? ps1 : ps2, leaf);
    int nb = t.box_count(leaf);
    for (int a = 0; a < nb; ++a) {
      for (int b = 0; b < nb; ++b) {
        const auto& nbrs = t.neighbors[leaf][a];
        int handled =
            std::find(nbrs.begin(), nbrs.end(), b) != nbrs.end() ? 1 : 0;
        int aa = a, bb = b;
        for (int l = leaf; l >= 2; --l) {
          const auto& il = t.interaction[l][aa];
          if (std::find(il.begin(), il.end(), bb) != il.end()) ++handled;
          aa = t.parent(l, aa);
          bb = t.parent(l, bb);
        }
        CHECK(handled == 1);
      }
    }
  }
}

TEST_CASE("box tree: binning partition and leaf_of") {
  auto ps = generate_quasiuniform(777, 2, BoundingBox{}, 5, 0.5);
  auto t = build_tree(ps, 3);

  std::vector<int> seen(ps.size(), 0);
  int total = 0;
  for (int b = 0; b < t.box_count(3); ++b) {
    total += static_cast<int>(t.leaf_points[b].size());
    for (int p : t.leaf_points[b]) {
      ++seen[p];
      CHECK(t.leaf_of(ps.pts[p]) == b);
    }
  }
  CHECK(total == 777);
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));

  // Hand cases on the unit box, leaf level 2 (4x4, id = ix*4 + iy).
  auto t2 = build_tree(ps, 2);
  CHECK(t2.leaf_of(Pt{0.3, 0.8}) == 7);
  CHECK(t2.leaf_of(Pt{1.0, 1.0}) == 15);  // clamped at the wall
  CHECK(t2.leaf_of(Pt{0.0, 0.0}) == 0);
}

TEST_CASE("box tree: parent/children consistency") {
  auto ps = generate_quasiuniform(64, 2, BoundingBox{}, 0, 0.0);
  auto t = build_tree(ps, 3);
  for (int l = 0; l < t.leaf_level; ++l) {
    std::set<int> covered;
    for (int b = 0; b < t.box_count(l); ++b) {
      auto kids = t.children(l, b);
      CHECK(static_cast<int>(kids.size()) == (1 << t.d));
      for (int c : kids) {
        CHECK(t.parent(l + 1, c) == b);
        covered.insert(c);
      }
    }
    CHECK(static_cast<int>(covered.size()) == t.box_count(l + 1));
  }
  CHECK(t.children(t.leaf_level, 0).empty());

  // Child boxes sit inside the parent and sides halve downward.
  for (int l = 1; l <= t.leaf_level; ++l)
    CHECK(t.side(l - 1, 0) == 2.0 * t.side(l, 0));
}

TEST_CASE("box tree: center displacement chain is exact") {
  // (x_i - x_a) + (x_a - x_b) + (x_b - x_j) recovers x_i - x_j.
  auto ps = generate_quasiuniform(64, 2, BoundingBox{}, 9, 0.5);
  auto t = build_tree(ps, 2);
  Pt xi = ps.pts[3], xj = ps.pts[40];
  Pt xa = t.center(2, t.leaf_of(xi)), xb = t.center(2, t.leaf_of(xj));
  for (int k = 0; k < 2; ++k) {
    double chain = (xi[k] - xa[k]) + (xa[k] - xb[k]) + (xb[k] - xj[k]);
    CHECK(chain == doctest::Approx(xi[k] - xj[k]).epsilon(1e-12));
  }
}

TEST_CASE("box tree: argument validation") {
  auto ps = generate_quasiuniform(8, 1, BoundingBox{}, 0, 0.0);
  CHECK_THROWS_AS(build_tree(ps, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_tree(ps, 25), std::invalid_argument);
  auto ps2 = generate_quasiuniform(8, 2, BoundingBox{}, 0, 0.0);
  CHECK_THROWS_AS(build_tree(ps2, 13), std::invalid_argument);
}
