#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "oassign/geometry.hpp"
#include "oassign/rng.hpp"
#include "oracles.hpp"

using namespace oassign;

namespace {

RotatedBox random_box(Rng& rng, double pos = 100.0, double max_side = 60.0) {
  return canonicalize(RotatedBox(rng.uniform(-pos, pos), rng.uniform(-pos, pos),
                                 rng.uniform(0.5, max_side),
                                 rng.uniform(0.5, max_side),
                                 rng.uniform(-4.0, 4.0)));
}

// Same rectangle as a point set, tolerating the (w,h,theta)/(h,w,theta+pi/2)
// parameter ambiguity.
bool same_point_set(const RotatedBox& a, const RotatedBox& b, double tol) {
  Polygon va = box_vertices(a), vb = box_vertices(b);
  for (const Vec2& p : va) {
    bool matched = false;
    for (const Vec2& q : vb) {
      if (std::abs(p.x - q.x) <= tol && std::abs(p.y - q.y) <= tol) {
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("canonicalize maps theta into [-pi/2, pi/2)") {
  SECTION("already canonical is untouched") {
    RotatedBox b(1.0, 2.0, 4.0, 2.0, 0.25);
    RotatedBox c = canonicalize(b);
    CHECK(c.cx == 1.0);
    CHECK(c.w == 4.0);
    CHECK(c.h == 2.0);
    CHECK(c.theta == 0.25);
  }
  SECTION("pi/2 boundary folds by swapping extents") {
    RotatedBox c = canonicalize(RotatedBox(0, 0, 4, 2, kHalfPi));
    CHECK(c.w == Catch::Approx(2.0));
    CHECK(c.h == Catch::Approx(4.0));
    CHECK(c.theta == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("-pi/2 boundary folds the same way") {
    RotatedBox c = canonicalize(RotatedBox(0, 0, 4, 2, -kHalfPi));
    CHECK(c.w == Catch::Approx(2.0));
    CHECK(c.h == Catch::Approx(4.0));
    CHECK(c.theta == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("full-pi rotation is the identity orientation") {
    RotatedBox c = canonicalize(RotatedBox(0, 0, 4, 2, kPi));
    CHECK(c.w == Catch::Approx(4.0));
    CHECK(c.h == Catch::Approx(2.0));
    CHECK(c.theta == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("idempotent and in-range on random boxes") {
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
      RotatedBox b(rng.uniform(-10, 10), rng.uniform(-10, 10),
                   rng.uniform(0.5, 20), rng.uniform(0.5, 20),
                   rng.uniform(-10, 10));
      RotatedBox c = canonicalize(b);
      REQUIRE(c.theta >= -kHalfPi);
      REQUIRE(c.theta < kHalfPi);
      RotatedBox c2 = canonicalize(c);
      CHECK(c2.w == c.w);
      CHECK(c2.h == c.h);
      CHECK(c2.theta == c.theta);
      CHECK(same_point_set(b, c, 1e-7));
    }
  }
  SECTION("degenerate extents are rejected") {
    CHECK_THROWS_AS(RotatedBox(0, 0, 0.0, 1.0, 0.0), DegenerateBox);
    CHECK_THROWS_AS(RotatedBox(0, 0, 1.0, -2.0, 0.0), DegenerateBox);
    CHECK_THROWS_AS(RotatedBox(0, 0, 1e-7, 1.0, 0.0), DegenerateBox);
  }
}

TEST_CASE("box_vertices emits ccw corners around the center") {
  SECTION("unit-like square") {
    Polygon v = box_vertices(RotatedBox(0, 0, 2, 2, 0));
    REQUIRE(v.size() == 4);
    CHECK(shoelace2(v) > 0.0);
    CHECK(polygon_area(v) == Catch::Approx(4.0));
  }
  SECTION("45-degree square lands on the axes") {
    Polygon v = box_vertices(RotatedBox(0, 0, 2, 2, kPi / 4));
    double r = std::sqrt(2.0);
    bool found = false;
    for (const Vec2& p : v) {
      if (std::abs(p.x) < 1e-12 && std::abs(p.y - r) < 1e-12) found = true;
    }
    CHECK(found);
  }
  SECTION("centroid equals the box center, orientation ccw, area w*h") {
    Rng rng(11);
    for (int i = 0; i < 300; ++i) {
      RotatedBox b = random_box(rng);
      Polygon v = box_vertices(b);
      Vec2 centroid = 0.25 * (v[0] + v[1] + v[2] + v[3]);
      CHECK(centroid.x == Catch::Approx(b.cx).margin(1e-9));
      CHECK(centroid.y == Catch::Approx(b.cy).margin(1e-9));
      CHECK(shoelace2(v) > 0.0);
      CHECK(polygon_area(v) == Catch::Approx(b.w * b.h).epsilon(1e-9));
    }
  }
}

TEST_CASE("box_to_gaussian matches the spectral definition") {
  SECTION("axis-aligned square gives the identity") {
    Gaussian2 g = box_to_gaussian(RotatedBox(0, 0, 2, 2, 0));
    CHECK(g.mu.x == 0.0);
    CHECK(g.sigma.a == Catch::Approx(1.0));
    CHECK(g.sigma.b == 0.0);
    CHECK(g.sigma.d == Catch::Approx(1.0));
  }
  SECTION("rotation permutes the diagonal") {
    Gaussian2 g = box_to_gaussian(canonicalize(RotatedBox(1, -2, 4, 2, kHalfPi)));
    CHECK(g.mu.x == 1.0);
    CHECK(g.mu.y == -2.0);
    CHECK(g.sigma.a == Catch::Approx(1.0).margin(1e-9));
    CHECK(g.sigma.d == Catch::Approx(4.0).margin(1e-9));
    CHECK(std::abs(g.sigma.b) < 1e-9);
  }
  SECTION("eigenvalues are w^2/4 and h^2/4; symmetry is exact") {
    Rng rng(13);
    for (int i = 0; i < 300; ++i) {
      RotatedBox b = random_box(rng);
      Gaussian2 g = box_to_gaussian(b);
      CHECK(g.sigma.b == g.sigma.c);
      SymEigen2 e = eigen_symmetric(g.sigma);
      double big = std::max(b.w, b.h), small = std::min(b.w, b.h);
      CHECK(e.l1 == Catch::Approx(big * big / 4.0).epsilon(1e-9));
      CHECK(e.l2 == Catch::Approx(small * small / 4.0).epsilon(1e-9));
      CHECK(det(g.sigma) ==
            Catch::Approx(b.w * b.w * b.h * b.h / 16.0).epsilon(1e-9));
    }
  }
  SECTION("canonicalization-equivalent boxes give the same gaussian") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
      RotatedBox b(rng.uniform(-10, 10), rng.uniform(-10, 10),
                   rng.uniform(1, 20), rng.uniform(1, 20), rng.uniform(-9, 9));
      Gaussian2 g1 = box_to_gaussian(b);
      Gaussian2 g2 = box_to_gaussian(canonicalize(b));
      CHECK(g1.sigma.a == Catch::Approx(g2.sigma.a).margin(1e-9));
      CHECK(g1.sigma.b == Catch::Approx(g2.sigma.b).margin(1e-9));
      CHECK(g1.sigma.d == Catch::Approx(g2.sigma.d).margin(1e-9));
    }
  }
}

TEST_CASE("rotated_iou") {
  SECTION("identical boxes score 1") {
    Rng rng(19);
    for (int i = 0; i < 100; ++i) {
      RotatedBox b = random_box(rng);
      CHECK(rotated_iou(b, b) == Catch::Approx(1.0).margin(1e-9));
    }
  }
  SECTION("disjoint boxes score exactly 0") {
    RotatedBox a(0, 0, 2, 2, 0.3);
    RotatedBox b(100, 100, 2, 2, -0.7);
    CHECK(rotated_iou(a, b) == 0.0);
  }
  SECTION("half-shifted unit squares score 1/3") {
    RotatedBox a(0, 0, 1, 1, 0);
    RotatedBox b(0.5, 0, 1, 1, 0);
    CHECK(rotated_iou(a, b) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SECTION("square against its own 45-degree rotation") {
    RotatedBox a(0, 0, 2, 2, 0);
    RotatedBox b(0, 0, 2, 2, kPi / 4);
    CHECK(rotated_iou(a, b) == Catch::Approx(0.7071).margin(1e-3));
  }
  SECTION("containment equals the area ratio") {
    RotatedBox outer(0, 0, 10, 6, 0.5);
    RotatedBox inner(0, 0, 5, 3, 0.5);
    CHECK(rotated_iou(outer, inner) == Catch::Approx(0.25).epsilon(1e-12));
  }
  SECTION("symmetric in its arguments") {
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
      RotatedBox a = random_box(rng, 10.0, 20.0);
      RotatedBox b = random_box(rng, 10.0, 20.0);
      CHECK(rotated_iou(a, b) == rotated_iou(b, a));
    }
  }
  SECTION("invariant under rigid motion") {
    Rng rng(29);
    for (int i = 0; i < 100; ++i) {
      RotatedBox a = random_box(rng, 5.0, 10.0);
      RotatedBox b = random_box(rng, 5.0, 10.0);
      double phi = rng.uniform(-1.5, 1.5);
      double tx = rng.uniform(-50, 50), ty = rng.uniform(-50, 50);
      double c = std::cos(phi), s = std::sin(phi);
      auto move = [&](const RotatedBox& r) {
        return canonicalize(RotatedBox(c * r.cx - s * r.cy + tx,
                                       s * r.cx + c * r.cy + ty, r.w, r.h,
                                       r.theta + phi));
      };
      CHECK(rotated_iou(move(a), move(b)) ==
            Catch::Approx(rotated_iou(a, b)).margin(1e-9));
    }
  }
  SECTION("agrees with the Monte-Carlo oracle") {
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
      RotatedBox a = random_box(rng, 4.0, 10.0);
      RotatedBox b = random_box(rng, 4.0, 10.0);
      double mc = oracle::mc_iou(a, b, 200000, 1000 + i);
      CHECK(rotated_iou(a, b) == Catch::Approx(mc).margin(0.015));
    }
  }
}

TEST_CASE("min_area_rect") {
  SECTION("recovers an axis-aligned rectangle exactly") {
    std::vector<Vec2> pts = {{0, 0}, {10, 0}, {10, 5}, {0, 5}};
    RotatedBox r = min_area_rect(pts);
    CHECK(r.cx == Catch::Approx(5.0));
    CHECK(r.cy == Catch::Approx(2.5));
    CHECK(r.w == Catch::Approx(10.0));
    CHECK(r.h == Catch::Approx(5.0));
    CHECK(r.theta == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("inverts box_vertices up to the point set") {
    Rng rng(37);
    for (int i = 0; i < 300; ++i) {
      RotatedBox b = random_box(rng);
      Polygon v = box_vertices(b);
      RotatedBox r = min_area_rect(v);
      CHECK(same_point_set(b, r, 1e-6));
      CHECK(r.area() == Catch::Approx(b.area()).epsilon(1e-9));
    }
  }
  SECTION("matches the exhaustive oracle area on random clouds") {
    Rng rng(41);
    for (int i = 0; i < 60; ++i) {
      int n = 3 + static_cast<int>(rng.next_unit() * 12);
      std::vector<Vec2> pts;
      for (int j = 0; j < n; ++j) {
        pts.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30)});
      }
      double brute = oracle::brute_min_rect_area(pts);
      RotatedBox r = min_area_rect(pts);
      CHECK(r.area() == Catch::Approx(brute).epsilon(1e-9));
      // every input point inside (with slack)
      for (const Vec2& p : pts) {
        CHECK(oracle::point_in_box(p.x, p.y,
                                   RotatedBox(r.cx, r.cy, r.w + 1e-6,
                                              r.h + 1e-6, r.theta)));
      }
    }
  }
  SECTION("collinear or insufficient input is rejected") {
    std::vector<Vec2> two = {{0, 0}, {1, 1}};
    CHECK_THROWS_AS(min_area_rect(two), CollinearInput);
    std::vector<Vec2> line = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    CHECK_THROWS_AS(min_area_rect(line), CollinearInput);
  }
}

TEST_CASE("matrix helpers") {
  SECTION("inverse and determinant") {
    Mat2 m{3, 1, 1, 2};
    Mat2 inv = inverse(m);
    Mat2 prod = m * inv;
    CHECK(prod.a == Catch::Approx(1.0).margin(1e-12));
    CHECK(prod.b == Catch::Approx(0.0).margin(1e-12));
    CHECK(prod.d == Catch::Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(inverse(Mat2{1, 1, 1, 1}), SingularCovariance);
  }
  SECTION("sqrt_spd squares back") {
    Rng rng(43);
    for (int i = 0; i < 200; ++i) {
      RotatedBox b = random_box(rng);
      Mat2 m = box_to_gaussian(b).sigma;
      Mat2 r = sqrt_spd(m);
      Mat2 sq = r * r;
      CHECK(sq.a == Catch::Approx(m.a).margin(1e-8 * (1 + std::abs(m.a))));
      CHECK(sq.b == Catch::Approx(m.b).margin(1e-8 * (1 + std::abs(m.b))));
      CHECK(sq.d == Catch::Approx(m.d).margin(1e-8 * (1 + std::abs(m.d))));
      CHECK(r.b == r.c);
    }
  }
}
