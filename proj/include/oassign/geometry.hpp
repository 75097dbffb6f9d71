#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "oassign/errors.hpp"

namespace oassign {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kHalfPi = kPi / 2.0;

// Extents below this are treated as degenerate.
inline constexpr double kMinExtent = 1e-6;
// Covariance determinants at or below this are treated as singular.
inline constexpr double kMinDet = 1e-12;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 v) { return dot(v, v); }
inline double norm(Vec2 v) { return std::sqrt(norm2(v)); }

// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  static Mat2 identity() { return {}; }
  static Mat2 diag(double x, double y) { return {x, 0.0, 0.0, y}; }
};

inline Mat2 operator+(const Mat2& m, const Mat2& n) {
  return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
}
inline Mat2 operator-(const Mat2& m, const Mat2& n) {
  return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
}
inline Mat2 operator*(double s, const Mat2& m) {
  return {s * m.a, s * m.b, s * m.c, s * m.d};
}
inline Mat2 operator*(const Mat2& m, const Mat2& n) {
  return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
          m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}
inline Vec2 operator*(const Mat2& m, Vec2 v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}

inline double det(const Mat2& m) { return m.a * m.d - m.b * m.c; }
inline double trace(const Mat2& m) { return m.a + m.d; }
inline Mat2 transpose(const Mat2& m) { return {m.a, m.c, m.b, m.d}; }

// Inverse via the adjugate. Preserves symmetry bit-for-bit when b == c.
inline Mat2 inverse(const Mat2& m) {
  double dt = det(m);
  if (std::abs(dt) <= kMinDet) {
    throw SingularCovariance("matrix inverse: |det| <= 1e-12");
  }
  return {m.d / dt, -m.b / dt, -m.c / dt, m.a / dt};
}

// Eigendecomposition of a symmetric 2x2 matrix. Returns eigenvalues
// (descending) and the unit eigenvector of the larger one; the other
// eigenvector is its perpendicular.
struct SymEigen2 {
  double l1 = 0.0;  // larger
  double l2 = 0.0;
  Vec2 v1{1.0, 0.0};
};

inline SymEigen2 eigen_symmetric(const Mat2& m) {
  double mean = 0.5 * (m.a + m.d);
  double half_diff = 0.5 * (m.a - m.d);
  double off = 0.5 * (m.b + m.c);
  double r = std::sqrt(half_diff * half_diff + off * off);
  SymEigen2 e;
  e.l1 = mean + r;
  e.l2 = mean - r;
  if (r < 1e-30) {
    e.v1 = {1.0, 0.0};
    return e;
  }
  // Pick the numerically larger of the two candidate eigenvector forms.
  Vec2 c1{off, e.l1 - m.a};
  Vec2 c2{e.l1 - m.d, off};
  Vec2 v = norm2(c1) >= norm2(c2) ? c1 : c2;
  double n = norm(v);
  if (n < 1e-300) {
    e.v1 = {1.0, 0.0};
  } else {
    e.v1 = (1.0 / n) * v;
  }
  return e;
}

// Principal square root of a symmetric positive definite matrix.
inline Mat2 sqrt_spd(const Mat2& m) {
  SymEigen2 e = eigen_symmetric(m);
  if (e.l2 <= 0.0) {
    throw SingularCovariance("sqrt_spd: matrix not positive definite");
  }
  double s1 = std::sqrt(e.l1);
  double s2 = std::sqrt(e.l2);
  Vec2 u = e.v1;
  Vec2 w{-u.y, u.x};
  // R diag(s1, s2) R^T, assembled so the off-diagonals are identical.
  double off = s1 * u.x * u.y + s2 * w.x * w.y;
  return {s1 * u.x * u.x + s2 * w.x * w.x, off, off,
          s1 * u.y * u.y + s2 * w.y * w.y};
}

// Oriented rectangle: center, extents, rotation of the w-axis from +x (rad).
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;
  double theta = 0.0;

  RotatedBox() = default;
  RotatedBox(double cx_, double cy_, double w_, double h_, double theta_)
      : cx(cx_), cy(cy_), w(w_), h(h_), theta(theta_) {
    if (!(w > kMinExtent) || !(h > kMinExtent)) {
      throw DegenerateBox("box extents must exceed 1e-6");
    }
  }

  Vec2 center() const { return {cx, cy}; }
  double area() const { return w * h; }
};

// 2d Gaussian with symmetric positive definite covariance.
struct Gaussian2 {
  Vec2 mu{};
  Mat2 sigma = Mat2::identity();

  static Gaussian2 make(Vec2 mu, const Mat2& sigma) {
    if (sigma.b != sigma.c) {
      throw SingularCovariance("covariance must be symmetric");
    }
    if (!(det(sigma) > kMinDet) || !(trace(sigma) > 0.0)) {
      throw SingularCovariance("covariance must be positive definite");
    }
    return Gaussian2{mu, sigma};
  }
};

// Vertex list; operations producing polygons emit them counter-clockwise.
using Polygon = std::vector<Vec2>;

// Signed doubled area (positive for counter-clockwise order).
inline double shoelace2(const Polygon& p) {
  double s = 0.0;
  size_t n = p.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % n];
    s += u.x * v.y - u.y * v.x;
  }
  return s;
}

inline double polygon_area(const Polygon& p) {
  if (p.size() < 3) return 0.0;
  return 0.5 * std::abs(shoelace2(p));
}

// Normalizes theta into [-pi/2, pi/2) modulo pi. A result on the -pi/2
// boundary is folded to the equivalent (h, w, theta + pi/2) form, so
// (4,2,pi/2) becomes (2,4,0). Idempotent; preserves the vertex set.
inline RotatedBox canonicalize(const RotatedBox& box) {
  double t = std::remainder(box.theta, kPi);  // [-pi/2, pi/2]
  if (t >= kHalfPi) t -= kPi;
  if (t < -kHalfPi + 1e-12) {
    return RotatedBox(box.cx, box.cy, box.h, box.w, t + kHalfPi);
  }
  return RotatedBox(box.cx, box.cy, box.w, box.h, t);
}

// Corners in counter-clockwise order starting from the (+w/2, +h/2) corner
// in the box frame.
inline Polygon box_vertices(const RotatedBox& box) {
  double c = std::cos(box.theta);
  double s = std::sin(box.theta);
  Vec2 u{c, s};
  Vec2 v{-s, c};
  Vec2 ctr{box.cx, box.cy};
  Vec2 du = (box.w / 2.0) * u;
  Vec2 dv = (box.h / 2.0) * v;
  return {ctr + du + dv, ctr - du + dv, ctr - du - dv, ctr + du - dv};
}

// Gaussian view of a box: mean at the center, covariance
// R(theta) diag(w^2/4, h^2/4) R(theta)^T, assembled exactly symmetric.
inline Gaussian2 box_to_gaussian(const RotatedBox& box) {
  double c = std::cos(box.theta);
  double s = std::sin(box.theta);
  double A = box.w * box.w / 4.0;
  double B = box.h * box.h / 4.0;
  double off = c * s * (A - B);
  Mat2 sigma{c * c * A + s * s * B, off, off, s * s * A + c * c * B};
  return Gaussian2::make({box.cx, box.cy}, sigma);
}

namespace detail {

// Cross product of (q - p) x (r - p).
inline double cross3(Vec2 p, Vec2 q, Vec2 r) {
  return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
}

// Sutherland-Hodgman clip of a convex subject against a convex
// counter-clockwise clip polygon.
inline Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  Polygon out = subject;
  size_t m = clip.size();
  for (size_t i = 0; i < m && !out.empty(); ++i) {
    Vec2 p = clip[i];
    Vec2 q = clip[(i + 1) % m];
    Polygon in;
    in.swap(out);
    size_t n = in.size();
    for (size_t j = 0; j < n; ++j) {
      Vec2 cur = in[j];
      Vec2 nxt = in[(j + 1) % n];
      double dc = cross3(p, q, cur);
      double dn = cross3(p, q, nxt);
      bool cur_in = dc >= 0.0;
      bool nxt_in = dn >= 0.0;
      if (cur_in) out.push_back(cur);
      if (cur_in != nxt_in) {
        double t = dc / (dc - dn);
        out.push_back(cur + t * (nxt - cur));
      }
    }
  }
  return out;
}

inline double convex_intersection_area(const Polygon& a, const Polygon& b) {
  Polygon clipped = clip_convex(a, b);
  if (clipped.size() < 3) return 0.0;
  return polygon_area(clipped);
}

// Deterministic ordering key so iou(a, b) and iou(b, a) run the exact same
// float operations.
inline bool box_key_less(const RotatedBox& a, const RotatedBox& b) {
  if (a.cx != b.cx) return a.cx < b.cx;
  if (a.cy != b.cy) return a.cy < b.cy;
  if (a.w != b.w) return a.w < b.w;
  if (a.h != b.h) return a.h < b.h;
  return a.theta < b.theta;
}

}  // namespace detail

// Intersection over union of two oriented rectangles via convex polygon
// clipping. Degenerate intersections (< 3 vertices) count as empty.
inline double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
  const RotatedBox& first = detail::box_key_less(b, a) ? b : a;
  const RotatedBox& second = detail::box_key_less(b, a) ? a : b;
  Polygon pa = box_vertices(first);
  Polygon pb = box_vertices(second);
  double inter = detail::convex_intersection_area(pa, pb);
  double uni = first.area() + second.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  double iou = inter / uni;
  return std::clamp(iou, 0.0, 1.0);
}

namespace detail {

// Monotone-chain convex hull, counter-clockwise, no collinear points kept.
inline Polygon convex_hull(std::span<const Vec2> pts) {
  std::vector<Vec2> p(pts.begin(), pts.end());
  std::sort(p.begin(), p.end(), [](Vec2 u, Vec2 v) {
    return u.x != v.x ? u.x < v.x : u.y < v.y;
  });
  p.erase(std::unique(p.begin(), p.end(),
                      [](Vec2 u, Vec2 v) { return u.x == v.x && u.y == v.y; }),
          p.end());
  size_t n = p.size();
  if (n < 3) return Polygon(p.begin(), p.end());
  Polygon hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross3(hull[k - 2], hull[k - 1], p[i]) <= 0.0) --k;
    hull[k++] = p[i];
  }
  size_t lower = k + 1;
  for (size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross3(hull[k - 2], hull[k - 1], p[i]) <= 0.0) --k;
    hull[k++] = p[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

// Smallest-area enclosing oriented rectangle (rotating calipers over hull
// edges). Ties keep the first minimal edge in hull order; the result is
// canonical.
inline RotatedBox min_area_rect(std::span<const Vec2> pts) {
  Polygon hull = detail::convex_hull(pts);
  if (hull.size() < 3) {
    throw CollinearInput("min_area_rect: points have no 2d extent");
  }
  double best_area = std::numeric_limits<double>::infinity();
  RotatedBox best;
  bool found = false;
  size_t n = hull.size();
  for (size_t i = 0; i < n; ++i) {
    Vec2 e = hull[(i + 1) % n] - hull[i];
    double len = norm(e);
    if (len < 1e-30) continue;
    Vec2 u = (1.0 / len) * e;
    Vec2 v{-u.y, u.x};
    double ulo = std::numeric_limits<double>::infinity(), uhi = -ulo;
    double vlo = ulo, vhi = -ulo;
    for (const Vec2& q : hull) {
      double pu = dot(q, u);
      double pv = dot(q, v);
      ulo = std::min(ulo, pu);
      uhi = std::max(uhi, pu);
      vlo = std::min(vlo, pv);
      vhi = std::max(vhi, pv);
    }
    double du = uhi - ulo;
    double dv = vhi - vlo;
    double area = du * dv;
    if (area < best_area) {
      if (!(du > kMinExtent) || !(dv > kMinExtent)) {
        throw CollinearInput("min_area_rect: degenerate extent");
      }
      Vec2 ctr = (0.5 * (ulo + uhi)) * u + (0.5 * (vlo + vhi)) * v;
      best_area = area;
      best = RotatedBox(ctr.x, ctr.y, du, dv, std::atan2(u.y, u.x));
      found = true;
    }
  }
  if (!found) {
    throw CollinearInput("min_area_rect: points have no 2d extent");
  }
  return canonicalize(best);
}

}  // namespace oassign
