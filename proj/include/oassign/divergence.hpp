#pragma once

#include <algorithm>
#include <cmath>

#include "oassign/errors.hpp"
#include "oassign/geometry.hpp"

namespace oassign {

// Interpolation weight for the skew divergence, strictly inside (0, 1).
struct Alpha {
  double value = 0.5;

  Alpha() = default;
  explicit Alpha(double v) : value(v) {
    if (!(v > 0.0) || !(v < 1.0)) {
      throw ConfigError("alpha must lie strictly inside (0, 1)");
    }
  }
};

enum class DivergenceKind { kld, gwd, gjsd };

namespace detail {

inline void require_usable(const Gaussian2& g, const char* who) {
  if (!(det(g.sigma) > kMinDet)) {
    throw SingularCovariance(std::string(who) + ": covariance determinant <= 1e-12");
  }
}

}  // namespace detail

// KL(a || b) for Gaussians, closed form. Zero iff a == b.
inline double kld(const Gaussian2& a, const Gaussian2& b) {
  detail::require_usable(a, "kld");
  detail::require_usable(b, "kld");
  Mat2 bi = inverse(b.sigma);
  double tr = trace(bi * a.sigma);
  Vec2 dm = b.mu - a.mu;
  double quad = dot(dm, bi * dm);
  double logdet = std::log(det(b.sigma) / det(a.sigma));
  return std::max(0.0, 0.5 * (tr + quad - 2.0 + logdet));
}

// 2-Wasserstein distance between Gaussians (not squared).
inline double gwd(const Gaussian2& a, const Gaussian2& b) {
  detail::require_usable(a, "gwd");
  detail::require_usable(b, "gwd");
  Mat2 root = sqrt_spd(a.sigma);
  Mat2 inner = root * b.sigma * root;
  double off = 0.5 * (inner.b + inner.c);
  inner.b = off;
  inner.c = off;
  Mat2 cross_root = sqrt_spd(inner);
  double d2 = norm2(a.mu - b.mu) + trace(a.sigma) + trace(b.sigma) -
              2.0 * trace(cross_root);
  return std::sqrt(std::max(0.0, d2));
}

// Geodesic interpolant between two Gaussians in precision space:
// Sigma_t = ((1-t) Sigma_p^-1 + t Sigma_g^-1)^-1,
// mu_t = Sigma_t ((1-t) Sigma_p^-1 mu_p + t Sigma_g^-1 mu_g).
inline Gaussian2 alpha_interpolate(const Gaussian2& p, const Gaussian2& g,
                                   Alpha alpha) {
  detail::require_usable(p, "alpha_interpolate");
  detail::require_usable(g, "alpha_interpolate");
  double t = alpha.value;
  Mat2 pi = inverse(p.sigma);
  Mat2 gi = inverse(g.sigma);
  Mat2 prec = (1.0 - t) * pi + t * gi;
  Mat2 sigma = inverse(prec);
  Vec2 mu = sigma * ((1.0 - t) * (pi * p.mu) + t * (gi * g.mu));
  return Gaussian2::make(mu, sigma);
}

// Skewed Jensen-Shannon divergence built from the interpolant:
// (1 - alpha) KL(N_alpha || p) + alpha KL(N_alpha || g).
// Symmetric in (p, g) at alpha = 0.5; zero iff p == g.
inline double gjsd(const Gaussian2& p, const Gaussian2& g, Alpha alpha) {
  Gaussian2 mid = alpha_interpolate(p, g, alpha);
  double t = alpha.value;
  return std::max(0.0, (1.0 - t) * kld(mid, p) + t * kld(mid, g));
}

inline double divergence(DivergenceKind kind, const Gaussian2& p,
                         const Gaussian2& g, Alpha alpha) {
  switch (kind) {
    case DivergenceKind::kld:
      return kld(p, g);
    case DivergenceKind::gwd:
      return gwd(p, g);
    case DivergenceKind::gjsd:
      return gjsd(p, g, alpha);
  }
  throw InternalError("divergence: unknown kind");
}

}  // namespace oassign
