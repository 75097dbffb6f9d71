#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "oassign/errors.hpp"
#include "oassign/geometry.hpp"

namespace oassign {

struct FpnConfig {
  std::vector<int> strides{8, 16, 32, 64, 128};
  double prior_scale = 4.0;   // prior side = prior_scale * stride
  double point_offset = 0.5;  // grid point at ((i + offset) * stride, ...)

  void validate() const {
    if (strides.empty()) throw ConfigError("fpn.strides must be non-empty");
    int prev = 0;
    for (int s : strides) {
      if (s <= prev) throw ConfigError("fpn.strides must be positive and ascending");
      prev = s;
    }
    if (!(prior_scale > 0.0)) throw ConfigError("fpn.prior_scale must be positive");
    if (!(point_offset >= 0.0) || !(point_offset < 1.0)) {
      throw ConfigError("fpn.point_offset must lie in [0, 1)");
    }
  }
};

struct Prior {
  int level = 0;
  int stride = 0;
  Vec2 s_static{};   // grid location
  Vec2 s_dynamic{};  // refined location (equals s_static until offsets apply)
  RotatedBox box;    // axis-aligned square of side prior_scale * stride
  Gaussian2 gaussian;  // mean s_dynamic, covariance (side/2)^2 * I
};

// All priors of an image, level-major then row-major within a level.
struct PriorSet {
  FpnConfig config;
  int image_w = 0;
  int image_h = 0;
  std::vector<Prior> priors;
  std::vector<std::size_t> level_begin;  // size levels()+1, offsets into priors

  std::size_t size() const { return priors.size(); }
  int levels() const { return static_cast<int>(config.strides.size()); }
  std::span<const Prior> level_span(int level) const {
    return {priors.data() + level_begin[level],
            level_begin[level + 1] - level_begin[level]};
  }
};

namespace detail {

inline Prior make_prior(int level, int stride, Vec2 loc, double side) {
  Prior p;
  p.level = level;
  p.stride = stride;
  p.s_static = loc;
  p.s_dynamic = loc;
  p.box = RotatedBox(loc.x, loc.y, side, side, 0.0);
  p.gaussian = box_to_gaussian(p.box);
  return p;
}

}  // namespace detail

// One square prior per feature-map cell per level; cell counts are
// ceil(image / stride).
inline PriorSet build_prior_grid(const FpnConfig& config, int image_w,
                                 int image_h) {
  config.validate();
  if (image_w <= 0 || image_h <= 0) {
    throw EmptyImage("build_prior_grid: image extents must be positive");
  }
  PriorSet set;
  set.config = config;
  set.image_w = image_w;
  set.image_h = image_h;
  set.level_begin.push_back(0);
  for (int level = 0; level < static_cast<int>(config.strides.size()); ++level) {
    int stride = config.strides[level];
    int nx = (image_w + stride - 1) / stride;
    int ny = (image_h + stride - 1) / stride;
    double side = config.prior_scale * stride;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        Vec2 loc{(i + config.point_offset) * stride,
                 (j + config.point_offset) * stride};
        set.priors.push_back(detail::make_prior(level, stride, loc, side));
      }
    }
    set.level_begin.push_back(set.priors.size());
  }
  return set;
}

// Location update from n predicted offsets (feature-grid units):
// s_dynamic = s_static + stride * sum(offsets) / (2n).
// The box and Gaussian move with the location; shape is untouched.
inline Prior apply_offsets(const Prior& prior, std::span<const Vec2> offsets) {
  if (offsets.empty()) {
    throw EmptyOffsets("apply_offsets: need at least one offset");
  }
  Vec2 sum{};
  for (const Vec2& o : offsets) sum = sum + o;
  double scale = prior.stride / (2.0 * static_cast<double>(offsets.size()));
  Vec2 loc = prior.s_static + scale * sum;
  Prior out = prior;
  out.s_dynamic = loc;
  out.box = RotatedBox(loc.x, loc.y, prior.box.w, prior.box.h, prior.box.theta);
  out.gaussian = Gaussian2{loc, prior.gaussian.sigma};
  return out;
}

// Per-prior offset application across a whole set.
inline PriorSet apply_offsets(const PriorSet& set,
                              const std::vector<std::vector<Vec2>>& offsets) {
  if (offsets.size() != set.priors.size()) {
    throw ConfigError("apply_offsets: one offset list per prior required");
  }
  PriorSet out = set;
  for (std::size_t i = 0; i < out.priors.size(); ++i) {
    out.priors[i] = apply_offsets(set.priors[i], offsets[i]);
  }
  return out;
}

// Gaussian view of a prior: isotropic, centered on the dynamic location.
inline Gaussian2 prior_gaussian(const Prior& prior) { return prior.gaussian; }

}  // namespace oassign
