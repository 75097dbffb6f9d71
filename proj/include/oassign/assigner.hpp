#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "oassign/divergence.hpp"
#include "oassign/errors.hpp"
#include "oassign/geometry.hpp"
#include "oassign/priors.hpp"

namespace oassign {

// Prior labels: a gt index, or one of these.
inline constexpr int kNegative = -1;
inline constexpr int kIgnore = -2;

struct GtInstance {
  RotatedBox box;
  int class_id = 0;
  Gaussian2 gaussian;

  static GtInstance make(const RotatedBox& box, int class_id) {
    RotatedBox canon = canonicalize(box);
    return GtInstance{canon, class_id, box_to_gaussian(canon)};
  }
};

// Per-prior model output: confidence for the matched gt's class plus a
// decoded box.
struct Prediction {
  double cls_score = 0.0;
  RotatedBox box;
};

enum class MatchStrategy { cross_layer, single_layer, all_layer };

struct AssignerConfig {
  int k = 16;                // coarse candidates per gt
  int q = 12;                // medium candidates per gt
  double g = 0.8;            // fine threshold is exp(-g)
  double w1 = 0.7;           // weight of the geometric mixture component
  DivergenceKind measurement = DivergenceKind::gjsd;
  MatchStrategy strategy = MatchStrategy::cross_layer;
  Alpha alpha{};

  void validate() const {
    if (k < 1) throw ConfigError("assigner.k must be at least 1");
    if (q < 1 || q > k) throw ConfigError("assigner.q must lie in [1, k]");
    if (!(g > 0.0)) throw ConfigError("assigner.g must be positive");
    if (!(w1 >= 0.0) || !(w1 <= 1.0)) {
      throw ConfigError("assigner.w1 must lie in [0, 1]");
    }
  }
};

// Two-component Gaussian mixture scoring how well a location explains a gt:
// one mode on the gt center, one on the semantic center, shared covariance.
struct Dgmm {
  Vec2 mu1{};  // geometric mode
  Vec2 mu2{};  // semantic mode
  Mat2 sigma = Mat2::identity();
  double w1 = 0.7;
  double w2 = 0.3;
};

struct GtStageLists {
  std::vector<int> cps;  // coarse candidates, ascending divergence
  std::vector<int> mps;  // medium candidates, descending quality
  std::vector<int> fps;  // final positives, mps order, post conflict resolution
  Vec2 semantic_center{};
};

struct AssignmentResult {
  std::vector<int> prior_labels;  // per prior: gt index, kNegative or kIgnore
  std::vector<GtStageLists> per_gt;
};

namespace detail {

// FCOS-style grouping: level l takes max(w, h) in
// (8 * strides[l-1], 8 * strides[l]], open-ended at the top level.
inline int single_layer_level(const GtInstance& gt,
                              const std::vector<int>& strides) {
  double m = std::max(gt.box.w, gt.box.h);
  int last = static_cast<int>(strides.size()) - 1;
  for (int l = 0; l < last; ++l) {
    if (m <= 8.0 * strides[l]) return l;
  }
  return last;
}

// Smallest `count` items by (value, index), indices returned in that order.
inline std::vector<int> rank_ascending(const std::vector<double>& values,
                                       const std::vector<int>& indices,
                                       std::size_t count) {
  std::vector<int> order(indices.size());
  std::iota(order.begin(), order.end(), 0);
  auto cmp = [&](int u, int v) {
    if (values[u] != values[v]) return values[u] < values[v];
    return indices[u] < indices[v];
  };
  count = std::min(count, order.size());
  std::partial_sort(order.begin(), order.begin() + count, order.end(), cmp);
  std::vector<int> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = indices[order[i]];
  return out;
}

}  // namespace detail

// Coarse stage: per gt, the k candidates with the smallest divergence
// between the prior Gaussian and the gt Gaussian. Ties break toward the
// lower prior index. Strategy controls the candidate pool and the prior
// covariance (all_layer swaps in the identity).
inline std::vector<std::vector<int>> coarse_match(
    const PriorSet& priors, std::span<const GtInstance> gts,
    const AssignerConfig& config) {
  config.validate();
  std::vector<std::vector<int>> cps(gts.size());
  std::vector<int> pool;
  std::vector<double> divs;
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    const GtInstance& gt = gts[gi];
    pool.clear();
    if (config.strategy == MatchStrategy::single_layer) {
      int level = detail::single_layer_level(gt, priors.config.strides);
      for (std::size_t p = priors.level_begin[level];
           p < priors.level_begin[level + 1]; ++p) {
        pool.push_back(static_cast<int>(p));
      }
    } else {
      pool.resize(priors.size());
      std::iota(pool.begin(), pool.end(), 0);
    }
    divs.resize(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const Prior& prior = priors.priors[pool[j]];
      Gaussian2 pg = prior.gaussian;
      if (config.strategy == MatchStrategy::all_layer) {
        pg = Gaussian2{prior.s_dynamic, Mat2::identity()};
      }
      divs[j] = divergence(config.measurement, pg, gt.gaussian, config.alpha);
    }
    cps[gi] = detail::rank_ascending(divs, pool,
                                     static_cast<std::size_t>(config.k));
  }
  return cps;
}

// Matching quality: equal-weight blend of classification confidence and
// localization overlap.
inline double pt_score(double cls_score, double iou) {
  return 0.5 * cls_score + 0.5 * iou;
}

inline double pt_score(const Prediction& pred, const GtInstance& gt) {
  return pt_score(pred.cls_score, rotated_iou(pred.box, gt.box));
}

// Medium stage: per gt, keep the q coarse candidates with the highest
// quality score. Ties break toward the lower prior index.
inline std::vector<std::vector<int>> medium_match(
    const std::vector<std::vector<int>>& cps, std::span<const Prediction> preds,
    std::span<const GtInstance> gts, const AssignerConfig& config) {
  config.validate();
  if (cps.size() != gts.size()) {
    throw InternalError("medium_match: one coarse list per gt required");
  }
  std::vector<std::vector<int>> mps(gts.size());
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    const std::vector<int>& members = cps[gi];
    std::vector<double> neg_quality(members.size());
    for (std::size_t j = 0; j < members.size(); ++j) {
      int p = members[j];
      if (p < 0 || static_cast<std::size_t>(p) >= preds.size()) {
        throw InternalError("medium_match: candidate outside prediction range");
      }
      neg_quality[j] = -pt_score(preds[p], gts[gi]);
    }
    mps[gi] = detail::rank_ascending(neg_quality, members,
                                     static_cast<std::size_t>(config.q));
  }
  return mps;
}

// Mean dynamic location of the medium candidates; falls back to the gt
// center when the list is empty.
inline Vec2 semantic_center(std::span<const int> mps, const PriorSet& priors,
                            const GtInstance& gt) {
  if (mps.empty()) return gt.box.center();
  Vec2 sum{};
  for (int p : mps) sum = sum + priors.priors[p].s_dynamic;
  return (1.0 / static_cast<double>(mps.size())) * sum;
}

// Mixture with the gt's own covariance on both modes; weights (w1, 1 - w1).
inline Dgmm build_dgmm(const GtInstance& gt, Vec2 sem_center, double w1) {
  if (!(w1 >= 0.0) || !(w1 <= 1.0)) {
    throw ConfigError("dgmm weight must lie in [0, 1]");
  }
  Dgmm m;
  m.mu1 = gt.box.center();
  m.mu2 = sem_center;
  m.sigma = gt.gaussian.sigma;
  m.w1 = w1;
  m.w2 = 1.0 - w1;
  return m;
}

// Peak-normalized mixture density: each mode contributes
// w * exp(-0.5 * mahalanobis^2), so a location on both modes scores 1.
inline double dgmm_score(const Dgmm& mixture, Vec2 loc) {
  Mat2 inv = inverse(mixture.sigma);
  Vec2 d1 = loc - mixture.mu1;
  Vec2 d2 = loc - mixture.mu2;
  double e1 = std::exp(-0.5 * dot(d1, inv * d1));
  double e2 = std::exp(-0.5 * dot(d2, inv * d2));
  return mixture.w1 * e1 + mixture.w2 * e2;
}

// Fine stage: keep medium candidates whose mixture score clears exp(-g).
// Order within each list is preserved from the medium stage.
inline std::vector<std::vector<int>> fine_match(
    const std::vector<std::vector<int>>& mps, std::span<const Dgmm> mixtures,
    const PriorSet& priors, const AssignerConfig& config) {
  config.validate();
  if (mps.size() != mixtures.size()) {
    throw InternalError("fine_match: one mixture per gt required");
  }
  double threshold = std::exp(-config.g);
  std::vector<std::vector<int>> fps(mps.size());
  for (std::size_t gi = 0; gi < mps.size(); ++gi) {
    for (int p : mps[gi]) {
      double score = dgmm_score(mixtures[gi], priors.priors[p].s_dynamic);
      if (score >= threshold) fps[gi].push_back(p);
    }
  }
  return fps;
}

// Full coarse-to-fine pipeline. A prior claimed by several gts goes to the
// one scoring it highest (ties to the lower gt index); everything else is
// negative. No ignore labels are produced here.
inline AssignmentResult assign(const PriorSet& priors,
                               std::span<const GtInstance> gts,
                               std::span<const Prediction> preds,
                               const AssignerConfig& config) {
  config.validate();
  if (preds.size() != priors.size()) {
    throw ConfigError("assign: one prediction per prior required");
  }
  AssignmentResult result;
  result.prior_labels.assign(priors.size(), kNegative);
  result.per_gt.resize(gts.size());
  if (gts.empty()) return result;

  std::vector<std::vector<int>> cps = coarse_match(priors, gts, config);
  std::vector<std::vector<int>> mps = medium_match(cps, preds, gts, config);

  std::vector<Dgmm> mixtures(gts.size());
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    Vec2 sc = semantic_center(mps[gi], priors, gts[gi]);
    result.per_gt[gi].semantic_center = sc;
    mixtures[gi] = build_dgmm(gts[gi], sc, config.w1);
  }
  std::vector<std::vector<int>> fps = fine_match(mps, mixtures, priors, config);

  // Resolve contested priors toward the best-scoring gt.
  std::vector<int> winner(priors.size(), kNegative);
  std::vector<double> best(priors.size(),
                           -std::numeric_limits<double>::infinity());
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    for (int p : fps[gi]) {
      double score = dgmm_score(mixtures[gi], priors.priors[p].s_dynamic);
      if (score > best[p]) {
        best[p] = score;
        winner[p] = static_cast<int>(gi);
      }
    }
  }
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    GtStageLists& lists = result.per_gt[gi];
    lists.cps = std::move(cps[gi]);
    lists.mps = std::move(mps[gi]);
    for (int p : fps[gi]) {
      if (winner[p] == static_cast<int>(gi)) lists.fps.push_back(p);
    }
  }
  for (std::size_t p = 0; p < priors.size(); ++p) {
    result.prior_labels[p] = winner[p];
  }
  return result;
}

// Overlap-threshold baseline. Positive above pos_thr, negative below
// neg_thr, ignore in between; with low_quality on, each gt additionally
// claims its single best-overlap prior (ascending gt order, later gts
// override) provided that overlap is positive.
inline AssignmentResult max_iou_assign(const PriorSet& priors,
                                       std::span<const GtInstance> gts,
                                       double pos_thr, double neg_thr,
                                       bool low_quality) {
  if (!(neg_thr >= 0.0) || !(pos_thr >= neg_thr)) {
    throw ConfigError("max_iou_assign: need 0 <= neg_thr <= pos_thr");
  }
  AssignmentResult result;
  result.prior_labels.assign(priors.size(), kNegative);
  result.per_gt.resize(gts.size());
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    result.per_gt[gi].semantic_center = gts[gi].box.center();
  }
  if (gts.empty()) return result;

  std::vector<double> gt_radius(gts.size());
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    gt_radius[gi] = 0.5 * std::hypot(gts[gi].box.w, gts[gi].box.h);
  }
  std::vector<double> best_gt_iou(gts.size(), 0.0);
  std::vector<int> best_gt_prior(gts.size(), -1);

  for (std::size_t p = 0; p < priors.size(); ++p) {
    const Prior& prior = priors.priors[p];
    double prior_radius = 0.5 * std::hypot(prior.box.w, prior.box.h);
    double best_iou = 0.0;
    int best_gt = -1;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      // Disjoint when center distance exceeds the circumradius sum.
      double reach = prior_radius + gt_radius[gi];
      Vec2 dc = prior.box.center() - gts[gi].box.center();
      if (norm2(dc) > reach * reach) continue;
      double iou = rotated_iou(prior.box, gts[gi].box);
      if (iou > best_iou) {
        best_iou = iou;
        best_gt = static_cast<int>(gi);
      }
      if (iou > best_gt_iou[gi]) {
        best_gt_iou[gi] = iou;
        best_gt_prior[gi] = static_cast<int>(p);
      }
    }
    if (best_iou >= pos_thr && best_gt >= 0) {
      result.prior_labels[p] = best_gt;
    } else if (best_iou >= neg_thr && best_iou > 0.0) {
      result.prior_labels[p] = kIgnore;
    }
  }

  if (low_quality) {
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (best_gt_prior[gi] >= 0 && best_gt_iou[gi] > 0.0) {
        result.prior_labels[best_gt_prior[gi]] = static_cast<int>(gi);
      }
    }
  }

  for (std::size_t p = 0; p < priors.size(); ++p) {
    int label = result.prior_labels[p];
    if (label >= 0) {
      result.per_gt[label].fps.push_back(static_cast<int>(p));
    }
  }
  for (GtStageLists& lists : result.per_gt) {
    lists.cps = lists.fps;
    lists.mps = lists.fps;
  }
  return result;
}

}  // namespace oassign
