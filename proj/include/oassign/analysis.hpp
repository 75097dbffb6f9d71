#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "oassign/assigner.hpp"
#include "oassign/errors.hpp"
#include "oassign/geometry.hpp"
#include "oassign/priors.hpp"
#include "oassign/rng.hpp"

namespace oassign {

enum class BinAxis { angle, scale };

inline const char* to_string(BinAxis axis) {
  return axis == BinAxis::angle ? "angle" : "scale";
}

// Half-open range [lo, hi).
struct BinRange {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v < hi; }
};

// Synthetic gt population laid out over an (angle, scale) grid of cells.
struct PopulationSpec {
  std::vector<BinRange> angle_bins;  // degrees, within [0, 180)
  std::vector<BinRange> scale_bins;  // pixels, absolute size sqrt(w*h)
  double aspect = 4.0;               // w / h
  int per_bin = 5;                   // gts per (angle, scale) cell
  double spacing = 16.0;             // minimum center distance, pixels
  int image_w = 1280;
  int image_h = 1280;
  std::uint64_t seed = 0;

  void validate() const {
    if (angle_bins.empty() || scale_bins.empty()) {
      throw ConfigError("population: need at least one angle and one scale bin");
    }
    auto check_axis = [](const std::vector<BinRange>& bins, const char* name) {
      for (std::size_t i = 0; i < bins.size(); ++i) {
        if (!(bins[i].lo < bins[i].hi)) {
          throw ConfigError(std::string("population: empty ") + name + " bin");
        }
        for (std::size_t j = i + 1; j < bins.size(); ++j) {
          if (bins[i].lo < bins[j].hi && bins[j].lo < bins[i].hi) {
            throw ConfigError(std::string("population: overlapping ") + name +
                              " bins");
          }
        }
      }
    };
    check_axis(angle_bins, "angle");
    check_axis(scale_bins, "scale");
    for (const BinRange& b : angle_bins) {
      if (b.lo < 0.0 || b.hi > 180.0) {
        throw ConfigError("population: angle bins must lie within [0, 180]");
      }
    }
    for (const BinRange& b : scale_bins) {
      if (b.lo <= 0.0) throw ConfigError("population: scale bins must be positive");
    }
    if (per_bin < 1) throw ConfigError("population: per_bin must be at least 1");
    if (!(aspect > 0.0)) throw ConfigError("population: aspect must be positive");
    if (!(spacing >= 0.0)) throw ConfigError("population: spacing must be non-negative");
    if (image_w <= 0 || image_h <= 0) {
      throw ConfigError("population: image extents must be positive");
    }
  }

  // Default axes: 15-degree angle bins over [0, 180), tiny-to-small
  // absolute sizes, elongated aspect.
  static PopulationSpec standard() {
    PopulationSpec spec;
    for (int i = 0; i < 12; ++i) {
      spec.angle_bins.push_back({15.0 * i, 15.0 * (i + 1)});
    }
    spec.scale_bins = {{8.0, 16.0}, {16.0, 32.0}, {32.0, 64.0}};
    return spec;
  }
};

struct BinRecord {
  BinAxis axis = BinAxis::angle;
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  double mean_pos = 0.0;
  double mean_quality = 0.0;
  int n_gt = 0;
};

struct ImbalanceReport {
  std::vector<BinRecord> bins;  // angle bins first, then scale bins
  double angle_ratio = 1.0;     // max/min of mean_pos over populated angle bins
  double scale_ratio = 1.0;
  bool angle_degenerate = false;  // no populated bin had any positives
  bool scale_degenerate = false;
};

// Direction of the longer edge, degrees in [0, 180).
inline double long_edge_angle_deg(const RotatedBox& box) {
  double a = box.w >= box.h ? box.theta : box.theta + kHalfPi;
  if (a < 0.0) a += kPi;
  if (a >= kPi) a -= kPi;
  double deg = a * (180.0 / kPi);
  if (deg >= 180.0) deg = 0.0;
  return deg;
}

inline double size_scale(const RotatedBox& box) { return std::sqrt(box.w * box.h); }

// Draws per_bin gts per (angle, scale) cell, sizes and angles uniform within
// the cell, centers rejection-sampled so boxes stay inside the image and
// pairwise strictly disjoint (center gap above both `spacing` and the
// circumradius sum). Larger cells place first. Deterministic in spec.seed.
inline std::vector<GtInstance> synth_population(const PopulationSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  std::vector<int> scale_order(spec.scale_bins.size());
  for (std::size_t i = 0; i < scale_order.size(); ++i) {
    scale_order[i] = static_cast<int>(i);
  }
  std::stable_sort(scale_order.begin(), scale_order.end(), [&](int a, int b) {
    return spec.scale_bins[a].hi > spec.scale_bins[b].hi;
  });

  constexpr int kMaxTries = 20000;
  double root_aspect = std::sqrt(spec.aspect);
  std::vector<GtInstance> gts;
  std::vector<Vec2> centers;
  std::vector<double> radii;
  for (int si : scale_order) {
    const BinRange& sbin = spec.scale_bins[si];
    for (const BinRange& abin : spec.angle_bins) {
      for (int rep = 0; rep < spec.per_bin; ++rep) {
        double angle_deg = rng.uniform(abin.lo, abin.hi);
        double s = rng.uniform(sbin.lo, sbin.hi);
        double w = s * root_aspect;
        double h = s / root_aspect;
        double theta = angle_deg * (kPi / 180.0);
        double c = std::cos(theta);
        double sn = std::sin(theta);
        double half_x = 0.5 * (w * std::abs(c) + h * std::abs(sn));
        double half_y = 0.5 * (w * std::abs(sn) + h * std::abs(c));
        double radius = 0.5 * std::hypot(w, h);
        double xlo = half_x + 1.0, xhi = spec.image_w - half_x - 1.0;
        double ylo = half_y + 1.0, yhi = spec.image_h - half_y - 1.0;
        if (!(xlo < xhi) || !(ylo < yhi)) {
          throw PlacementFailure("synth_population: box does not fit the image");
        }
        bool placed = false;
        for (int attempt = 0; attempt < kMaxTries; ++attempt) {
          Vec2 ctr{rng.uniform(xlo, xhi), rng.uniform(ylo, yhi)};
          bool ok = true;
          for (std::size_t j = 0; j < centers.size(); ++j) {
            double need = std::max(spec.spacing, radius + radii[j] + 1.0);
            if (norm2(ctr - centers[j]) < need * need) {
              ok = false;
              break;
            }
          }
          if (ok) {
            RotatedBox box = canonicalize(
                RotatedBox(ctr.x, ctr.y, w, h, theta));
            gts.push_back(GtInstance{box, 0, box_to_gaussian(box)});
            centers.push_back(ctr);
            radii.push_back(radius);
            placed = true;
            break;
          }
        }
        if (!placed) {
          throw PlacementFailure(
              "synth_population: spacing unsatisfiable after bounded retries");
        }
      }
    }
  }
  return gts;
}

// Stand-in for network posteriors: each prior predicts its nearest gt's box
// (perturbed when noise > 0) and a confidence that decays with the
// Mahalanobis distance from the prior's dynamic location to that gt.
inline std::vector<Prediction> prediction_oracle(const PriorSet& priors,
                                                 std::span<const GtInstance> gts,
                                                 double noise,
                                                 std::uint64_t seed) {
  if (!(noise >= 0.0)) throw ConfigError("prediction_oracle: noise must be >= 0");
  Rng rng(seed);
  std::vector<Prediction> preds;
  preds.reserve(priors.size());
  std::vector<Mat2> inv_sigma(gts.size());
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    inv_sigma[gi] = inverse(gts[gi].gaussian.sigma);
  }
  for (const Prior& prior : priors.priors) {
    double u = rng.next_unit();
    double z1 = rng.next_gauss();
    double z2 = rng.next_gauss();
    double z3 = rng.next_gauss();
    double z4 = rng.next_gauss();
    double z5 = rng.next_gauss();
    if (gts.empty()) {
      preds.push_back(Prediction{0.0, prior.box});
      continue;
    }
    std::size_t nearest = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      double d2 = norm2(prior.s_dynamic - gts[gi].box.center());
      if (d2 < best_d2) {
        best_d2 = d2;
        nearest = gi;
      }
    }
    const GtInstance& gt = gts[nearest];
    Vec2 dm = prior.s_dynamic - gt.box.center();
    double maha2 = dot(dm, inv_sigma[nearest] * dm);
    double cls = std::exp(-0.5 * maha2) * (1.0 - u * noise);
    const RotatedBox& g = gt.box;
    RotatedBox predicted = canonicalize(RotatedBox(
        g.cx + noise * z1 * g.w / 4.0, g.cy + noise * z2 * g.h / 4.0,
        g.w * std::exp(0.25 * noise * z3), g.h * std::exp(0.25 * noise * z4),
        g.theta + noise * z5 * (kPi / 18.0)));
    preds.push_back(Prediction{cls, predicted});
  }
  return preds;
}

// One offset per prior pointing at the predicted center, in feature-grid
// units. Fed through the location update rule (n = 1) this pulls each prior
// halfway toward its prediction.
inline std::vector<Vec2> offsets_toward(const PriorSet& priors,
                                        std::span<const Prediction> preds) {
  if (preds.size() != priors.size()) {
    throw ConfigError("offsets_toward: one prediction per prior required");
  }
  std::vector<Vec2> offsets(priors.size());
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const Prior& prior = priors.priors[i];
    Vec2 d = preds[i].box.center() - prior.s_static;
    offsets[i] = (1.0 / prior.stride) * d;
  }
  return offsets;
}

inline PriorSet refine_toward(const PriorSet& priors,
                              std::span<const Prediction> preds) {
  std::vector<Vec2> offsets = offsets_toward(priors, preds);
  PriorSet out = priors;
  for (std::size_t i = 0; i < out.priors.size(); ++i) {
    out.priors[i] = apply_offsets(priors.priors[i], std::span(&offsets[i], 1));
  }
  return out;
}

namespace detail {

struct BinAccum {
  double pos_sum = 0.0;
  double quality_sum = 0.0;
  int n = 0;
};

inline int find_bin(const std::vector<BinRange>& bins, double value,
                    const char* axis) {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].contains(value)) return static_cast<int>(i);
  }
  throw BinMismatch(std::string("imbalance_report: gt outside every ") + axis +
                    " bin");
}

// Ratio over populated bins only; all-zero means degenerate (1.0).
inline void fill_ratio(std::span<const BinRecord> records, double* ratio,
                       bool* degenerate) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  bool any = false;
  for (const BinRecord& r : records) {
    if (r.n_gt == 0) continue;
    any = true;
    lo = std::min(lo, r.mean_pos);
    hi = std::max(hi, r.mean_pos);
  }
  if (!any || hi <= 0.0) {
    *ratio = 1.0;
    *degenerate = true;
    return;
  }
  *degenerate = false;
  *ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Per-bin positive-count and matching-quality means for one assignment run.
// Quality is the max predicted-box overlap among a gt's positives; pass the
// predictions the run saw (an empty span scores quality 0 everywhere).
inline ImbalanceReport imbalance_report(const AssignmentResult& result,
                                        std::span<const GtInstance> gts,
                                        std::span<const Prediction> preds,
                                        const PopulationSpec& spec) {
  spec.validate();
  if (result.per_gt.size() != gts.size()) {
    throw ConfigError("imbalance_report: result does not match the gt list");
  }
  if (!preds.empty() && preds.size() != result.prior_labels.size()) {
    throw ConfigError("imbalance_report: one prediction per prior required");
  }
  std::vector<int> pos_count(gts.size(), 0);
  std::vector<double> quality(gts.size(), 0.0);
  for (std::size_t p = 0; p < result.prior_labels.size(); ++p) {
    int label = result.prior_labels[p];
    if (label < 0) continue;
    if (static_cast<std::size_t>(label) >= gts.size()) {
      throw InternalError("imbalance_report: label outside gt range");
    }
    pos_count[label] += 1;
    if (!preds.empty()) {
      double q = rotated_iou(preds[p].box, gts[label].box);
      quality[label] = std::max(quality[label], q);
    }
  }

  std::vector<detail::BinAccum> angle_acc(spec.angle_bins.size());
  std::vector<detail::BinAccum> scale_acc(spec.scale_bins.size());
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    const RotatedBox& box = gts[gi].box;
    int ab = detail::find_bin(spec.angle_bins, long_edge_angle_deg(box), "angle");
    int sb = detail::find_bin(spec.scale_bins, size_scale(box), "scale");
    for (detail::BinAccum* acc : {&angle_acc[ab], &scale_acc[sb]}) {
      acc->pos_sum += pos_count[gi];
      acc->quality_sum += quality[gi];
      acc->n += 1;
    }
  }

  ImbalanceReport report;
  auto emit = [&](BinAxis axis, const std::vector<BinRange>& bins,
                  const std::vector<detail::BinAccum>& accs) {
    for (std::size_t i = 0; i < bins.size(); ++i) {
      BinRecord rec;
      rec.axis = axis;
      rec.bin_lo = bins[i].lo;
      rec.bin_hi = bins[i].hi;
      rec.n_gt = accs[i].n;
      if (accs[i].n > 0) {
        rec.mean_pos = accs[i].pos_sum / accs[i].n;
        rec.mean_quality = accs[i].quality_sum / accs[i].n;
      }
      report.bins.push_back(rec);
    }
  };
  emit(BinAxis::angle, spec.angle_bins, angle_acc);
  emit(BinAxis::scale, spec.scale_bins, scale_acc);

  std::span<const BinRecord> all(report.bins);
  detail::fill_ratio(all.subspan(0, spec.angle_bins.size()),
                     &report.angle_ratio, &report.angle_degenerate);
  detail::fill_ratio(all.subspan(spec.angle_bins.size()), &report.scale_ratio,
                     &report.scale_degenerate);
  return report;
}

// Overlap thresholds the sweep's static baseline runs at. The conventional
// 0.5/0.4 pair is useless with one square prior per cell: a square and a 4:1
// rectangle of equal area never exceed IoU ~0.41, so every gt would degenerate
// to its single low-quality positive and every bin mean would equal 1. These
// sit inside the band where overlap still depends strongly on the gt's angle.
struct SweepBaseline {
  double pos_thr = 0.35;
  double neg_thr = 0.25;
  bool low_quality = true;
};

struct SweepResult {
  ImbalanceReport dcfl;
  ImbalanceReport max_iou;
};

// The imbalance experiment: one synthetic population, a noiseless (or
// noisy) prediction oracle, the coarse-to-fine assigner on offset-refined
// priors versus the static overlap-threshold baseline on the raw grid.
inline SweepResult run_imbalance_sweep(const FpnConfig& fpn,
                                       const AssignerConfig& assigner,
                                       const PopulationSpec& spec,
                                       double noise = 0.0,
                                       SweepBaseline baseline = {}) {
  std::vector<GtInstance> gts = synth_population(spec);
  PriorSet grid = build_prior_grid(fpn, spec.image_w, spec.image_h);
  std::vector<Prediction> preds =
      prediction_oracle(grid, gts, noise, spec.seed + 1);
  PriorSet refined = refine_toward(grid, preds);

  AssignmentResult dcfl = assign(refined, gts, preds, assigner);
  AssignmentResult base = max_iou_assign(grid, gts, baseline.pos_thr,
                                         baseline.neg_thr, baseline.low_quality);

  SweepResult out;
  out.dcfl = imbalance_report(dcfl, gts, preds, spec);
  out.max_iou = imbalance_report(base, gts, preds, spec);
  return out;
}

}  // namespace oassign
