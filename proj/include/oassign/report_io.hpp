#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oassign/analysis.hpp"
#include "oassign/assigner.hpp"
#include "oassign/errors.hpp"

namespace oassign {

namespace detail {

// Shortest round-trip decimal form, locale-free.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InternalError("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline void check_sink(std::ostream& out, const char* what) {
  if (!out.good()) {
    throw SinkError(std::string(what) + ": write failed");
  }
}

inline nlohmann::json ratio_json(double ratio) {
  if (std::isinf(ratio)) return "inf";
  return ratio;
}

inline double ratio_from_json(const nlohmann::json& j) {
  if (j.is_string() && j.get<std::string>() == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (!j.is_number()) throw ConfigError("report: ratio must be a number or \"inf\"");
  return j.get<double>();
}

}  // namespace detail

inline void emit_csv(const ImbalanceReport& report, std::ostream& out) {
  out << "bin_lo,bin_hi,axis,mean_pos,mean_quality,n_gt\n";
  for (const BinRecord& rec : report.bins) {
    out << detail::format_double(rec.bin_lo) << ','
        << detail::format_double(rec.bin_hi) << ',' << to_string(rec.axis)
        << ',' << detail::format_double(rec.mean_pos) << ','
        << detail::format_double(rec.mean_quality) << ',' << rec.n_gt << '\n';
  }
  out.flush();
  detail::check_sink(out, "emit_csv");
}

inline nlohmann::json report_to_json(const ImbalanceReport& report) {
  nlohmann::json bins = nlohmann::json::array();
  for (const BinRecord& rec : report.bins) {
    bins.push_back({{"bin_lo", rec.bin_lo},
                    {"bin_hi", rec.bin_hi},
                    {"axis", to_string(rec.axis)},
                    {"mean_pos", rec.mean_pos},
                    {"mean_quality", rec.mean_quality},
                    {"n_gt", rec.n_gt}});
  }
  return {{"bins", bins},
          {"summary",
           {{"angle_ratio", detail::ratio_json(report.angle_ratio)},
            {"scale_ratio", detail::ratio_json(report.scale_ratio)},
            {"angle_degenerate", report.angle_degenerate},
            {"scale_degenerate", report.scale_degenerate}}}};
}

inline void emit_json(const ImbalanceReport& report, std::ostream& out) {
  out << report_to_json(report).dump(2) << '\n';
  out.flush();
  detail::check_sink(out, "emit_json");
}

inline ImbalanceReport report_from_json(const nlohmann::json& root) {
  try {
    ImbalanceReport report;
    for (const nlohmann::json& rec : root.at("bins")) {
      BinRecord r;
      std::string axis = rec.at("axis").get<std::string>();
      if (axis == "angle") {
        r.axis = BinAxis::angle;
      } else if (axis == "scale") {
        r.axis = BinAxis::scale;
      } else {
        throw ConfigError("report: axis must be 'angle' or 'scale'");
      }
      r.bin_lo = rec.at("bin_lo").get<double>();
      r.bin_hi = rec.at("bin_hi").get<double>();
      r.mean_pos = rec.at("mean_pos").get<double>();
      r.mean_quality = rec.at("mean_quality").get<double>();
      r.n_gt = rec.at("n_gt").get<int>();
      report.bins.push_back(r);
    }
    const nlohmann::json& summary = root.at("summary");
    report.angle_ratio = detail::ratio_from_json(summary.at("angle_ratio"));
    report.scale_ratio = detail::ratio_from_json(summary.at("scale_ratio"));
    report.angle_degenerate = summary.at("angle_degenerate").get<bool>();
    report.scale_degenerate = summary.at("scale_degenerate").get<bool>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("report: malformed JSON: ") + e.what());
  }
}

inline ImbalanceReport read_report_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("report is not valid JSON: ") + e.what());
  }
  return report_from_json(root);
}

// Per-gt view of one assignment run, for emission.
struct AssignmentSummary {
  struct Row {
    int gt = 0;
    int class_id = 0;
    RotatedBox box;
    int n_cps = 0;
    int n_mps = 0;
    int n_pos = 0;
    Vec2 semantic_center{};
    std::vector<int> positives;
  };
  std::size_t num_priors = 0;
  std::vector<Row> rows;
};

inline AssignmentSummary summarize(const AssignmentResult& result,
                                   std::span<const GtInstance> gts) {
  if (result.per_gt.size() != gts.size()) {
    throw InternalError("summarize: result does not match the gt list");
  }
  AssignmentSummary summary;
  summary.num_priors = result.prior_labels.size();
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    const GtStageLists& lists = result.per_gt[gi];
    AssignmentSummary::Row row;
    row.gt = static_cast<int>(gi);
    row.class_id = gts[gi].class_id;
    row.box = gts[gi].box;
    row.n_cps = static_cast<int>(lists.cps.size());
    row.n_mps = static_cast<int>(lists.mps.size());
    row.n_pos = static_cast<int>(lists.fps.size());
    row.semantic_center = lists.semantic_center;
    row.positives = lists.fps;
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

inline void emit_csv(const AssignmentSummary& summary, std::ostream& out) {
  out << "gt,class_id,cx,cy,w,h,theta,n_cps,n_mps,n_pos,semantic_x,semantic_y\n";
  for (const AssignmentSummary::Row& row : summary.rows) {
    out << row.gt << ',' << row.class_id << ','
        << detail::format_double(row.box.cx) << ','
        << detail::format_double(row.box.cy) << ','
        << detail::format_double(row.box.w) << ','
        << detail::format_double(row.box.h) << ','
        << detail::format_double(row.box.theta) << ',' << row.n_cps << ','
        << row.n_mps << ',' << row.n_pos << ','
        << detail::format_double(row.semantic_center.x) << ','
        << detail::format_double(row.semantic_center.y) << '\n';
  }
  out.flush();
  detail::check_sink(out, "emit_csv");
}

inline void emit_json(const AssignmentSummary& summary, std::ostream& out) {
  nlohmann::json rows = nlohmann::json::array();
  for (const AssignmentSummary::Row& row : summary.rows) {
    rows.push_back(
        {{"gt", row.gt},
         {"class_id", row.class_id},
         {"box",
          {row.box.cx, row.box.cy, row.box.w, row.box.h, row.box.theta}},
         {"n_cps", row.n_cps},
         {"n_mps", row.n_mps},
         {"n_pos", row.n_pos},
         {"semantic_center", {row.semantic_center.x, row.semantic_center.y}},
         {"positives", row.positives}});
  }
  nlohmann::json root = {{"num_priors", summary.num_priors}, {"gts", rows}};
  out << root.dump(2) << '\n';
  out.flush();
  detail::check_sink(out, "emit_json");
}

}  // namespace oassign
