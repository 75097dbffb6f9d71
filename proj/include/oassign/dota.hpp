#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "oassign/assigner.hpp"
#include "oassign/errors.hpp"
#include "oassign/geometry.hpp"

namespace oassign {

// One DOTA annotation line: quad corners, category token, difficulty flag.
struct AnnotationRecord {
  std::array<double, 8> quad{};
  std::string category;
  int difficulty = 0;
  int line = 0;  // 1-based source line
};

namespace detail {

inline bool parse_double(std::string_view tok, double* out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last;
}

inline bool parse_int(std::string_view tok, int* out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last;
}

inline bool quad_is_simple(const std::array<double, 8>& q) {
  Vec2 v[4] = {{q[0], q[1]}, {q[2], q[3]}, {q[4], q[5]}, {q[6], q[7]}};
  // A quad self-intersects iff one of the two diagonally opposite edge pairs
  // properly crosses: (v0v1, v2v3) or (v1v2, v3v0).
  auto crosses = [](Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    double d1 = cross3(a, b, c);
    double d2 = cross3(a, b, d);
    double d3 = cross3(c, d, a);
    double d4 = cross3(c, d, b);
    return ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
           ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0));
  };
  if (crosses(v[0], v[1], v[2], v[3])) return false;
  if (crosses(v[1], v[2], v[3], v[0])) return false;
  return true;
}

}  // namespace detail

// Parses DOTA annotation text. Lines starting with `imagesource:` or `gsd:`
// and blank lines are skipped; every other line must hold 8 coordinates, a
// category and a difficulty flag, whitespace-separated.
inline std::vector<AnnotationRecord> parse_dota_annotation(std::istream& in) {
  std::vector<AnnotationRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (fields >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens[0].rfind("imagesource:", 0) == 0 ||
        tokens[0].rfind("gsd:", 0) == 0) {
      continue;
    }
    if (tokens.size() != 10) {
      throw ParseError(line_no, "expected 8 coordinates, category, difficulty");
    }
    AnnotationRecord rec;
    rec.line = line_no;
    for (int i = 0; i < 8; ++i) {
      if (!detail::parse_double(tokens[i], &rec.quad[i])) {
        throw ParseError(line_no, "non-numeric coordinate '" + tokens[i] + "'");
      }
      if (!std::isfinite(rec.quad[i])) {
        throw ParseError(line_no, "non-finite coordinate '" + tokens[i] + "'");
      }
    }
    rec.category = tokens[8];
    if (!detail::parse_int(tokens[9], &rec.difficulty)) {
      throw ParseError(line_no, "non-integer difficulty '" + tokens[9] + "'");
    }
    if (!detail::quad_is_simple(rec.quad)) {
      throw ParseError(line_no, "self-intersecting quad");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<AnnotationRecord> parse_dota_annotation(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dota_annotation(in);
}

// Tightest oriented box around the quad, as a gt instance.
inline GtInstance record_to_gt(const AnnotationRecord& rec,
                               const std::map<std::string, int>& class_map) {
  auto it = class_map.find(rec.category);
  if (it == class_map.end()) {
    throw UnknownCategory("unknown category '" + rec.category + "'");
  }
  std::array<Vec2, 4> pts = {Vec2{rec.quad[0], rec.quad[1]},
                             Vec2{rec.quad[2], rec.quad[3]},
                             Vec2{rec.quad[4], rec.quad[5]},
                             Vec2{rec.quad[6], rec.quad[7]}};
  RotatedBox box = min_area_rect(std::span<const Vec2>(pts));
  return GtInstance::make(box, it->second);
}

}  // namespace oassign
