#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "oassign/analysis.hpp"
#include "oassign/assigner.hpp"
#include "oassign/errors.hpp"
#include "oassign/priors.hpp"

namespace oassign {

struct EngineConfig {
  FpnConfig fpn;
  AssignerConfig assigner;
  std::optional<PopulationSpec> population;
  std::uint64_t seed = 0;

  void validate() const {
    fpn.validate();
    assigner.validate();
    if (population) population->validate();
  }

  // The population to analyze: the configured one, or the standard sweep
  // seeded from the engine seed.
  PopulationSpec population_or_standard() const {
    if (population) return *population;
    PopulationSpec spec = PopulationSpec::standard();
    spec.seed = seed;
    return spec;
  }
};

namespace detail {

using Json = nlohmann::json;

inline void reject_unknown(const Json& obj, const std::set<std::string>& known,
                           const std::string& scope) {
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) {
      throw ConfigError("unknown config key '" + scope + item.key() + "'");
    }
  }
}

template <typename T>
inline T fetch(const Json& obj, const char* key, T fallback,
               const std::string& scope) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config key '" + scope + key + "' has the wrong type");
  }
}

inline std::vector<BinRange> fetch_bins(const Json& obj, const char* key,
                                        std::vector<BinRange> fallback,
                                        const std::string& scope) {
  if (!obj.contains(key)) return fallback;
  const Json& arr = obj.at(key);
  if (!arr.is_array()) {
    throw ConfigError("config key '" + scope + key + "' must be an array of [lo, hi] pairs");
  }
  std::vector<BinRange> bins;
  for (const Json& item : arr) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number() ||
        !item[1].is_number()) {
      throw ConfigError("config key '" + scope + key + "' must hold [lo, hi] pairs");
    }
    bins.push_back({item[0].get<double>(), item[1].get<double>()});
  }
  return bins;
}

inline DivergenceKind parse_measurement(const std::string& name) {
  if (name == "kld") return DivergenceKind::kld;
  if (name == "gwd") return DivergenceKind::gwd;
  if (name == "gjsd") return DivergenceKind::gjsd;
  throw ConfigError("assigner.measurement must be one of kld, gwd, gjsd");
}

inline MatchStrategy parse_strategy(const std::string& name) {
  if (name == "cross_layer") return MatchStrategy::cross_layer;
  if (name == "single_layer") return MatchStrategy::single_layer;
  if (name == "all_layer") return MatchStrategy::all_layer;
  throw ConfigError(
      "assigner.strategy must be one of cross_layer, single_layer, all_layer");
}

}  // namespace detail

inline const char* to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::kld: return "kld";
    case DivergenceKind::gwd: return "gwd";
    case DivergenceKind::gjsd: return "gjsd";
  }
  return "gjsd";
}

inline const char* to_string(MatchStrategy strategy) {
  switch (strategy) {
    case MatchStrategy::cross_layer: return "cross_layer";
    case MatchStrategy::single_layer: return "single_layer";
    case MatchStrategy::all_layer: return "all_layer";
  }
  return "cross_layer";
}

// Strict schema: every key must be known, missing keys take the defaults.
inline EngineConfig parse_engine_config(const nlohmann::json& root) {
  using detail::Json;
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  detail::reject_unknown(root, {"fpn", "assigner", "population", "seed"}, "");

  EngineConfig config;
  config.seed = detail::fetch<std::uint64_t>(root, "seed", 0, "");

  if (root.contains("fpn")) {
    const Json& fpn = root.at("fpn");
    if (!fpn.is_object()) throw ConfigError("config key 'fpn' must be an object");
    detail::reject_unknown(fpn, {"strides", "prior_scale", "point_offset"},
                           "fpn.");
    config.fpn.strides = detail::fetch<std::vector<int>>(
        fpn, "strides", config.fpn.strides, "fpn.");
    config.fpn.prior_scale =
        detail::fetch<double>(fpn, "prior_scale", config.fpn.prior_scale, "fpn.");
    config.fpn.point_offset = detail::fetch<double>(
        fpn, "point_offset", config.fpn.point_offset, "fpn.");
  }

  if (root.contains("assigner")) {
    const Json& as = root.at("assigner");
    if (!as.is_object()) throw ConfigError("config key 'assigner' must be an object");
    detail::reject_unknown(
        as, {"k", "q", "g", "w1", "measurement", "strategy", "alpha"},
        "assigner.");
    config.assigner.k = detail::fetch<int>(as, "k", config.assigner.k, "assigner.");
    config.assigner.q = detail::fetch<int>(as, "q", config.assigner.q, "assigner.");
    config.assigner.g = detail::fetch<double>(as, "g", config.assigner.g, "assigner.");
    config.assigner.w1 =
        detail::fetch<double>(as, "w1", config.assigner.w1, "assigner.");
    config.assigner.measurement = detail::parse_measurement(
        detail::fetch<std::string>(as, "measurement", "gjsd", "assigner."));
    config.assigner.strategy = detail::parse_strategy(
        detail::fetch<std::string>(as, "strategy", "cross_layer", "assigner."));
    double alpha = detail::fetch<double>(as, "alpha", 0.5, "assigner.");
    config.assigner.alpha = Alpha(alpha);
  }

  if (root.contains("population")) {
    const Json& pop = root.at("population");
    if (!pop.is_object()) throw ConfigError("config key 'population' must be an object");
    detail::reject_unknown(pop,
                           {"angle_bins", "scale_bins", "aspect", "per_bin",
                            "spacing", "image_size", "seed"},
                           "population.");
    PopulationSpec spec = PopulationSpec::standard();
    spec.seed = config.seed;
    spec.angle_bins =
        detail::fetch_bins(pop, "angle_bins", spec.angle_bins, "population.");
    spec.scale_bins =
        detail::fetch_bins(pop, "scale_bins", spec.scale_bins, "population.");
    spec.aspect = detail::fetch<double>(pop, "aspect", spec.aspect, "population.");
    spec.per_bin = detail::fetch<int>(pop, "per_bin", spec.per_bin, "population.");
    spec.spacing =
        detail::fetch<double>(pop, "spacing", spec.spacing, "population.");
    if (pop.contains("image_size")) {
      const Json& sz = pop.at("image_size");
      if (!sz.is_array() || sz.size() != 2 || !sz[0].is_number_integer() ||
          !sz[1].is_number_integer()) {
        throw ConfigError("population.image_size must be [width, height]");
      }
      spec.image_w = sz[0].get<int>();
      spec.image_h = sz[1].get<int>();
    }
    spec.seed = detail::fetch<std::uint64_t>(pop, "seed", spec.seed, "population.");
    config.population = spec;
  }

  config.validate();
  return config;
}

inline EngineConfig parse_engine_config(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_engine_config(root);
}

inline EngineConfig load_engine_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_engine_config(text);
}

}  // namespace oassign
