// Command-line front end: run the coarse-to-fine assigner on DOTA
// annotations, reproduce the imbalance sweep, or time the core kernels.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oassign/oassign.hpp"

namespace {

using oassign::EngineConfig;

struct AssignArgs {
  std::string config_path;
  std::string ann_path;
  std::string image_size;
  std::string preds_path;
  std::string out_path;
  std::string format = "csv";
};

struct AnalyzeArgs {
  std::string config_path;
  std::string out_path;
  std::string format = "both";
  double noise = 0.0;
};

std::pair<int, int> parse_image_size(const std::string& text) {
  auto sep = text.find_first_of("xX");
  if (sep == std::string::npos) {
    throw oassign::ConfigError("--image-size must look like 1024x1024");
  }
  int w = 0, h = 0;
  if (!oassign::detail::parse_int(text.substr(0, sep), &w) ||
      !oassign::detail::parse_int(text.substr(sep + 1), &h) || w <= 0 ||
      h <= 0) {
    throw oassign::ConfigError("--image-size must look like 1024x1024");
  }
  return {w, h};
}

EngineConfig load_config(const std::string& path) {
  if (path.empty()) return EngineConfig{};
  return oassign::load_engine_config(path);
}

std::vector<oassign::Prediction> load_predictions(const std::string& path,
                                                  std::size_t expected) {
  std::ifstream in(path);
  if (!in) throw oassign::ConfigError("cannot open predictions file '" + path + "'");
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw oassign::ConfigError(std::string("predictions are not valid JSON: ") +
                               e.what());
  }
  if (!root.is_array()) {
    throw oassign::ConfigError(
        "predictions must be an array of {cls_score, box:[cx,cy,w,h,theta]}");
  }
  std::vector<oassign::Prediction> preds;
  preds.reserve(root.size());
  try {
    for (const nlohmann::json& item : root) {
      const nlohmann::json& box = item.at("box");
      if (!box.is_array() || box.size() != 5) {
        throw oassign::ConfigError("prediction box must be [cx,cy,w,h,theta]");
      }
      preds.push_back(oassign::Prediction{
          item.at("cls_score").get<double>(),
          oassign::canonicalize(oassign::RotatedBox(
              box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
              box[3].get<double>(), box[4].get<double>()))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw oassign::ConfigError(std::string("malformed prediction entry: ") +
                               e.what());
  }
  if (preds.size() != expected) {
    throw oassign::ConfigError(
        "predictions count does not match the prior grid (" +
        std::to_string(preds.size()) + " vs " + std::to_string(expected) + ")");
  }
  return preds;
}

void write_file(const std::string& path, const std::string& what,
                const std::function<void(std::ostream&)>& emit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw oassign::SinkError("cannot open output file '" + path + "'");
  emit(out);
  std::cout << "wrote " << what << " to " << path << "\n";
}

int run_assign(const AssignArgs& args) {
  EngineConfig config = load_config(args.config_path);
  auto [image_w, image_h] = parse_image_size(args.image_size);

  std::ifstream ann(args.ann_path);
  if (!ann) {
    throw oassign::ConfigError("cannot open annotation file '" + args.ann_path + "'");
  }
  std::vector<oassign::AnnotationRecord> records =
      oassign::parse_dota_annotation(ann);

  std::map<std::string, int> class_map;
  for (const oassign::AnnotationRecord& rec : records) {
    class_map.emplace(rec.category, 0);
  }
  int next_id = 0;
  for (auto& entry : class_map) entry.second = next_id++;

  std::vector<oassign::GtInstance> gts;
  gts.reserve(records.size());
  for (const oassign::AnnotationRecord& rec : records) {
    gts.push_back(oassign::record_to_gt(rec, class_map));
  }

  oassign::PriorSet grid =
      oassign::build_prior_grid(config.fpn, image_w, image_h);
  std::vector<oassign::Prediction> preds;
  if (args.preds_path.empty()) {
    preds = oassign::prediction_oracle(grid, gts, 0.0, config.seed);
  } else {
    preds = load_predictions(args.preds_path, grid.size());
  }
  oassign::PriorSet refined = oassign::refine_toward(grid, preds);
  oassign::AssignmentResult result =
      oassign::assign(refined, gts, preds, config.assigner);
  oassign::AssignmentSummary summary = oassign::summarize(result, gts);

  std::size_t positives = 0;
  for (int label : result.prior_labels) {
    if (label >= 0) ++positives;
  }
  std::cout << records.size() << " gts, " << grid.size() << " priors, "
            << positives << " positives\n";

  if (args.format == "json") {
    write_file(args.out_path, "assignment summary (json)",
               [&](std::ostream& out) { oassign::emit_json(summary, out); });
  } else {
    write_file(args.out_path, "assignment summary (csv)",
               [&](std::ostream& out) { oassign::emit_csv(summary, out); });
  }
  return 0;
}

int run_analyze(const AnalyzeArgs& args) {
  EngineConfig config = load_config(args.config_path);
  oassign::PopulationSpec spec = config.population_or_standard();
  oassign::SweepResult sweep = oassign::run_imbalance_sweep(
      config.fpn, config.assigner, spec, args.noise);

  auto describe = [](const char* name, const oassign::ImbalanceReport& report) {
    std::cout << name << ": angle ratio "
              << oassign::detail::format_double(report.angle_ratio)
              << ", scale ratio "
              << oassign::detail::format_double(report.scale_ratio) << "\n";
  };
  describe("dcfl", sweep.dcfl);
  describe("max_iou", sweep.max_iou);

  bool csv = args.format == "csv" || args.format == "both";
  bool json = args.format == "json" || args.format == "both";
  auto emit_pair = [&](const std::string& tag,
                       const oassign::ImbalanceReport& report) {
    if (csv) {
      write_file(args.out_path + "." + tag + ".csv", tag + " report (csv)",
                 [&](std::ostream& out) { oassign::emit_csv(report, out); });
    }
    if (json) {
      write_file(args.out_path + "." + tag + ".json", tag + " report (json)",
                 [&](std::ostream& out) { oassign::emit_json(report, out); });
    }
  };
  emit_pair("dcfl", sweep.dcfl);
  emit_pair("max_iou", sweep.max_iou);
  return 0;
}

int run_bench(const std::string& config_path) {
  EngineConfig config = load_config(config_path);
  using Clock = std::chrono::steady_clock;
  auto ms = [](Clock::duration d) {
    return std::chrono::duration<double, std::milli>(d).count();
  };

  auto t0 = Clock::now();
  oassign::PriorSet grid = oassign::build_prior_grid(config.fpn, 1024, 1024);
  auto t1 = Clock::now();
  std::printf("grid        %8.2f ms  (%zu priors)\n", ms(t1 - t0), grid.size());

  oassign::Rng rng(config.seed);
  double sink = 0.0;
  constexpr int kPairs = 100000;
  std::vector<oassign::Gaussian2> gs;
  for (int i = 0; i < 64; ++i) {
    oassign::RotatedBox box(rng.uniform(0, 1024), rng.uniform(0, 1024),
                            rng.uniform(4, 128), rng.uniform(4, 128),
                            rng.uniform(-1.5, 1.5));
    gs.push_back(oassign::box_to_gaussian(box));
  }
  auto t2 = Clock::now();
  for (int i = 0; i < kPairs; ++i) {
    sink += oassign::gjsd(gs[i % 64], gs[(i * 7 + 13) % 64], oassign::Alpha{});
  }
  auto t3 = Clock::now();
  std::printf("gjsd x100k  %8.2f ms  (checksum %.3f)\n", ms(t3 - t2), sink);

  oassign::PopulationSpec spec = config.population_or_standard();
  std::vector<oassign::GtInstance> gts = oassign::synth_population(spec);
  oassign::PriorSet sweep_grid =
      oassign::build_prior_grid(config.fpn, spec.image_w, spec.image_h);
  std::vector<oassign::Prediction> preds =
      oassign::prediction_oracle(sweep_grid, gts, 0.0, spec.seed + 1);
  oassign::PriorSet refined = oassign::refine_toward(sweep_grid, preds);
  auto t4 = Clock::now();
  oassign::AssignmentResult dcfl =
      oassign::assign(refined, gts, preds, config.assigner);
  auto t5 = Clock::now();
  std::printf("assign      %8.2f ms  (%zu gts, %zu priors)\n", ms(t5 - t4),
              gts.size(), sweep_grid.size());

  auto t6 = Clock::now();
  oassign::AssignmentResult base =
      oassign::max_iou_assign(sweep_grid, gts, 0.5, 0.4, true);
  auto t7 = Clock::now();
  std::size_t dcfl_pos = 0, base_pos = 0;
  for (int label : dcfl.prior_labels) dcfl_pos += label >= 0;
  for (int label : base.prior_labels) base_pos += label >= 0;
  std::printf("max_iou     %8.2f ms  (%zu vs %zu positives)\n", ms(t7 - t6),
              base_pos, dcfl_pos);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label assignment for oriented tiny objects"};
  app.require_subcommand(1);

  AssignArgs assign_args;
  CLI::App* assign = app.add_subcommand(
      "assign", "Assign priors to DOTA-annotated ground truths");
  assign->add_option("--config", assign_args.config_path,
                     "Engine config JSON (defaults used when omitted)");
  assign->add_option("--ann", assign_args.ann_path, "DOTA annotation file")
      ->required();
  assign->add_option("--image-size", assign_args.image_size,
                     "Image size as WxH, e.g. 1024x1024")
      ->required();
  assign->add_option("--preds", assign_args.preds_path,
                     "Per-prior predictions JSON (oracle used when omitted)");
  assign->add_option("--out", assign_args.out_path, "Output file")->required();
  assign->add_option("--format", assign_args.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Run the imbalance sweep (coarse-to-fine vs overlap baseline)");
  analyze->add_option("--config", analyze_args.config_path,
                      "Engine config JSON (defaults used when omitted)");
  analyze->add_option("--out", analyze_args.out_path,
                      "Output basename; writes <out>.{dcfl,max_iou}.{csv,json}")
      ->required();
  analyze->add_option("--format", analyze_args.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  analyze->add_option("--noise", analyze_args.noise,
                      "Prediction oracle noise level (default 0)")
      ->check(CLI::NonNegativeNumber);

  std::string bench_config;
  CLI::App* bench = app.add_subcommand("bench", "Time the core kernels");
  bench->add_option("--config", bench_config,
                    "Engine config JSON (defaults used when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (assign->parsed()) return run_assign(assign_args);
    if (analyze->parsed()) return run_analyze(analyze_args);
    if (bench->parsed()) return run_bench(bench_config);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const oassign::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const oassign::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
