// stylerec — build pairwise garment-preference artifacts from annotated
// street-style data and serve recommendation queries over them.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stylerec/error.hpp"
#include "stylerec/evalio.hpp"
#include "stylerec/evalmetrics.hpp"
#include "stylerec/pipeline.hpp"
#include "stylerec/recommend.hpp"
#include "stylerec/service.hpp"
#include "stylerec/synthetic.hpp"

namespace {

using namespace stylerec;
using nlohmann::json;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  bool verbose = false;
};

PipelineConfig resolve_config(const GlobalFlags& flags) {
  PipelineConfig cfg;
  if (!flags.config_path.empty()) cfg = load_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.output_dir) cfg.output_dir = *flags.output_dir;
  return cfg;
}

void vlog(const GlobalFlags& flags, const std::string& msg) {
  if (flags.verbose) std::cerr << "[stylerec] " << msg << "\n";
}

// --- eval report rendering -------------------------------------------------

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v * 100.0);
  return buf;
}

int run_eval_segmentation(const std::string& pred_path,
                          const std::string& truth_path, bool as_json) {
  auto pred = load_street_annotations(pred_path);
  auto truth = load_street_annotations(truth_path);
  std::map<std::string, const StreetStyleAnnotation*> pred_by_id;
  for (const auto& a : pred) pred_by_id[a.image_id] = &a;

  std::vector<LabelMap> pred_maps, truth_maps;
  for (const auto& t : truth) {
    auto it = pred_by_id.find(t.image_id);
    if (it == pred_by_id.end())
      throw ValidationError("no prediction for image '" + t.image_id + "'");
    pred_maps.push_back(rasterize_labels(*it->second));
    truth_maps.push_back(rasterize_labels(t));
  }
  const std::size_t num_classes = kNumCategories + 1;  // + background
  SegReport report = mask_metrics(pred_maps, truth_maps, num_classes);

  auto class_name = [](std::size_t c) {
    return c == 0 ? std::string("Background")
                  : std::string(to_string(kAllCategories[c - 1]));
  };
  if (as_json) {
    json per_class = json::object();
    for (std::size_t c = 0; c < num_classes; ++c) {
      const SegClassResult& r = report.per_class[c];
      per_class[class_name(c)] = {
          {"iou", r.iou ? json(*r.iou) : json(nullptr)},
          {"pixel_accuracy",
           r.pixel_accuracy ? json(*r.pixel_accuracy) : json(nullptr)}};
    }
    json out = {{"task", "segmentation"},
                {"per_class", per_class},
                {"mean_iou", report.mean_iou ? json(*report.mean_iou) : json(nullptr)},
                {"mean_pixel_accuracy",
                 report.mean_pixel_accuracy ? json(*report.mean_pixel_accuracy)
                                            : json(nullptr)}};
    std::cout << out.dump() << "\n";
    return kExitOk;
  }
  std::printf("%-14s %10s %10s\n", "Class", "IoU", "PA");
  for (std::size_t c = 0; c < num_classes; ++c) {
    const SegClassResult& r = report.per_class[c];
    std::printf("%-14s %10s %10s\n", class_name(c).c_str(),
                r.iou ? pct(*r.iou).c_str() : "n/a",
                r.pixel_accuracy ? pct(*r.pixel_accuracy).c_str() : "n/a");
  }
  std::printf("%-14s %10s %10s\n", "Mean",
              report.mean_iou ? pct(*report.mean_iou).c_str() : "n/a",
              report.mean_pixel_accuracy
                  ? pct(*report.mean_pixel_accuracy).c_str()
                  : "n/a");
  return kExitOk;
}

int run_eval_detection(const std::string& pred_path,
                       const std::string& truth_path, double iou_threshold,
                       std::optional<double> nms_threshold, bool as_json) {
  auto predictions = load_detection_predictions(pred_path);
  auto annotations = load_street_annotations(truth_path);
  auto gts = ground_truth_boxes(annotations);
  if (nms_threshold) predictions = nms(predictions, *nms_threshold);

  std::vector<std::optional<double>> aps;
  for (GarmentCategory c : kAllCategories)
    aps.push_back(average_precision(predictions, gts, c, iou_threshold));
  bool any = false;
  for (const auto& ap : aps) any = any || ap.has_value();
  std::optional<double> map_value;
  if (any) map_value = mean_average_precision(aps);

  if (as_json) {
    json per_class = json::object();
    for (std::size_t i = 0; i < kAllCategories.size(); ++i)
      per_class[std::string(to_string(kAllCategories[i]))] =
          aps[i] ? json(*aps[i]) : json(nullptr);
    json out = {{"task", "detection"},
                {"iou_threshold", iou_threshold},
                {"per_class_ap", per_class},
                {"map", map_value ? json(*map_value) : json(nullptr)}};
    std::cout << out.dump() << "\n";
    return kExitOk;
  }
  std::printf("%-14s %10s\n", "Class", "AP");
  for (std::size_t i = 0; i < kAllCategories.size(); ++i)
    std::printf("%-14s %10s\n",
                std::string(to_string(kAllCategories[i])).c_str(),
                aps[i] ? pct(*aps[i]).c_str() : "no-GT");
  std::printf("%-14s %10s\n", "mAP",
              map_value ? pct(*map_value).c_str() : "n/a");
  return kExitOk;
}

int run_eval_classification(const std::string& pred_path,
                            const std::string& truth_path, bool as_json) {
  auto pred = load_labels(pred_path);
  auto truth = load_labels(truth_path);
  if (pred.size() != truth.size())
    throw ValidationError("prediction/truth id sets differ in size");
  std::vector<std::size_t> pred_idx, truth_idx;
  for (const auto& [id, label] : truth) {
    auto it = pred.find(id);
    if (it == pred.end())
      throw ValidationError("no prediction for id '" + id + "'");
    auto t = parse_pattern(label);
    if (!t) throw ValidationError("unknown pattern '" + label + "'");
    auto p = parse_pattern(it->second);
    if (!p) throw ValidationError("unknown pattern '" + it->second + "'");
    truth_idx.push_back(static_cast<std::size_t>(*t));
    pred_idx.push_back(static_cast<std::size_t>(*p));
  }
  ClassificationReport report =
      classification_report(pred_idx, truth_idx, kNumPatterns);

  if (as_json) {
    json per_class = json::object();
    for (std::size_t c = 0; c < kNumPatterns; ++c)
      per_class[std::string(to_string(kAllPatterns[c]))] =
          report.per_class_accuracy[c] ? json(*report.per_class_accuracy[c])
                                       : json(nullptr);
    json out = {{"task", "classification"},
                {"per_class_accuracy", per_class},
                {"mean_accuracy", report.mean_accuracy},
                {"overall_accuracy", report.overall_accuracy}};
    std::cout << out.dump() << "\n";
    return kExitOk;
  }
  std::printf("%-14s %10s\n", "Class", "Accuracy");
  for (std::size_t c = 0; c < kNumPatterns; ++c)
    std::printf("%-14s %10s\n",
                std::string(to_string(kAllPatterns[c])).c_str(),
                report.per_class_accuracy[c]
                    ? pct(*report.per_class_accuracy[c]).c_str()
                    : "n/a");
  std::printf("%-14s %10s\n", "Mean", pct(report.mean_accuracy).c_str());
  std::printf("%-14s %10s\n", "Overall", pct(report.overall_accuracy).c_str());
  return kExitOk;
}

int dispatch(int argc, char** argv) {
  CLI::App app{
      "stylerec: garment pairing knowledge from street-style annotations"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_path,
                 "Pipeline config JSON (flags override file values)");
  std::uint64_t seed_flag = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_flag, "Random seed for deterministic runs");
  std::string output_dir_flag;
  auto* out_opt = app.add_option("--output-dir", output_dir_flag,
                                 "Artifact directory (build outputs / inputs)");
  app.add_flag("--verbose", flags.verbose, "Log progress to stderr");

  // generate-synthetic
  auto* gen = app.add_subcommand(
      "generate-synthetic",
      "Generate a synthetic dataset with recorded ground truth");
  SyntheticConfig synth;
  gen->add_option("--images", synth.images, "Number of street-style images");
  gen->add_option("--planted-colors", synth.planted_colors,
                  "Planted color clusters per category");
  gen->add_option("--items-per-category", synth.items_per_category,
                  "Inventory items per category");
  gen->add_option("--feature-dim", synth.feature_dim,
                  "Feature vector dimension");
  gen->add_option("--sigma", synth.color_sigma,
                  "Pixel color spread inside a cluster");
  gen->add_option("--unassigned-fraction", synth.unassigned_fraction,
                  "Fraction of images without person boxes");

  // build-palettes
  auto* palettes_cmd = app.add_subcommand(
      "build-palettes", "k-means color maps per garment category");
  std::string annotations_flag, inventory_flag, street_feat_flag,
      inventory_feat_flag;
  palettes_cmd->add_option("--annotations", annotations_flag,
                           "Street-style annotations file");
  std::uint32_t palette_k_flag = 0;
  auto* palette_k_opt = palettes_cmd->add_option(
      "--k", palette_k_flag, "Palette size (bins per category)");

  // build-cooccur
  auto* cooccur_cmd = app.add_subcommand(
      "build-cooccur", "Co-occurrence matrices for the six category pairs");
  std::string cooccur_kind;
  cooccur_cmd->add_option("--kind", cooccur_kind, "color or pattern")
      ->required();
  cooccur_cmd->add_option("--annotations", annotations_flag,
                          "Street-style annotations file");
  double alpha_flag = -1, tau_flag = -1;
  auto* alpha_opt =
      cooccur_cmd->add_option("--alpha", alpha_flag, "Laplace smoothing");
  auto* tau_opt = cooccur_cmd->add_option(
      "--tau", tau_flag, "Garment-in-person containment threshold");

  // build-joint-table
  auto* table_cmd = app.add_subcommand(
      "build-joint-table", "Retrieval joint tables for the six pairs");
  table_cmd->add_option("--annotations", annotations_flag,
                        "Street-style annotations file");
  table_cmd->add_option("--inventory", inventory_flag, "Inventory catalog");
  table_cmd->add_option("--street-features", street_feat_flag,
                        "Street feature store");
  table_cmd->add_option("--inventory-features", inventory_feat_flag,
                        "Inventory feature store");
  std::uint32_t retrieve_k_flag = 0;
  auto* retrieve_k_opt = table_cmd->add_option(
      "--k", retrieve_k_flag, "Retrieval candidates per side");
  std::string score_rule_flag;
  auto* score_rule_opt = table_cmd->add_option(
      "--score-rule", score_rule_flag, "product or count");

  // recommend
  auto* rec_cmd =
      app.add_subcommand("recommend", "Rank inventory items for a query");
  std::string query_file, query_inline;
  rec_cmd->add_option("--query-file", query_file, "Query JSON file");
  rec_cmd->add_option("--query", query_inline, "Inline query JSON");
  rec_cmd->add_option("--inventory", inventory_flag, "Inventory catalog");
  rec_cmd->add_option("--inventory-features", inventory_feat_flag,
                      "Inventory feature store");
  std::uint32_t limit_flag = 0;
  auto* limit_opt =
      rec_cmd->add_option("--limit", limit_flag, "Maximum items returned");

  // eval
  auto* eval_cmd = app.add_subcommand(
      "eval", "Segmentation / detection / classification metrics");
  std::string eval_task, eval_pred, eval_truth;
  eval_cmd->add_option("--task", eval_task,
                       "segmentation, detection or classification")
      ->required();
  eval_cmd->add_option("--predictions", eval_pred, "Predictions file")
      ->required();
  eval_cmd->add_option("--truth", eval_truth, "Ground-truth file")->required();
  double eval_iou = 0.5;
  eval_cmd->add_option("--iou-threshold", eval_iou,
                       "Detection match threshold (IoU must exceed it)");
  double nms_flag = -1;
  auto* nms_opt = eval_cmd->add_option(
      "--nms", nms_flag, "Apply NMS with this IoU threshold first");
  bool eval_json = false;
  eval_cmd->add_flag("--json", eval_json, "Emit the report as JSON");

  // serve
  auto* serve_cmd =
      app.add_subcommand("serve", "JSON-over-HTTP recommendation service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port (0 picks a free port)");
  serve_cmd->add_option("--inventory", inventory_flag, "Inventory catalog");
  serve_cmd->add_option("--inventory-features", inventory_feat_flag,
                        "Inventory feature store");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (seed_opt->count()) flags.seed = seed_flag;
  if (out_opt->count()) flags.output_dir = output_dir_flag;

  PipelineConfig cfg = resolve_config(flags);
  if (!annotations_flag.empty()) cfg.annotations = annotations_flag;
  if (!inventory_flag.empty()) cfg.inventory = inventory_flag;
  if (!street_feat_flag.empty()) cfg.street_features = street_feat_flag;
  if (!inventory_feat_flag.empty()) cfg.inventory_features = inventory_feat_flag;
  if (palette_k_opt->count()) cfg.palette_k = palette_k_flag;
  if (alpha_opt->count()) cfg.alpha = alpha_flag;
  if (tau_opt->count()) cfg.tau = tau_flag;
  if (retrieve_k_opt->count()) cfg.retrieve_k = retrieve_k_flag;
  if (score_rule_opt->count()) cfg.score_rule = score_rule_flag;

  if (app.got_subcommand(gen)) {
    synth.seed = cfg.seed;
    vlog(flags, "generating synthetic dataset into " + cfg.output_dir);
    SyntheticDataset ds = generate_synthetic(synth);
    write_synthetic_dataset(cfg.output_dir, ds, synth.feature_dim);
    json summary = {{"images", ds.annotations.size()},
                    {"items", ds.catalog.size()},
                    {"street_features", ds.street_features.size()},
                    {"inventory_features", ds.inventory_features.size()},
                    {"output_dir", cfg.output_dir}};
    std::cout << summary.dump() << "\n";
    return kExitOk;
  }
  if (app.got_subcommand(palettes_cmd)) {
    vlog(flags, "building palettes (k=" + std::to_string(cfg.palette_k) + ")");
    json summary = build_palettes_cmd(cfg);
    std::cout << summary.dump() << "\n";
    return kExitOk;
  }
  if (app.got_subcommand(cooccur_cmd)) {
    vlog(flags, "building " + cooccur_kind + " co-occurrence matrices");
    json summary = build_cooccur_cmd(cfg, cooccur_kind);
    std::cout << summary.dump() << "\n";
    return kExitOk;
  }
  if (app.got_subcommand(table_cmd)) {
    vlog(flags, "building joint tables");
    json summary = build_joint_tables_cmd(cfg);
    std::cout << summary.dump() << "\n";
    return kExitOk;
  }
  if (app.got_subcommand(rec_cmd)) {
    if (query_file.empty() == query_inline.empty())
      throw UsageError("recommend needs exactly one of --query-file/--query");
    json qj;
    if (!query_file.empty()) {
      std::ifstream in(query_file, std::ios::binary);
      if (!in) throw NotFoundError("cannot open query file: " + query_file);
      qj = json::parse(in, nullptr, false);
    } else {
      qj = json::parse(query_inline, nullptr, false);
    }
    if (qj.is_discarded()) throw ParseError("query is not valid JSON");
    Query q = query_from_json(qj);
    if (limit_opt->count()) q.limit = limit_flag;
    LoadedArtifacts loaded = load_artifacts(cfg);
    Recommendation rec = recommend_query(q, loaded.artifacts);
    std::cout << to_json(rec).dump() << "\n";
    return kExitOk;
  }
  if (app.got_subcommand(eval_cmd)) {
    std::optional<double> nms_threshold;
    if (nms_opt->count()) nms_threshold = nms_flag;
    if (eval_task == "segmentation")
      return run_eval_segmentation(eval_pred, eval_truth, eval_json);
    if (eval_task == "detection")
      return run_eval_detection(eval_pred, eval_truth, eval_iou, nms_threshold,
                                eval_json);
    if (eval_task == "classification")
      return run_eval_classification(eval_pred, eval_truth, eval_json);
    throw UsageError("unknown eval task '" + eval_task + "'");
  }
  if (app.got_subcommand(serve_cmd)) {
    LoadedArtifacts loaded = load_artifacts(cfg);
    ServiceState state = ServiceState::from_loaded(std::move(loaded));
    httplib::Server server;
    register_routes(server, state);
    int bound = port;
    if (port == 0) {
      bound = server.bind_to_any_port(host);
      if (bound < 0) throw Error("cannot bind to " + host);
    } else if (!server.bind_to_port(host, port)) {
      throw Error("cannot bind to " + host + ":" + std::to_string(port));
    }
    std::cout << "listening on " << host << ":" << bound << std::endl;
    server.listen_after_bind();
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const stylerec::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return stylerec::kExitUsage;
  } catch (const stylerec::NotFoundError& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return stylerec::kExitMissingArtifact;
  } catch (const stylerec::QueryError& e) {
    std::cerr << "query error: " << e.what() << "\n";
    return stylerec::kExitQuery;
  } catch (const stylerec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return stylerec::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return stylerec::kExitInternal;
  }
}
