#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylerec/association.hpp"
#include "stylerec/cooccur.hpp"
#include "stylerec/corpus.hpp"
#include "stylerec/error.hpp"
#include "stylerec/feature_store.hpp"
#include "stylerec/ingest.hpp"
#include "stylerec/palette.hpp"
#include "stylerec/recommend.hpp"
#include "stylerec/retrieval.hpp"
#include "stylerec/synthetic.hpp"

namespace stylerec {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
  // inputs
  std::string annotations;
  std::string inventory;
  std::string street_features;
  std::string inventory_features;
  // outputs
  std::string output_dir = "out";
  // knobs
  std::uint32_t palette_k = 130;
  double alpha = 1.0;
  double tau = 0.9;
  std::uint32_t retrieve_k = 5;  // table candidates per side
  std::uint32_t retrieve_m = 5;  // query-side rows aggregated per query
  std::uint32_t match_k = 3;     // bins/patterns consulted per query
  std::string score_rule = "product";
  std::uint64_t seed = 42;
  double mask_margin = 2.0;
  double min_chroma = 10.0;
  double hue_tolerance = 15.0;

  void validate() const {
    if (palette_k == 0) throw ValidationError("palette_k must be >= 1");
    if (alpha < 0) throw ValidationError("alpha must be >= 0");
    if (!(tau > 0 && tau <= 1)) throw ValidationError("tau must be in (0,1]");
    if (retrieve_k == 0) throw ValidationError("retrieve_k must be >= 1");
    if (retrieve_m == 0) throw ValidationError("retrieve_m must be >= 1");
    if (match_k == 0) throw ValidationError("match_k must be >= 1");
    if (!parse_score_rule(score_rule))
      throw ValidationError("unknown score rule '" + score_rule + "'");
    if (mask_margin < 0) throw ValidationError("mask_margin must be >= 0");
    if (min_chroma < 0) throw ValidationError("min_chroma must be >= 0");
    if (!(hue_tolerance > 0 && hue_tolerance <= 180))
      throw ValidationError("hue_tolerance must be in (0,180]");
  }
};

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  return {{"annotations", c.annotations},
          {"inventory", c.inventory},
          {"street_features", c.street_features},
          {"inventory_features", c.inventory_features},
          {"output_dir", c.output_dir},
          {"palette_k", c.palette_k},
          {"alpha", c.alpha},
          {"tau", c.tau},
          {"retrieve_k", c.retrieve_k},
          {"retrieve_m", c.retrieve_m},
          {"match_k", c.match_k},
          {"score_rule", c.score_rule},
          {"seed", c.seed},
          {"mask_margin", c.mask_margin},
          {"min_chroma", c.min_chroma},
          {"hue_tolerance", c.hue_tolerance}};
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  PipelineConfig c;
  auto set_string = [&](const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw ParseError("expected a string", 0, key);
    out = j[key].get<std::string>();
  };
  auto set_double = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw ParseError("expected a number", 0, key);
    out = j[key].get<double>();
  };
  auto set_u32 = [&](const char* key, std::uint32_t& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned())
      throw ParseError("expected a non-negative integer", 0, key);
    out = j[key].get<std::uint32_t>();
  };
  set_string("annotations", c.annotations);
  set_string("inventory", c.inventory);
  set_string("street_features", c.street_features);
  set_string("inventory_features", c.inventory_features);
  set_string("output_dir", c.output_dir);
  set_u32("palette_k", c.palette_k);
  set_double("alpha", c.alpha);
  set_double("tau", c.tau);
  set_u32("retrieve_k", c.retrieve_k);
  set_u32("retrieve_m", c.retrieve_m);
  set_u32("match_k", c.match_k);
  set_string("score_rule", c.score_rule);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned())
      throw ParseError("expected a non-negative integer", 0, "seed");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  set_double("mask_margin", c.mask_margin);
  set_double("min_chroma", c.min_chroma);
  set_double("hue_tolerance", c.hue_tolerance);
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open config: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ParseError(path.string() + ": invalid JSON config");
  return config_from_json(j);
}

inline void save_config(const std::filesystem::path& path,
                        const PipelineConfig& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  out << config_to_json(c).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Artifact layout
// ---------------------------------------------------------------------------

struct ArtifactPaths {
  std::filesystem::path root;

  explicit ArtifactPaths(const std::filesystem::path& dir) : root(dir) {}

  std::filesystem::path palette(GarmentCategory c) const {
    return root / "palettes" / (std::string(to_string(c)) + ".palette");
  }
  std::filesystem::path color_matrix(PairKind k) const {
    return root / "cooccur" / "color" / (to_string(k) + ".matrix");
  }
  std::filesystem::path pattern_matrix(PairKind k) const {
    return root / "cooccur" / "pattern" / (to_string(k) + ".matrix");
  }
  std::filesystem::path joint_table(PairKind k) const {
    return root / "tables" / (to_string(k) + ".table");
  }
  std::filesystem::path pairs() const { return root / "pairs.jsonl"; }
};

// FNV-1a, for build metadata in health reports.
inline std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

// ---------------------------------------------------------------------------
// Build stages
// ---------------------------------------------------------------------------

// One palette per category that has segmented pixels. Categories without
// pixels are skipped and named in the summary.
inline nlohmann::json build_palettes_cmd(const PipelineConfig& cfg) {
  cfg.validate();
  auto annotations = load_street_annotations(cfg.annotations,
                                             {.mask_margin = cfg.mask_margin});
  ArtifactPaths paths(cfg.output_dir);
  std::filesystem::create_directories(paths.root / "palettes");

  nlohmann::json summary = nlohmann::json::object();
  for (GarmentCategory c : kAllCategories) {
    std::vector<LabColor> pixels;
    for (const StreetStyleAnnotation& a : annotations)
      for (const GarmentDetection& g : a.garments)
        if (g.category == c)
          pixels.insert(pixels.end(), g.pixels.begin(), g.pixels.end());
    const std::string name(to_string(c));
    if (pixels.empty()) {
      summary[name] = {{"skipped", "no masked pixels"}};
      continue;
    }
    KMeansResult result = build_palette(pixels, cfg.palette_k, cfg.seed, c);
    save_palette(paths.palette(c), result.palette);
    summary[name] = {{"pixels", pixels.size()},
                     {"k", result.palette.size()},
                     {"k_clamped", result.k_clamped},
                     {"iterations", result.palette.iterations},
                     {"inertia", result.palette.final_inertia}};
  }
  return summary;
}

inline std::map<PairKind, std::vector<AssociationPair>> partition_pairs(
    std::vector<AssociationPair> pairs) {
  std::map<PairKind, std::vector<AssociationPair>> by_kind;
  for (PairKind k : kAllPairKinds) by_kind[k];
  for (AssociationPair& p : pairs) by_kind[p.kind].push_back(std::move(p));
  return by_kind;
}

// Builds the six per-kind matrices of the requested flavor. Color matrices
// need palettes for every category that appears in a pair.
inline nlohmann::json build_cooccur_cmd(const PipelineConfig& cfg,
                                        const std::string& kind_flavor) {
  cfg.validate();
  if (kind_flavor != "color" && kind_flavor != "pattern")
    throw UsageError("build-cooccur kind must be 'color' or 'pattern'");
  auto annotations = load_street_annotations(cfg.annotations,
                                             {.mask_margin = cfg.mask_margin});
  AnnotationCorpus corpus(annotations);
  auto pairs = associate_all(annotations, {.tau = cfg.tau});
  ArtifactPaths paths(cfg.output_dir);
  std::filesystem::create_directories(paths.root / "cooccur" / kind_flavor);
  save_pairs(paths.pairs(), pairs);

  std::map<GarmentCategory, Palette> palettes;
  if (kind_flavor == "color") {
    for (GarmentCategory c : kAllCategories) {
      const auto path = paths.palette(c);
      if (std::filesystem::exists(path)) palettes[c] = load_palette(path);
    }
  }

  auto by_kind = partition_pairs(std::move(pairs));
  nlohmann::json summary = nlohmann::json::object();
  for (PairKind kind : kAllPairKinds) {
    BuildReport report;
    CooccurrenceMatrix m;
    if (kind_flavor == "color") {
      const GarmentCategory tc = top_category(kind), bc = bottom_category(kind);
      if (!palettes.count(tc) || !palettes.count(bc))
        throw NotFoundError("missing palette for " + to_string(kind) +
                            ": run build-palettes first");
      m = build_color_matrix(kind, by_kind[kind], corpus, palettes.at(tc),
                             palettes.at(bc), cfg.alpha, &report);
      save_matrix(paths.color_matrix(kind), m);
    } else {
      m = build_pattern_matrix(kind, by_kind[kind], corpus, cfg.alpha, &report);
      save_matrix(paths.pattern_matrix(kind), m);
    }
    nlohmann::json skip = nlohmann::json::object();
    for (const auto& [reason, n] : report.skip_reasons) skip[reason] = n;
    summary[to_string(kind)] = {{"pairs", by_kind[kind].size()},
                                {"used", report.used},
                                {"skipped", report.skipped},
                                {"skip_reasons", skip},
                                {"total", m.total()}};
  }
  return summary;
}

// One joint table per schema pair, built from street features against the
// inventory store.
inline nlohmann::json build_joint_tables_cmd(const PipelineConfig& cfg) {
  cfg.validate();
  auto annotations = load_street_annotations(cfg.annotations,
                                             {.mask_margin = cfg.mask_margin});
  AnnotationCorpus corpus(annotations);
  auto pairs = associate_all(annotations, {.tau = cfg.tau});
  FeatureStore street = load_features(cfg.street_features);
  FeatureStore inventory = load_features(cfg.inventory_features);
  Catalog catalog = load_inventory(cfg.inventory);
  InventoryFeatureIndex index(catalog);

  ArtifactPaths paths(cfg.output_dir);
  std::filesystem::create_directories(paths.root / "tables");

  JointBuildConfig jcfg{cfg.retrieve_k, *parse_score_rule(cfg.score_rule)};
  auto by_kind = partition_pairs(std::move(pairs));
  nlohmann::json summary = nlohmann::json::object();
  for (PairKind kind : kAllPairKinds) {
    BuildReport report;
    JointTable t = build_joint_table(kind, by_kind[kind], corpus, street,
                                     inventory, index, jcfg, &report);
    save_joint_table(paths.joint_table(kind), t);
    summary[to_string(kind)] = {{"pairs", by_kind[kind].size()},
                                {"used", report.used},
                                {"skipped", report.skipped},
                                {"entries", t.scores.size()}};
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Artifact loading
// ---------------------------------------------------------------------------

struct LoadedArtifacts {
  Artifacts artifacts;
  nlohmann::json metadata;  // per-file hashes plus seed/version info
  std::vector<std::string> missing;
};

// Loads whatever exists under the artifact directory plus the catalog and
// inventory features named in the config. Strategies report anything that
// is still missing when a query needs it.
inline LoadedArtifacts load_artifacts(const PipelineConfig& cfg) {
  cfg.validate();
  LoadedArtifacts loaded;
  Artifacts& art = loaded.artifacts;
  art.min_chroma = cfg.min_chroma;
  art.hue_tolerance = cfg.hue_tolerance;
  art.retrieve_m = cfg.retrieve_m;
  ArtifactPaths paths(cfg.output_dir);
  nlohmann::json files = nlohmann::json::object();

  auto note = [&](const std::filesystem::path& p) {
    files[p.string()] = file_hash(p);
  };

  for (GarmentCategory c : kAllCategories) {
    const auto path = paths.palette(c);
    if (!std::filesystem::exists(path)) {
      loaded.missing.push_back(path.string());
      continue;
    }
    art.palettes[c] = load_palette(path);
    note(path);
  }
  for (PairKind k : kAllPairKinds) {
    const auto color_path = paths.color_matrix(k);
    if (std::filesystem::exists(color_path)) {
      art.color_matrices[k] = load_matrix(color_path);
      note(color_path);
    } else {
      loaded.missing.push_back(color_path.string());
    }
    const auto pattern_path = paths.pattern_matrix(k);
    if (std::filesystem::exists(pattern_path)) {
      art.pattern_matrices[k] = load_matrix(pattern_path);
      note(pattern_path);
    } else {
      loaded.missing.push_back(pattern_path.string());
    }
    const auto table_path = paths.joint_table(k);
    if (std::filesystem::exists(table_path)) {
      art.joint_tables[k] = load_joint_table(table_path);
      note(table_path);
    } else {
      loaded.missing.push_back(table_path.string());
    }
  }
  if (!cfg.inventory.empty() && std::filesystem::exists(cfg.inventory)) {
    art.catalog = load_inventory(cfg.inventory);
    resolve_dominant_bins(*art.catalog, art.palettes);
    note(cfg.inventory);
  } else {
    loaded.missing.push_back(cfg.inventory.empty() ? "<inventory catalog>"
                                                   : cfg.inventory);
  }
  if (!cfg.inventory_features.empty() &&
      std::filesystem::exists(cfg.inventory_features)) {
    art.inventory_features = load_features(cfg.inventory_features);
    note(cfg.inventory_features);
  } else {
    loaded.missing.push_back(cfg.inventory_features.empty()
                                 ? "<inventory features>"
                                 : cfg.inventory_features);
  }

  loaded.metadata = {{"seed", cfg.seed},
                     {"palette_k", cfg.palette_k},
                     {"alpha", cfg.alpha},
                     {"score_rule", cfg.score_rule},
                     {"files", files}};
  return loaded;
}

}  // namespace stylerec
