#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylerec/association.hpp"
#include "stylerec/cooccur.hpp"
#include "stylerec/error.hpp"
#include "stylerec/feature_store.hpp"
#include "stylerec/ingest.hpp"
#include "stylerec/palette.hpp"
#include "stylerec/retrieval.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

enum class Strategy : std::uint8_t {
  ColorCooccur,
  ColorWheel,
  PatternCooccur,
  RetrievalTable,
};

enum class WheelMode : std::uint8_t { Complementary, Triadic };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::ColorCooccur:   return "color";
    case Strategy::ColorWheel:     return "wheel";
    case Strategy::PatternCooccur: return "pattern";
    case Strategy::RetrievalTable: return "retrieval";
  }
  throw Error("invalid Strategy value");
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
  if (s == "color") return Strategy::ColorCooccur;
  if (s == "wheel") return Strategy::ColorWheel;
  if (s == "pattern") return Strategy::PatternCooccur;
  if (s == "retrieval") return Strategy::RetrievalTable;
  return std::nullopt;
}

inline std::string_view to_string(WheelMode m) {
  return m == WheelMode::Complementary ? "complementary" : "triadic";
}

inline std::optional<WheelMode> parse_wheel_mode(std::string_view s) {
  if (s == "complementary") return WheelMode::Complementary;
  if (s == "triadic") return WheelMode::Triadic;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Query / result types
// ---------------------------------------------------------------------------

struct Query {
  GarmentCategory query_category = GarmentCategory::TopsBlouses;
  GarmentCategory target_category = GarmentCategory::Trousers;
  Strategy strategy = Strategy::ColorCooccur;
  WheelMode wheel_mode = WheelMode::Complementary;
  std::vector<LabColor> pixels;           // color strategies
  std::optional<PatternClass> pattern;    // pattern strategy
  std::vector<float> feature;             // retrieval strategy
  std::uint32_t limit = 10;
  std::uint32_t match_k = 3;  // bins/patterns consulted per query

  // Throws UsageError when the strategy/payload combination is invalid.
  void validate() const {
    if (limit == 0) throw UsageError("limit must be >= 1");
    if (match_k == 0) throw UsageError("match_k must be >= 1");
    if (!schema_pair_oriented(query_category, target_category))
      throw UsageError(
          "category pair (" + std::string(to_string(query_category)) + ", " +
          std::string(to_string(target_category)) +
          ") is not in the association schema");
    switch (strategy) {
      case Strategy::ColorCooccur:
      case Strategy::ColorWheel:
        if (pixels.empty())
          throw UsageError("color strategies require segmented pixels");
        break;
      case Strategy::PatternCooccur:
        if (!pattern && pixels.empty())
          throw UsageError(
              "pattern strategy requires a pattern label or pixels for a "
              "classifier");
        break;
      case Strategy::RetrievalTable:
        if (feature.empty())
          throw UsageError("retrieval strategy requires a feature vector");
        break;
    }
  }
};

struct RecommendedItem {
  std::string item_id;
  double score = 0.0;
  nlohmann::json explanation;
};

struct Recommendation {
  Strategy strategy = Strategy::ColorCooccur;
  GarmentCategory query_category = GarmentCategory::TopsBlouses;
  GarmentCategory target_category = GarmentCategory::Trousers;
  std::vector<RecommendedItem> items;
  nlohmann::json notes = nlohmann::json::object();  // non-ranking provenance
};

inline nlohmann::json to_json(const Recommendation& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const RecommendedItem& it : r.items)
    items.push_back({{"item_id", it.item_id},
                     {"score", it.score},
                     {"explanation", it.explanation}});
  return {{"strategy", to_string(r.strategy)},
          {"query_category", to_string(r.query_category)},
          {"target_category", to_string(r.target_category)},
          {"items", items},
          {"notes", r.notes}};
}

inline Query query_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("query must be a JSON object");
  Query q;
  auto get_string = [&](const char* field) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string())
      throw ParseError("missing or non-string field", 0, field);
    return it->get<std::string>();
  };

  std::string strat = get_string("strategy");
  auto strategy = parse_strategy(strat);
  if (!strategy) throw ParseError("unknown strategy '" + strat + "'", 0, "strategy");
  q.strategy = *strategy;

  if (j.contains("mode")) {
    std::string mode = get_string("mode");
    auto wheel = parse_wheel_mode(mode);
    if (!wheel) throw ParseError("unknown wheel mode '" + mode + "'", 0, "mode");
    q.wheel_mode = *wheel;
  }

  std::string qc = get_string("query_category");
  auto query_cat = parse_category(qc);
  if (!query_cat)
    throw ParseError("unknown category '" + qc + "'", 0, "query_category");
  q.query_category = *query_cat;

  std::string tc = get_string("target_category");
  auto target_cat = parse_category(tc);
  if (!target_cat)
    throw ParseError("unknown category '" + tc + "'", 0, "target_category");
  q.target_category = *target_cat;

  if (j.contains("pixels")) {
    const nlohmann::json& px = j["pixels"];
    if (!px.is_array()) throw ParseError("expected an array", 0, "pixels");
    for (const auto& p : px) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() ||
          !p[1].is_number() || !p[2].is_number())
        throw ParseError("expected [L,a,b] triples", 0, "pixels");
      q.pixels.push_back(
          {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
  }
  if (j.contains("pattern") && !j["pattern"].is_null()) {
    std::string pat = get_string("pattern");
    auto pattern = parse_pattern(pat);
    if (!pattern) throw ParseError("unknown pattern '" + pat + "'", 0, "pattern");
    q.pattern = *pattern;
  }
  if (j.contains("feature")) {
    const nlohmann::json& f = j["feature"];
    if (!f.is_array()) throw ParseError("expected an array", 0, "feature");
    for (const auto& v : f) {
      if (!v.is_number()) throw ParseError("expected numbers", 0, "feature");
      q.feature.push_back(v.get<float>());
    }
  }
  if (j.contains("limit")) {
    if (!j["limit"].is_number_unsigned() || j["limit"].get<std::uint64_t>() == 0)
      throw ParseError("limit must be a positive integer", 0, "limit");
    q.limit = j["limit"].get<std::uint32_t>();
  }
  if (j.contains("match_k")) {
    if (!j["match_k"].is_number_unsigned() ||
        j["match_k"].get<std::uint64_t>() == 0)
      throw ParseError("match_k must be a positive integer", 0, "match_k");
    q.match_k = j["match_k"].get<std::uint32_t>();
  }
  return q;
}

inline nlohmann::json query_to_json(const Query& q) {
  nlohmann::json j{{"strategy", to_string(q.strategy)},
                   {"query_category", to_string(q.query_category)},
                   {"target_category", to_string(q.target_category)},
                   {"limit", q.limit},
                   {"match_k", q.match_k}};
  if (q.strategy == Strategy::ColorWheel) j["mode"] = to_string(q.wheel_mode);
  if (!q.pixels.empty()) {
    nlohmann::json px = nlohmann::json::array();
    for (const LabColor& c : q.pixels) px.push_back({c.L, c.a, c.b});
    j["pixels"] = px;
  }
  if (q.pattern) j["pattern"] = to_string(*q.pattern);
  if (!q.feature.empty()) {
    nlohmann::json f = nlohmann::json::array();
    for (float v : q.feature) f.push_back(v);
    j["feature"] = f;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Pattern classifier seam
// ---------------------------------------------------------------------------

class PatternClassifierPlugin {
 public:
  virtual ~PatternClassifierPlugin() = default;
  virtual std::pair<PatternClass, double> classify(
      std::span<const LabColor> pixels) const = 0;
};

// Default plugin: no model, only annotation passthrough. Classification
// from raw pixels is out of scope, so this plugin always refuses.
class AnnotationPassthroughClassifier : public PatternClassifierPlugin {
 public:
  std::pair<PatternClass, double> classify(
      std::span<const LabColor>) const override {
    throw QueryError(
        "no pattern classifier available: supply a pattern label");
  }
};

// ---------------------------------------------------------------------------
// Loaded artifacts
// ---------------------------------------------------------------------------

struct Artifacts {
  std::map<GarmentCategory, Palette> palettes;
  std::map<PairKind, CooccurrenceMatrix> color_matrices;
  std::map<PairKind, CooccurrenceMatrix> pattern_matrices;
  std::map<PairKind, JointTable> joint_tables;
  std::optional<Catalog> catalog;
  std::optional<FeatureStore> inventory_features;
  // Query-time defaults
  double min_chroma = 10.0;
  double hue_tolerance = 15.0;
  std::uint32_t retrieve_m = 5;

  const Palette& palette_for(GarmentCategory c) const {
    auto it = palettes.find(c);
    if (it == palettes.end())
      throw NotFoundError("missing artifact: palette for " +
                          std::string(to_string(c)));
    return it->second;
  }

  const Catalog& require_catalog() const {
    if (!catalog) throw NotFoundError("missing artifact: inventory catalog");
    return *catalog;
  }
};

// Fills dominant bins for items that carry a "lab" metadata color but no
// bin. Runs once after artifacts are loaded so items and queries share the
// same palette index space.
inline void resolve_dominant_bins(Catalog& catalog,
                                  const std::map<GarmentCategory, Palette>& palettes) {
  for (InventoryItem& item : catalog.items()) {
    if (item.dominant_bin) continue;
    auto meta = item.metadata.find("lab");
    if (meta == item.metadata.end()) continue;
    auto it = palettes.find(item.category);
    if (it == palettes.end()) continue;
    double L, a, b;
    if (std::sscanf(meta->second.c_str(), "%lf,%lf,%lf", &L, &a, &b) != 3)
      throw ValidationError("item '" + item.item_id +
                            "': malformed lab metadata '" + meta->second + "'");
    item.dominant_bin = assign_bin({L, a, b}, it->second);
  }
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

namespace detail {

// Matrix oriented so that rows index the query side.
inline CooccurrenceMatrix oriented_matrix(
    const std::map<PairKind, CooccurrenceMatrix>& matrices, PairKind kind,
    bool query_is_top, const char* what) {
  auto it = matrices.find(kind);
  if (it == matrices.end())
    throw NotFoundError("missing artifact: " + std::string(what) +
                        " matrix for " + to_string(kind));
  return query_is_top ? it->second : it->second.transposed();
}

}  // namespace detail

// Joint color co-occurrence: dominant bin of the query, top-k matched bins
// from the matrix, then target-category items in those bins ordered by
// (bin rank, delta-E to the query centroid, item id).
inline Recommendation recommend_color(const Query& q, const Artifacts& art) {
  q.validate();
  if (q.strategy != Strategy::ColorCooccur)
    throw UsageError("recommend_color requires the color strategy");
  const auto oriented = *schema_pair_oriented(q.query_category, q.target_category);

  const Palette& query_palette = art.palette_for(q.query_category);
  const Palette& target_palette = art.palette_for(q.target_category);
  CooccurrenceMatrix m = detail::oriented_matrix(
      art.color_matrices, oriented.kind, oriented.first_is_top, "color");
  if (m.rows.size != query_palette.size() ||
      m.cols.size != target_palette.size())
    throw ValidationError("color matrix dimensions do not match palettes");

  const auto [query_bin, hist] = dominant_color(q.pixels, query_palette);
  const LabColor query_centroid = query_palette.centroids[query_bin];
  RowDistribution dist = row_distribution(m, query_bin);
  std::vector<std::uint32_t> matched = top_k_match(m, query_bin, q.match_k);

  Recommendation rec{Strategy::ColorCooccur, q.query_category,
                     q.target_category};
  rec.notes = {{"query_bin", query_bin},
               {"query_centroid",
                {query_centroid.L, query_centroid.a, query_centroid.b}},
               {"matched_bins", matched}};

  const Catalog& catalog = art.require_catalog();
  struct Row {
    std::uint32_t bin_rank;
    double de;
    const InventoryItem* item;
    double prob;
  };
  std::vector<Row> rows;
  for (std::uint32_t rank = 0; rank < matched.size(); ++rank) {
    const std::uint32_t bin = matched[rank];
    const LabColor bin_centroid = target_palette.centroids[bin];
    const double de = delta_e(query_centroid, bin_centroid);
    for (const InventoryItem* item : catalog.by_category(q.target_category))
      if (item->dominant_bin && *item->dominant_bin == bin)
        rows.push_back({rank, de, item, dist.probabilities[bin]});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.bin_rank != b.bin_rank) return a.bin_rank < b.bin_rank;
    if (a.de != b.de) return a.de < b.de;
    return a.item->item_id < b.item->item_id;
  });
  for (const Row& r : rows) {
    if (rec.items.size() >= q.limit) break;
    rec.items.push_back(
        {r.item->item_id,
         r.prob,
         {{"query_bin", query_bin},
          {"matched_bin", *r.item->dominant_bin},
          {"bin_rank", r.bin_rank},
          {"delta_e", r.de}}});
  }
  if (rec.items.empty())
    rec.notes["empty_reason"] = "no inventory items in matched bins";
  return rec;
}

// Color-wheel rules: items whose dominant bin lies near the complementary
// or triadic hue(s) of the query's dominant centroid, ranked by hue
// distance. Achromatic queries have no defined hue.
inline Recommendation recommend_color_wheel(const Query& q,
                                            const Artifacts& art) {
  q.validate();
  if (q.strategy != Strategy::ColorWheel)
    throw UsageError("recommend_color_wheel requires the wheel strategy");

  const Palette& query_palette = art.palette_for(q.query_category);
  const Palette& target_palette = art.palette_for(q.target_category);

  const auto [query_bin, hist] = dominant_color(q.pixels, query_palette);
  const LchColor lch = lab_to_lch(query_palette.centroids[query_bin]);
  if (lch.C < art.min_chroma)
    throw QueryError("query dominant color is achromatic (chroma " +
                     format_double(lch.C) + " < " +
                     format_double(art.min_chroma) + "): hue undefined");

  std::vector<double> targets;
  if (q.wheel_mode == WheelMode::Complementary) {
    targets.push_back(complementary_hue(lch.h));
  } else {
    auto [t1, t2] = triadic_hues(lch.h);
    targets.push_back(t1);
    targets.push_back(t2);
  }

  Recommendation rec{Strategy::ColorWheel, q.query_category,
                     q.target_category};
  rec.notes = {{"mode", to_string(q.wheel_mode)},
               {"query_bin", query_bin},
               {"query_hue", lch.h},
               {"target_hues", targets}};

  const Catalog& catalog = art.require_catalog();
  struct Row {
    double hue_dist;
    double target_hue;
    std::uint32_t bin;
    const InventoryItem* item;
  };
  std::vector<Row> rows;
  for (double target : targets) {
    const auto bins =
        bins_near_hue(target_palette, target, art.hue_tolerance, art.min_chroma);
    for (std::uint32_t bin : bins) {
      const double d =
          hue_distance(lab_to_lch(target_palette.centroids[bin]).h, target);
      for (const InventoryItem* item : catalog.by_category(q.target_category))
        if (item->dominant_bin && *item->dominant_bin == bin)
          rows.push_back({d, target, bin, item});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.hue_dist != b.hue_dist) return a.hue_dist < b.hue_dist;
    return a.item->item_id < b.item->item_id;
  });
  for (const Row& r : rows) {
    if (rec.items.size() >= q.limit) break;
    rec.items.push_back({r.item->item_id,
                         -r.hue_dist,
                         {{"matched_bin", r.bin},
                          {"target_hue", r.target_hue},
                          {"hue_distance", r.hue_dist}}});
  }
  return rec;
}

// Pattern co-occurrence over the 10-class taxonomy. The query pattern
// comes from the label when present, otherwise from the classifier plugin.
inline Recommendation recommend_pattern(const Query& q, const Artifacts& art,
                                        const PatternClassifierPlugin& classifier) {
  q.validate();
  if (q.strategy != Strategy::PatternCooccur)
    throw UsageError("recommend_pattern requires the pattern strategy");
  const auto oriented = *schema_pair_oriented(q.query_category, q.target_category);

  PatternClass query_pattern =
      q.pattern ? *q.pattern : classifier.classify(q.pixels).first;

  CooccurrenceMatrix m = detail::oriented_matrix(
      art.pattern_matrices, oriented.kind, oriented.first_is_top, "pattern");
  const auto row = static_cast<std::uint32_t>(query_pattern);
  RowDistribution dist = row_distribution(m, row);
  std::vector<std::uint32_t> matched = top_k_match(m, row, q.match_k);

  Recommendation rec{Strategy::PatternCooccur, q.query_category,
                     q.target_category};
  nlohmann::json matched_names = nlohmann::json::array();
  for (std::uint32_t p : matched)
    matched_names.push_back(to_string(static_cast<PatternClass>(p)));
  rec.notes = {{"query_pattern", to_string(query_pattern)},
               {"matched_patterns", matched_names}};

  const Catalog& catalog = art.require_catalog();
  std::uint64_t unlabeled = 0;
  struct Row {
    std::uint32_t rank;
    const InventoryItem* item;
    double prob;
  };
  std::vector<Row> rows;
  const auto target_items = catalog.by_category(q.target_category);
  for (const InventoryItem* item : target_items)
    if (!item->pattern) ++unlabeled;
  for (std::uint32_t rank = 0; rank < matched.size(); ++rank) {
    const auto pattern = static_cast<PatternClass>(matched[rank]);
    for (const InventoryItem* item : target_items)
      if (item->pattern && *item->pattern == pattern)
        rows.push_back({rank, item, dist.probabilities[matched[rank]]});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.item->item_id < b.item->item_id;
  });
  for (const Row& r : rows) {
    if (rec.items.size() >= q.limit) break;
    rec.items.push_back(
        {r.item->item_id,
         r.prob,
         {{"query_pattern", to_string(query_pattern)},
          {"matched_pattern", to_string(*r.item->pattern)},
          {"pattern_rank", r.rank}}});
  }
  if (rec.items.empty() && unlabeled == target_items.size())
    rec.notes["empty_reason"] = "target items lack pattern labels";
  return rec;
}

// Joint-table lookup driven by retrieval on the query feature vector.
inline Recommendation recommend_retrieval(const Query& q,
                                          const Artifacts& art) {
  q.validate();
  if (q.strategy != Strategy::RetrievalTable)
    throw UsageError("recommend_retrieval requires the retrieval strategy");
  const auto oriented = *schema_pair_oriented(q.query_category, q.target_category);

  auto it = art.joint_tables.find(oriented.kind);
  if (it == art.joint_tables.end())
    throw NotFoundError("missing artifact: joint table for " +
                        to_string(oriented.kind));
  if (!art.inventory_features)
    throw NotFoundError("missing artifact: inventory feature store");
  const Catalog& catalog = art.require_catalog();
  InventoryFeatureIndex index(catalog);

  auto ranked = recommend_from_table(it->second, *art.inventory_features,
                                     index, q.feature, oriented.first_is_top,
                                     art.retrieve_m, q.limit);

  Recommendation rec{Strategy::RetrievalTable, q.query_category,
                     q.target_category};
  rec.notes = {{"table", to_string(oriented.kind)},
               {"retrieve_m", art.retrieve_m},
               {"rule", to_string(it->second.rule)}};
  for (const auto& [item_id, score] : ranked) {
    nlohmann::json expl{{"aggregated_score", score}};
    if (const InventoryItem* item = catalog.find(item_id)) {
      if (item->pattern) expl["pattern"] = to_string(*item->pattern);
      if (item->dominant_bin) expl["dominant_bin"] = *item->dominant_bin;
    }
    rec.items.push_back({item_id, score, expl});
  }
  return rec;
}

// Strategy dispatch. Every query either returns a Recommendation or throws
// a typed error.
inline Recommendation recommend_query(
    const Query& q, const Artifacts& art,
    const PatternClassifierPlugin* classifier = nullptr) {
  q.validate();
  switch (q.strategy) {
    case Strategy::ColorCooccur:
      return recommend_color(q, art);
    case Strategy::ColorWheel:
      return recommend_color_wheel(q, art);
    case Strategy::PatternCooccur: {
      AnnotationPassthroughClassifier fallback;
      return recommend_pattern(q, art,
                               classifier ? *classifier : fallback);
    }
    case Strategy::RetrievalTable:
      return recommend_retrieval(q, art);
  }
  throw Error("invalid Strategy value");
}

}  // namespace stylerec
