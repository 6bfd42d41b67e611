#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylerec/association.hpp"
#include "stylerec/corpus.hpp"
#include "stylerec/error.hpp"
#include "stylerec/feature_store.hpp"
#include "stylerec/textio.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

struct RankedResult {
  std::string id;  // feature id
  double similarity = 0.0;

  bool operator==(const RankedResult&) const = default;
};

// Exact top-k by cosine similarity within one category. Ordering is total:
// similarity descending, then id ascending. Brute force by design — desk
// scale catalogs scan in milliseconds and results are deterministic.
inline std::vector<RankedResult> knn(const FeatureStore& store,
                                     std::span<const float> query,
                                     GarmentCategory category,
                                     std::size_t k) {
  if (k == 0) throw ValidationError("knn: k must be >= 1");
  if (query.size() != store.dimension())
    throw QueryError("knn: query dimension " + std::to_string(query.size()) +
                     " does not match store dimension " +
                     std::to_string(store.dimension()));
  double norm_sq = 0;
  for (float v : query) norm_sq += static_cast<double>(v) * v;
  if (norm_sq == 0.0) throw QueryError("knn: zero-norm query vector");
  const double inv = 1.0 / std::sqrt(norm_sq);

  const std::vector<std::size_t>& rows = store.rows_for(category);
  std::vector<RankedResult> results;
  results.reserve(rows.size());
  for (std::size_t row : rows) {
    std::span<const float> v = store.vector_at(row);
    double dot = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      dot += static_cast<double>(v[i]) * query[i];
    dot *= inv;
    results.push_back({store.id_at(row), std::clamp(dot, -1.0, 1.0)});
  }
  auto order = [](const RankedResult& a, const RankedResult& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  const std::size_t take = std::min(k, results.size());
  std::partial_sort(results.begin(), results.begin() + take, results.end(),
                    order);
  results.resize(take);
  return results;
}

// ---------------------------------------------------------------------------
// Joint table
// ---------------------------------------------------------------------------

enum class ScoreRule : std::uint8_t {
  Product,  // accumulate sim_top * sim_bottom (each clamped at 0)
  Count,    // accumulate 1 per combination
};

inline std::string_view to_string(ScoreRule r) {
  return r == ScoreRule::Product ? "product" : "count";
}

inline std::optional<ScoreRule> parse_score_rule(std::string_view s) {
  if (s == "product") return ScoreRule::Product;
  if (s == "count") return ScoreRule::Count;
  return std::nullopt;
}

struct JointBuildConfig {
  std::uint32_t k_retrieve = 5;
  ScoreRule rule = ScoreRule::Product;
};

// Sparse (top item, bottom item) -> accumulated score. Built by crossing
// the top-k retrieval results for both sides of each street-style pair.
struct JointTable {
  GarmentCategory top_category = GarmentCategory::TopsBlouses;
  GarmentCategory bottom_category = GarmentCategory::Trousers;
  std::uint32_t k_retrieve = 5;
  ScoreRule rule = ScoreRule::Product;
  std::map<std::pair<std::string, std::string>, double> scores;

  void accumulate(const std::string& top_id, const std::string& bottom_id,
                  double score) {
    scores[{top_id, bottom_id}] += score;
  }
};

// Maps inventory feature ids back to item ids. Requires feature refs to be
// unique across the catalog.
class InventoryFeatureIndex {
 public:
  explicit InventoryFeatureIndex(const Catalog& catalog) {
    for (const InventoryItem& item : catalog.items()) {
      if (!item.feature_ref) continue;
      auto [it, inserted] = map_.emplace(*item.feature_ref, item.item_id);
      if (!inserted)
        throw ValidationError("feature ref '" + *item.feature_ref +
                              "' is shared by items '" + it->second +
                              "' and '" + item.item_id + "'");
    }
  }

  const std::string* item_for(const std::string& feature_id) const {
    auto it = map_.find(feature_id);
    return it == map_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, std::string> map_;
};

// For every pair: retrieve k inventory candidates for each side from the
// street garment's feature vector, then add the configured score for all
// k x k combinations. Pairs without usable features are skipped and
// reported.
inline JointTable build_joint_table(
    PairKind kind, std::span<const AssociationPair> pairs,
    const AnnotationCorpus& corpus, const FeatureStore& street,
    const FeatureStore& inventory, const InventoryFeatureIndex& items,
    const JointBuildConfig& cfg = {}, BuildReport* report = nullptr) {
  BuildReport local;
  BuildReport& rep = report ? *report : local;
  if (cfg.k_retrieve == 0)
    throw ValidationError("build_joint_table: k_retrieve must be >= 1");

  JointTable table;
  table.top_category = top_category(kind);
  table.bottom_category = bottom_category(kind);
  table.k_retrieve = cfg.k_retrieve;
  table.rule = cfg.rule;

  for (const AssociationPair& p : pairs) {
    if (p.kind != kind)
      throw ValidationError("pair kind " + to_string(p.kind) +
                            " does not match table kind " + to_string(kind));
    const GarmentDetection& top = corpus.resolve(p.image_id, p.top_detection);
    const GarmentDetection& bottom =
        corpus.resolve(p.image_id, p.bottom_detection);
    if (!top.feature_ref || !bottom.feature_ref) {
      rep.skip("missing feature ref");
      continue;
    }
    std::span<const float> top_vec = street.lookup(*top.feature_ref);
    std::span<const float> bottom_vec = street.lookup(*bottom.feature_ref);
    if (top_vec.empty() || bottom_vec.empty()) {
      rep.skip("feature ref not in street store");
      continue;
    }
    auto top_hits = knn(inventory, top_vec, table.top_category, cfg.k_retrieve);
    auto bottom_hits =
        knn(inventory, bottom_vec, table.bottom_category, cfg.k_retrieve);
    if (top_hits.empty() || bottom_hits.empty()) {
      rep.skip("no inventory candidates");
      continue;
    }
    bool counted = false;
    for (const RankedResult& t : top_hits) {
      const std::string* top_item = items.item_for(t.id);
      if (!top_item) {
        rep.skip("unmapped inventory feature");
        continue;
      }
      for (const RankedResult& b : bottom_hits) {
        const std::string* bottom_item = items.item_for(b.id);
        if (!bottom_item) {
          rep.skip("unmapped inventory feature");
          continue;
        }
        double score = 1.0;
        if (cfg.rule == ScoreRule::Product)
          score = std::max(t.similarity, 0.0) * std::max(b.similarity, 0.0);
        table.accumulate(*top_item, *bottom_item, score);
        counted = true;
      }
    }
    if (counted) ++rep.used;
  }
  return table;
}

// Retrieves the m nearest query-side items, sums their table rows (or
// columns when querying from the bottom side) and returns the top-n
// opposite-side items by aggregated score, ties by ascending item id.
inline std::vector<std::pair<std::string, double>> recommend_from_table(
    const JointTable& t, const FeatureStore& inventory,
    const InventoryFeatureIndex& items, std::span<const float> query,
    bool query_is_top, std::size_t m, std::size_t n) {
  if (m == 0 || n == 0)
    throw ValidationError("recommend_from_table: m and n must be >= 1");
  const GarmentCategory query_cat =
      query_is_top ? t.top_category : t.bottom_category;
  auto hits = knn(inventory, query, query_cat, m);

  std::vector<std::string> query_items;
  for (const RankedResult& h : hits)
    if (const std::string* item = items.item_for(h.id))
      query_items.push_back(*item);

  std::map<std::string, double> agg;
  for (const auto& [key, score] : t.scores) {
    const std::string& own = query_is_top ? key.first : key.second;
    const std::string& other = query_is_top ? key.second : key.first;
    if (std::find(query_items.begin(), query_items.end(), own) !=
        query_items.end())
      agg[other] += score;
  }

  std::vector<std::pair<std::string, double>> ranked(agg.begin(), agg.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

// ---------------------------------------------------------------------------
// Persistence: header plus sparse triples, sorted by (top id, bottom id).
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kJointTableFormatVersion = 1;

inline void save_joint_table(const std::filesystem::path& path,
                             const JointTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  out << "stylerec-joint-table " << kJointTableFormatVersion << "\n";
  out << "top " << to_string(t.top_category) << "\n";
  out << "bottom " << to_string(t.bottom_category) << "\n";
  out << "k " << t.k_retrieve << "\n";
  out << "rule " << to_string(t.rule) << "\n";
  out << "entries " << t.scores.size() << "\n";
  for (const auto& [key, score] : t.scores)
    out << key.first << ' ' << key.second << ' ' << format_double(score)
        << "\n";
  if (!out) throw Error("write failed: " + path.string());
}

inline JointTable load_joint_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open: " + path.string());
  TextReader reader(in, path.string());
  reader.expect_header("stylerec-joint-table", kJointTableFormatVersion);

  JointTable t;
  std::string top = reader.keyword_line("top");
  auto top_cat = parse_category(top);
  if (!top_cat)
    throw ParseError("unknown category '" + top + "'", reader.line_number(),
                     "top");
  t.top_category = *top_cat;
  std::string bottom = reader.keyword_line("bottom");
  auto bottom_cat = parse_category(bottom);
  if (!bottom_cat)
    throw ParseError("unknown category '" + bottom + "'",
                     reader.line_number(), "bottom");
  t.bottom_category = *bottom_cat;
  t.k_retrieve = static_cast<std::uint32_t>(reader.keyword_u64("k"));
  std::string rule = reader.keyword_line("rule");
  auto parsed_rule = parse_score_rule(rule);
  if (!parsed_rule)
    throw ParseError("unknown score rule '" + rule + "'",
                     reader.line_number(), "rule");
  t.rule = *parsed_rule;
  const std::uint64_t entries = reader.keyword_u64("entries");
  for (std::uint64_t i = 0; i < entries; ++i) {
    auto toks = reader.token_line(3);
    double score = parse_double(toks[2], reader.line_number(), "score");
    if (score < 0)
      throw ValidationError("negative joint score", reader.line_number());
    t.scores[{toks[0], toks[1]}] = score;
  }
  return t;
}

}  // namespace stylerec
