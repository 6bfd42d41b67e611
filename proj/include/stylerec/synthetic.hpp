#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylerec/association.hpp"
#include "stylerec/feature_store.hpp"
#include "stylerec/ingest.hpp"
#include "stylerec/rng.hpp"
#include "stylerec/textio.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

// Synthetic street-style corpus with planted structure:
//   - per-category color clusters on a well-separated Lab grid
//   - a per-person "style" index that deterministically links the color
//     clusters (and patterns) of garments worn together
//   - inventory items covering every planted cluster and pattern
//   - feature vectors where each street garment is a noisy copy of a
//     designated inventory item
// Everything sampled is recorded in a ground-truth JSON document so
// downstream stages can be checked against exact planted values.
struct SyntheticConfig {
  std::uint64_t seed = 42;
  std::uint32_t images = 100;
  std::uint32_t planted_colors = 16;  // color clusters per category
  double color_sigma = 1.0;           // pixel spread inside a cluster
  std::uint32_t items_per_category = 48;
  std::uint32_t feature_dim = 32;
  std::uint32_t min_pixels = 40;  // segmented pixels per garment
  std::uint32_t max_pixels = 80;
  double unassigned_fraction = 0.05;  // images with no person boxes

  void validate() const {
    if (images == 0) throw ValidationError("images must be >= 1");
    if (planted_colors == 0 || planted_colors > 180)
      throw ValidationError("planted_colors must be in [1,180]");
    if (items_per_category == 0)
      throw ValidationError("items_per_category must be >= 1");
    if (feature_dim == 0) throw ValidationError("feature_dim must be >= 1");
    if (min_pixels == 0 || min_pixels > max_pixels)
      throw ValidationError("need 0 < min_pixels <= max_pixels");
    if (!(color_sigma > 0)) throw ValidationError("color_sigma must be > 0");
    if (unassigned_fraction < 0 || unassigned_fraction > 1)
      throw ValidationError("unassigned_fraction must be in [0,1]");
  }
};

struct SyntheticDataset {
  std::vector<StreetStyleAnnotation> annotations;
  Catalog catalog;
  std::vector<FeatureRow> street_features;
  std::vector<FeatureRow> inventory_features;
  nlohmann::json ground_truth;
};

namespace synth_detail {

inline constexpr std::uint32_t kImageWidth = 1000;
inline constexpr std::uint32_t kImageHeight = 1500;

// 5 x 6 x 6 grid of well-separated Lab anchors (pairwise distance >= 20).
inline std::vector<LabColor> grid_slots() {
  static const double ls[] = {10, 30, 50, 70, 90};
  static const double abs_[] = {-105, -63, -21, 21, 63, 105};
  std::vector<LabColor> slots;
  for (double L : ls)
    for (double a : abs_)
      for (double b : abs_) slots.push_back({L, a, b});
  return slots;
}

inline double clamp(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

inline LabColor sample_color(Rng& rng, const LabColor& mean, double sigma) {
  return {clamp(mean.L + sigma * rng.next_gaussian(), 0.0, 100.0),
          clamp(mean.a + sigma * rng.next_gaussian(), -127.0, 127.0),
          clamp(mean.b + sigma * rng.next_gaussian(), -127.0, 127.0)};
}

inline std::string lab_metadata(const LabColor& c) {
  return format_double(c.L) + "," + format_double(c.a) + "," +
         format_double(c.b);
}

// Rectangle mask of exactly `count` pixels anchored inside the box.
inline PixelMask block_mask(const BoundingBox& box, std::uint32_t count) {
  const auto x0 = static_cast<std::uint64_t>(box.x_min) + 2;
  const auto y0 = static_cast<std::uint64_t>(box.y_min) + 2;
  const auto w = static_cast<std::uint64_t>(std::ceil(std::sqrt(count)));
  std::vector<std::uint64_t> offsets;
  offsets.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t px = x0 + i % w;
    const std::uint64_t py = y0 + i / w;
    offsets.push_back(py * kImageWidth + px);
  }
  return PixelMask::encode(kImageWidth, kImageHeight, offsets);
}

inline std::vector<float> random_unit_vector(Rng& rng, std::uint32_t dim) {
  std::vector<float> v(dim);
  double norm_sq = 0;
  do {
    norm_sq = 0;
    for (auto& x : v) {
      x = static_cast<float>(rng.next_gaussian());
      norm_sq += static_cast<double>(x) * x;
    }
  } while (norm_sq == 0);
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (auto& x : v) x = static_cast<float>(x * inv);
  return v;
}

inline std::vector<float> perturbed(Rng& rng, const std::vector<float>& base,
                                    double noise) {
  std::vector<float> v(base.size());
  double norm_sq = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    v[i] = static_cast<float>(base[i] + noise * rng.next_gaussian());
    norm_sq += static_cast<double>(v[i]) * v[i];
  }
  if (norm_sq == 0) return base;
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (auto& x : v) x = static_cast<float>(x * inv);
  return v;
}

inline std::string pad_number(std::uint64_t n, int width) {
  std::string s = std::to_string(n);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

// Outfit templates; together they exercise all six schema pairs.
inline const std::vector<std::vector<GarmentCategory>>& outfit_templates() {
  static const std::vector<std::vector<GarmentCategory>> t = {
      {GarmentCategory::TopsBlouses, GarmentCategory::Trousers},
      {GarmentCategory::TopsBlouses, GarmentCategory::Skirts},
      {GarmentCategory::CoatsJackets, GarmentCategory::Dresses},
      {GarmentCategory::CoatsJackets, GarmentCategory::Trousers},
      {GarmentCategory::CoatsJackets, GarmentCategory::TopsBlouses,
       GarmentCategory::Trousers},
      {GarmentCategory::CoatsJackets, GarmentCategory::TopsBlouses,
       GarmentCategory::Skirts},
  };
  return t;
}

}  // namespace synth_detail

inline SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  using namespace synth_detail;
  cfg.validate();
  Rng rng(cfg.seed);
  SyntheticDataset ds;

  // --- planted color clusters per category ---
  std::map<GarmentCategory, std::vector<LabColor>> planted;
  {
    for (GarmentCategory c : kAllCategories) {
      std::vector<LabColor> slots = grid_slots();
      rng.shuffle(slots);
      slots.resize(cfg.planted_colors);
      for (LabColor& s : slots) {
        s.L = clamp(s.L + (rng.next_double() * 6.0 - 3.0), 0.0, 100.0);
        s.a = clamp(s.a + (rng.next_double() * 6.0 - 3.0), -127.0, 127.0);
        s.b = clamp(s.b + (rng.next_double() * 6.0 - 3.0), -127.0, 127.0);
      }
      planted[c] = std::move(slots);
    }
  }

  // --- per-category style and pattern permutations ---
  std::map<GarmentCategory, std::vector<std::uint32_t>> style_map, pattern_map;
  for (GarmentCategory c : kAllCategories) {
    std::vector<std::uint32_t> sm(cfg.planted_colors);
    std::iota(sm.begin(), sm.end(), 0u);
    rng.shuffle(sm);
    style_map[c] = std::move(sm);
    std::vector<std::uint32_t> pm(kNumPatterns);
    std::iota(pm.begin(), pm.end(), 0u);
    rng.shuffle(pm);
    pattern_map[c] = std::move(pm);
  }

  // --- inventory ---
  // item lists per (category, cluster) for feature planting
  std::map<GarmentCategory, std::vector<std::vector<std::string>>> items_by_cluster;
  std::map<std::string, std::vector<float>> item_vectors;
  nlohmann::json gt_items = nlohmann::json::object();
  for (GarmentCategory c : kAllCategories) {
    items_by_cluster[c].resize(cfg.planted_colors);
    for (std::uint32_t i = 0; i < cfg.items_per_category; ++i) {
      InventoryItem item;
      item.item_id = "inv-" + std::string(to_string(c)) + "-" + pad_number(i, 4);
      item.category = c;
      const std::uint32_t cluster = i % cfg.planted_colors;
      const LabColor color = sample_color(rng, planted[c][cluster], cfg.color_sigma);
      item.pattern = kAllPatterns[i % kNumPatterns];
      item.feature_ref = item.item_id;
      item.metadata["lab"] = lab_metadata(color);
      items_by_cluster[c][cluster].push_back(item.item_id);

      FeatureRow row;
      row.id = item.item_id;
      row.category = c;
      row.values = random_unit_vector(rng, cfg.feature_dim);
      item_vectors[row.id] = row.values;
      ds.inventory_features.push_back(std::move(row));

      gt_items[item.item_id] = {
          {"category", to_string(c)},
          {"cluster", cluster},
          {"pattern", to_string(*item.pattern)},
          {"lab", item.metadata["lab"]}};
      ds.catalog.add(std::move(item));
    }
  }

  // --- street images ---
  std::array<std::uint64_t, kNumPairKinds> pair_counts{};
  std::map<PairKind, std::map<std::string, std::uint64_t>> color_joint,
      pattern_joint;
  nlohmann::json gt_garments = nlohmann::json::object();
  nlohmann::json gt_pairs = nlohmann::json::array();
  std::map<GarmentCategory, std::vector<std::uint64_t>> cluster_counters;
  for (GarmentCategory c : kAllCategories)
    cluster_counters[c].assign(cfg.planted_colors, 0);

  for (std::uint32_t img = 0; img < cfg.images; ++img) {
    StreetStyleAnnotation a;
    a.image_id = "img-" + pad_number(img, 6);
    a.width = kImageWidth;
    a.height = kImageHeight;

    const bool unassigned = rng.next_double() < cfg.unassigned_fraction;
    std::uint32_t persons = 0;
    if (!unassigned) {
      const double u = rng.next_double();
      persons = u < 0.6 ? 1 : (u < 0.9 ? 2 : 3);
    }
    for (std::uint32_t p = 0; p < persons; ++p) {
      a.person_boxes.push_back({10.0 + p * 330.0, 50.0,
                                10.0 + p * 330.0 + 300.0, 1450.0});
    }

    std::uint32_t gid = 0;
    auto add_garment = [&](GarmentCategory c, const BoundingBox& box,
                           std::uint32_t cluster, std::uint32_t pattern_idx) {
      GarmentDetection g;
      g.detection_id = "g" + std::to_string(gid++);
      g.category = c;
      g.box = box;
      g.confidence = 0.7 + 0.3 * rng.next_double();
      g.pattern = kAllPatterns[pattern_idx];
      const std::uint32_t n_pixels =
          cfg.min_pixels +
          static_cast<std::uint32_t>(rng.next_index(cfg.max_pixels - cfg.min_pixels + 1));
      g.mask = block_mask(box, n_pixels);
      g.pixels.reserve(n_pixels);
      for (std::uint32_t i = 0; i < n_pixels; ++i)
        g.pixels.push_back(sample_color(rng, planted[c][cluster], cfg.color_sigma));

      // feature: noisy copy of a designated same-cluster inventory item
      const auto& pool = items_by_cluster[c][cluster];
      const std::string& nearest =
          pool[cluster_counters[c][cluster]++ % pool.size()];
      FeatureRow row;
      row.id = "sf-" + a.image_id + "-" + g.detection_id;
      row.category = c;
      row.values = perturbed(rng, item_vectors[nearest], 0.05);
      g.feature_ref = row.id;
      ds.street_features.push_back(std::move(row));

      gt_garments[a.image_id + "/" + g.detection_id] = {
          {"category", to_string(c)},
          {"cluster", cluster},
          {"pattern", to_string(*g.pattern)},
          {"nearest_item", nearest}};
      a.garments.push_back(std::move(g));
      return a.garments.back().detection_id;
    };

    if (unassigned) {
      // garments with nothing to wear them: no person boxes, no pairs
      const std::uint32_t cluster =
          static_cast<std::uint32_t>(rng.next_index(cfg.planted_colors));
      const std::uint32_t pat =
          static_cast<std::uint32_t>(rng.next_index(kNumPatterns));
      add_garment(GarmentCategory::TopsBlouses, {100, 100, 400, 600}, cluster,
                  pat);
      ds.annotations.push_back(std::move(a));
      continue;
    }

    for (std::uint32_t p = 0; p < persons; ++p) {
      const BoundingBox& pb = a.person_boxes[p];
      const auto& outfit =
          outfit_templates()[rng.next_index(outfit_templates().size())];
      const std::uint32_t style =
          static_cast<std::uint32_t>(rng.next_index(cfg.planted_colors));
      const std::uint32_t pattern_style =
          static_cast<std::uint32_t>(rng.next_index(kNumPatterns));

      std::map<GarmentCategory, std::string> worn;
      std::map<GarmentCategory, std::uint32_t> worn_cluster, worn_pattern;
      for (GarmentCategory c : outfit) {
        const double h = pb.y_max - pb.y_min;
        BoundingBox box;
        const double x0 = pb.x_min + 30, x1 = pb.x_max - 30;
        switch (c) {
          case GarmentCategory::CoatsJackets:
            box = {x0, pb.y_min + 0.05 * h, x1, pb.y_min + 0.55 * h};
            break;
          case GarmentCategory::TopsBlouses:
            box = {x0 + 10, pb.y_min + 0.10 * h, x1 - 10, pb.y_min + 0.50 * h};
            break;
          case GarmentCategory::Dresses:
            box = {x0 + 5, pb.y_min + 0.12 * h, x1 - 5, pb.y_min + 0.85 * h};
            break;
          default:  // Skirts, Trousers
            box = {x0, pb.y_min + 0.50 * h, x1, pb.y_min + 0.95 * h};
            break;
        }
        const std::uint32_t cluster = style_map[c][style];
        const std::uint32_t pattern_idx = pattern_map[c][pattern_style];
        worn[c] = add_garment(c, box, cluster, pattern_idx);
        worn_cluster[c] = cluster;
        worn_pattern[c] = pattern_idx;
      }

      for (PairKind kind : kAllPairKinds) {
        const GarmentCategory tc = top_category(kind);
        const GarmentCategory bc = bottom_category(kind);
        if (!worn.count(tc) || !worn.count(bc)) continue;
        ++pair_counts[static_cast<std::size_t>(kind)];
        const std::string joint_key = std::to_string(worn_cluster[tc]) + "," +
                                      std::to_string(worn_cluster[bc]);
        ++color_joint[kind][joint_key];
        const std::string pattern_key =
            std::to_string(worn_pattern[tc]) + "," +
            std::to_string(worn_pattern[bc]);
        ++pattern_joint[kind][pattern_key];
        gt_pairs.push_back({{"image_id", a.image_id},
                            {"person", p},
                            {"kind", to_string(kind)},
                            {"top", worn[tc]},
                            {"bottom", worn[bc]},
                            {"top_cluster", worn_cluster[tc]},
                            {"bottom_cluster", worn_cluster[bc]},
                            {"top_pattern", to_string(kAllPatterns[worn_pattern[tc]])},
                            {"bottom_pattern", to_string(kAllPatterns[worn_pattern[bc]])}});
      }
    }
    ds.annotations.push_back(std::move(a));
  }

  // --- ground truth document ---
  nlohmann::json gt;
  gt["config"] = {{"seed", cfg.seed},
                  {"images", cfg.images},
                  {"planted_colors", cfg.planted_colors},
                  {"color_sigma", cfg.color_sigma},
                  {"items_per_category", cfg.items_per_category},
                  {"feature_dim", cfg.feature_dim}};
  nlohmann::json palettes = nlohmann::json::object();
  nlohmann::json styles = nlohmann::json::object();
  nlohmann::json patterns = nlohmann::json::object();
  nlohmann::json item_counts = nlohmann::json::object();
  for (GarmentCategory c : kAllCategories) {
    nlohmann::json means = nlohmann::json::array();
    for (const LabColor& m : planted[c]) means.push_back({m.L, m.a, m.b});
    palettes[std::string(to_string(c))] = means;
    styles[std::string(to_string(c))] = style_map[c];
    patterns[std::string(to_string(c))] = pattern_map[c];
    item_counts[std::string(to_string(c))] = cfg.items_per_category;
  }
  gt["planted_palettes"] = palettes;
  gt["style_maps"] = styles;
  gt["pattern_maps"] = patterns;
  gt["category_item_counts"] = item_counts;

  nlohmann::json counts = nlohmann::json::object();
  nlohmann::json cj = nlohmann::json::object();
  nlohmann::json pj = nlohmann::json::object();
  nlohmann::json partners = nlohmann::json::object();
  for (PairKind kind : kAllPairKinds) {
    counts[to_string(kind)] = pair_counts[static_cast<std::size_t>(kind)];
    nlohmann::json cjk = nlohmann::json::object();
    for (const auto& [k, v] : color_joint[kind]) cjk[k] = v;
    cj[to_string(kind)] = cjk;
    nlohmann::json pjk = nlohmann::json::object();
    for (const auto& [k, v] : pattern_joint[kind]) pjk[k] = v;
    pj[to_string(kind)] = pjk;
    // partner[t] = bottom cluster implied by the style maps
    const auto& sm_top = style_map[top_category(kind)];
    const auto& sm_bottom = style_map[bottom_category(kind)];
    std::vector<std::uint32_t> inverse(cfg.planted_colors);
    for (std::uint32_t s = 0; s < cfg.planted_colors; ++s)
      inverse[sm_top[s]] = s;
    std::vector<std::uint32_t> partner(cfg.planted_colors);
    for (std::uint32_t t = 0; t < cfg.planted_colors; ++t)
      partner[t] = sm_bottom[inverse[t]];
    partners[to_string(kind)] = partner;
  }
  gt["pair_counts"] = counts;
  gt["color_joint"] = cj;
  gt["pattern_joint"] = pj;
  gt["color_partner"] = partners;
  gt["street_garments"] = gt_garments;
  gt["pairs"] = gt_pairs;
  ds.ground_truth = std::move(gt);
  return ds;
}

// File names under the dataset directory.
struct SyntheticPaths {
  std::filesystem::path annotations, inventory, street_features,
      inventory_features, ground_truth;

  explicit SyntheticPaths(const std::filesystem::path& dir)
      : annotations(dir / "annotations.jsonl"),
        inventory(dir / "inventory.jsonl"),
        street_features(dir / "street_features.bin"),
        inventory_features(dir / "inventory_features.bin"),
        ground_truth(dir / "groundtruth.json") {}
};

inline void write_synthetic_dataset(const std::filesystem::path& dir,
                                    const SyntheticDataset& ds,
                                    std::uint32_t feature_dim) {
  std::filesystem::create_directories(dir);
  SyntheticPaths paths(dir);
  save_street_annotations(paths.annotations, ds.annotations);
  save_inventory(paths.inventory, ds.catalog);
  save_features(paths.street_features, ds.street_features, feature_dim);
  save_features(paths.inventory_features, ds.inventory_features, feature_dim);
  std::ofstream out(paths.ground_truth, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + paths.ground_truth.string());
  out << ds.ground_truth.dump() << "\n";
  if (!out) throw Error("write failed: " + paths.ground_truth.string());
}

}  // namespace stylerec
