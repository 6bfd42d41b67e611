#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stylerec/colorlab.hpp"
#include "stylerec/error.hpp"

namespace stylerec {

// ---------------------------------------------------------------------------
// Closed label sets
// ---------------------------------------------------------------------------

enum class GarmentCategory : std::uint8_t {
  CoatsJackets = 0,
  Dresses,
  Skirts,
  TopsBlouses,
  Trousers,
};

inline constexpr std::array<GarmentCategory, 5> kAllCategories = {
    GarmentCategory::CoatsJackets, GarmentCategory::Dresses,
    GarmentCategory::Skirts,       GarmentCategory::TopsBlouses,
    GarmentCategory::Trousers,
};

inline constexpr std::size_t kNumCategories = kAllCategories.size();

inline std::string_view to_string(GarmentCategory c) {
  switch (c) {
    case GarmentCategory::CoatsJackets: return "CoatsJackets";
    case GarmentCategory::Dresses:      return "Dresses";
    case GarmentCategory::Skirts:       return "Skirts";
    case GarmentCategory::TopsBlouses:  return "TopsBlouses";
    case GarmentCategory::Trousers:     return "Trousers";
  }
  throw Error("invalid GarmentCategory value");
}

inline std::optional<GarmentCategory> parse_category(std::string_view s) {
  for (GarmentCategory c : kAllCategories)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

enum class PatternClass : std::uint8_t {
  AnimalPrint = 0,
  Checks,
  Stripes,
  Dots,
  Floral,
  Paisley,
  Crochet,
  Logo,
  Cosmic,
  Plain,
};

inline constexpr std::array<PatternClass, 10> kAllPatterns = {
    PatternClass::AnimalPrint, PatternClass::Checks,  PatternClass::Stripes,
    PatternClass::Dots,        PatternClass::Floral,  PatternClass::Paisley,
    PatternClass::Crochet,     PatternClass::Logo,    PatternClass::Cosmic,
    PatternClass::Plain,
};

inline constexpr std::size_t kNumPatterns = kAllPatterns.size();

inline std::string_view to_string(PatternClass p) {
  switch (p) {
    case PatternClass::AnimalPrint: return "AnimalPrint";
    case PatternClass::Checks:      return "Checks";
    case PatternClass::Stripes:     return "Stripes";
    case PatternClass::Dots:        return "Dots";
    case PatternClass::Floral:      return "Floral";
    case PatternClass::Paisley:     return "Paisley";
    case PatternClass::Crochet:     return "Crochet";
    case PatternClass::Logo:        return "Logo";
    case PatternClass::Cosmic:      return "Cosmic";
    case PatternClass::Plain:       return "Plain";
  }
  throw Error("invalid PatternClass value");
}

inline std::optional<PatternClass> parse_pattern(std::string_view s) {
  for (PatternClass p : kAllPatterns)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct BoundingBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  // Strictly positive area.
  bool valid() const { return x_min < x_max && y_min < y_max; }

  bool operator==(const BoundingBox&) const = default;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

// Run-length encoded foreground over a width x height grid, row-major.
// Runs are sorted, non-overlapping and non-adjacent (canonical form).
struct PixelMask {
  struct Run {
    std::uint64_t start = 0;  // row-major offset of first foreground pixel
    std::uint64_t length = 0;
    bool operator==(const Run&) const = default;
  };

  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<Run> runs;

  bool operator==(const PixelMask&) const = default;

  std::uint64_t foreground_count() const {
    std::uint64_t n = 0;
    for (const Run& r : runs) n += r.length;
    return n;
  }

  // Canonical form with every run inside the grid.
  bool valid() const {
    const std::uint64_t cells =
        static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
    std::uint64_t prev_end = 0;
    bool first = true;
    for (const Run& r : runs) {
      if (r.length == 0) return false;
      if (r.start + r.length > cells) return false;
      if (!first && r.start <= prev_end) return false;  // merge-required gap
      prev_end = r.start + r.length;
      first = false;
    }
    return true;
  }

  // Row-major offsets of all foreground pixels, ascending.
  std::vector<std::uint64_t> decode() const {
    std::vector<std::uint64_t> out;
    out.reserve(foreground_count());
    for (const Run& r : runs)
      for (std::uint64_t i = 0; i < r.length; ++i) out.push_back(r.start + i);
    return out;
  }

  // Builds the canonical encoding from sorted unique offsets.
  static PixelMask encode(std::uint32_t width, std::uint32_t height,
                          const std::vector<std::uint64_t>& offsets) {
    PixelMask m;
    m.width = width;
    m.height = height;
    for (std::uint64_t off : offsets) {
      if (!m.runs.empty() &&
          m.runs.back().start + m.runs.back().length == off) {
        ++m.runs.back().length;
      } else {
        m.runs.push_back({off, 1});
      }
    }
    return m;
  }
};

// ---------------------------------------------------------------------------
// Annotated street-style content
// ---------------------------------------------------------------------------

struct GarmentDetection {
  std::string detection_id;
  GarmentCategory category = GarmentCategory::CoatsJackets;
  BoundingBox box;
  std::optional<PixelMask> mask;
  // CIELab colors of the segmented pixels, aligned with mask.decode().
  std::vector<LabColor> pixels;
  std::optional<PatternClass> pattern;
  std::optional<std::string> feature_ref;
  double confidence = 1.0;
  nlohmann::json extra = nlohmann::json::object();  // preserved, ignored
};

struct StreetStyleAnnotation {
  std::string image_id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<BoundingBox> person_boxes;
  std::vector<GarmentDetection> garments;
  nlohmann::json extra = nlohmann::json::object();

  const GarmentDetection* find(std::string_view detection_id) const {
    for (const GarmentDetection& g : garments)
      if (g.detection_id == detection_id) return &g;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Inventory
// ---------------------------------------------------------------------------

struct InventoryItem {
  std::string item_id;
  GarmentCategory category = GarmentCategory::CoatsJackets;
  std::optional<PatternClass> pattern;
  std::optional<std::uint32_t> dominant_bin;
  std::optional<std::string> feature_ref;
  std::map<std::string, std::string> metadata;
  nlohmann::json extra = nlohmann::json::object();
};

// Id-unique item collection. Order is preserved from the source file but
// carries no meaning: catalogs compare equal under permutation.
class Catalog {
 public:
  Catalog() = default;

  void add(InventoryItem item) {
    if (index_.count(item.item_id))
      throw ValidationError("duplicate item_id '" + item.item_id + "'");
    index_[item.item_id] = items_.size();
    items_.push_back(std::move(item));
  }

  const std::vector<InventoryItem>& items() const { return items_; }
  std::vector<InventoryItem>& items() { return items_; }
  std::size_t size() const { return items_.size(); }

  const InventoryItem* find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &items_[it->second];
  }

  std::vector<const InventoryItem*> by_category(GarmentCategory c) const {
    std::vector<const InventoryItem*> out;
    for (const InventoryItem& item : items_)
      if (item.category == c) out.push_back(&item);
    return out;
  }

  friend bool operator==(const Catalog& a, const Catalog& b) {
    if (a.size() != b.size()) return false;
    auto key = [](const InventoryItem& i) { return i.item_id; };
    std::vector<const InventoryItem*> xs, ys;
    for (const auto& i : a.items_) xs.push_back(&i);
    for (const auto& i : b.items_) ys.push_back(&i);
    auto by_id = [&](const InventoryItem* l, const InventoryItem* r) {
      return key(*l) < key(*r);
    };
    std::sort(xs.begin(), xs.end(), by_id);
    std::sort(ys.begin(), ys.end(), by_id);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const InventoryItem &x = *xs[i], &y = *ys[i];
      if (x.item_id != y.item_id || x.category != y.category ||
          x.pattern != y.pattern || x.dominant_bin != y.dominant_bin ||
          x.feature_ref != y.feature_ref || x.metadata != y.metadata ||
          x.extra != y.extra)
        return false;
    }
    return true;
  }

 private:
  std::vector<InventoryItem> items_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace stylerec
