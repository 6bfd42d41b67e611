#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylerec/error.hpp"
#include "stylerec/ingest.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

// The six allowed (top, bottom) category pairs. Dresses pair only with
// coats/jackets; tops never pair with tops or dresses.
enum class PairKind : std::uint8_t {
  CoatsJacketsDresses = 0,
  CoatsJacketsSkirts,
  CoatsJacketsTrousers,
  CoatsJacketsTopsBlouses,
  TopsBlousesSkirts,
  TopsBlousesTrousers,
};

inline constexpr std::array<PairKind, 6> kAllPairKinds = {
    PairKind::CoatsJacketsDresses,  PairKind::CoatsJacketsSkirts,
    PairKind::CoatsJacketsTrousers, PairKind::CoatsJacketsTopsBlouses,
    PairKind::TopsBlousesSkirts,    PairKind::TopsBlousesTrousers,
};

inline constexpr std::size_t kNumPairKinds = kAllPairKinds.size();

inline GarmentCategory top_category(PairKind k) {
  switch (k) {
    case PairKind::CoatsJacketsDresses:
    case PairKind::CoatsJacketsSkirts:
    case PairKind::CoatsJacketsTrousers:
    case PairKind::CoatsJacketsTopsBlouses:
      return GarmentCategory::CoatsJackets;
    case PairKind::TopsBlousesSkirts:
    case PairKind::TopsBlousesTrousers:
      return GarmentCategory::TopsBlouses;
  }
  throw Error("invalid PairKind value");
}

inline GarmentCategory bottom_category(PairKind k) {
  switch (k) {
    case PairKind::CoatsJacketsDresses:      return GarmentCategory::Dresses;
    case PairKind::CoatsJacketsSkirts:       return GarmentCategory::Skirts;
    case PairKind::CoatsJacketsTrousers:     return GarmentCategory::Trousers;
    case PairKind::CoatsJacketsTopsBlouses:  return GarmentCategory::TopsBlouses;
    case PairKind::TopsBlousesSkirts:        return GarmentCategory::Skirts;
    case PairKind::TopsBlousesTrousers:      return GarmentCategory::Trousers;
  }
  throw Error("invalid PairKind value");
}

inline std::string to_string(PairKind k) {
  return std::string(to_string(top_category(k))) + "-" +
         std::string(to_string(bottom_category(k)));
}

inline std::optional<PairKind> parse_pair_kind(std::string_view s) {
  for (PairKind k : kAllPairKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// Exact (top, bottom) schema lookup.
inline std::optional<PairKind> schema_pair(GarmentCategory top,
                                           GarmentCategory bottom) {
  for (PairKind k : kAllPairKinds)
    if (top_category(k) == top && bottom_category(k) == bottom) return k;
  return std::nullopt;
}

// Schema lookup ignoring orientation; reports whether `a` is the top side.
struct OrientedPair {
  PairKind kind;
  bool first_is_top;
};

inline std::optional<OrientedPair> schema_pair_oriented(GarmentCategory a,
                                                        GarmentCategory b) {
  if (auto k = schema_pair(a, b)) return OrientedPair{*k, true};
  if (auto k = schema_pair(b, a)) return OrientedPair{*k, false};
  return std::nullopt;
}

struct AssociationConfig {
  // Minimum garment-in-person containment ratio.
  double tau = 0.9;
  // Tie-break for several garments of one category on one person.
  // The single supported rule picks by confidence, then box area, then id.
  std::string same_category_rule = "confidence-area-id";

  void validate() const {
    if (!(tau > 0.0 && tau <= 1.0))
      throw ValidationError("association tau must be in (0,1]");
    if (same_category_rule != "confidence-area-id")
      throw ValidationError("unknown same-category rule '" +
                            same_category_rule + "'");
  }
};

struct AssociationPair {
  std::string image_id;
  std::uint32_t person_index = 0;
  PairKind kind = PairKind::CoatsJacketsDresses;
  std::string top_detection;
  std::string bottom_detection;

  bool operator==(const AssociationPair&) const = default;
};

// area(garment ∩ person) / area(garment), in [0,1].
inline double containment_ratio(const BoundingBox& garment,
                                const BoundingBox& person) {
  return intersection_area(garment, person) / garment.area();
}

// Assigns each garment to the person box with the highest containment
// ratio, provided it reaches tau. Ties go to the smaller person box, then
// the lower person index. Result is indexed by person; values are garment
// indices in annotation order.
inline std::vector<std::vector<std::size_t>> assign_to_persons(
    const StreetStyleAnnotation& a, const AssociationConfig& cfg = {}) {
  cfg.validate();
  std::vector<std::vector<std::size_t>> assigned(a.person_boxes.size());
  for (std::size_t gi = 0; gi < a.garments.size(); ++gi) {
    const BoundingBox& box = a.garments[gi].box;
    std::size_t best = a.person_boxes.size();
    double best_ratio = -1.0;
    for (std::size_t pi = 0; pi < a.person_boxes.size(); ++pi) {
      const double r = containment_ratio(box, a.person_boxes[pi]);
      bool better = r > best_ratio;
      if (r == best_ratio && best < a.person_boxes.size())
        better = a.person_boxes[pi].area() < a.person_boxes[best].area();
      if (better) {
        best = pi;
        best_ratio = r;
      }
    }
    if (best < a.person_boxes.size() && best_ratio >= cfg.tau)
      assigned[best].push_back(gi);
  }
  return assigned;
}

namespace detail {

// confidence desc, box area desc, detection id asc
inline bool prefer_garment(const GarmentDetection& x,
                           const GarmentDetection& y) {
  if (x.confidence != y.confidence) return x.confidence > y.confidence;
  if (x.box.area() != y.box.area()) return x.box.area() > y.box.area();
  return x.detection_id < y.detection_id;
}

}  // namespace detail

// Emits at most one pair per (person, schema kind). Output order is
// (person index, schema pair order) and is invariant under permutation of
// the garment list.
inline std::vector<AssociationPair> associate(const StreetStyleAnnotation& a,
                                              const AssociationConfig& cfg = {}) {
  const auto assigned = assign_to_persons(a, cfg);
  std::vector<AssociationPair> out;
  for (std::size_t pi = 0; pi < assigned.size(); ++pi) {
    // best garment per category for this person
    std::array<const GarmentDetection*, kNumCategories> rep{};
    for (std::size_t gi : assigned[pi]) {
      const GarmentDetection& g = a.garments[gi];
      const auto c = static_cast<std::size_t>(g.category);
      if (rep[c] == nullptr || detail::prefer_garment(g, *rep[c])) rep[c] = &g;
    }
    for (PairKind kind : kAllPairKinds) {
      const GarmentDetection* top =
          rep[static_cast<std::size_t>(top_category(kind))];
      const GarmentDetection* bottom =
          rep[static_cast<std::size_t>(bottom_category(kind))];
      if (top == nullptr || bottom == nullptr) continue;
      out.push_back({a.image_id, static_cast<std::uint32_t>(pi), kind,
                     top->detection_id, bottom->detection_id});
    }
  }
  return out;
}

inline std::vector<AssociationPair> associate_all(
    std::span<const StreetStyleAnnotation> annotations,
    const AssociationConfig& cfg = {}) {
  std::vector<AssociationPair> out;
  for (const StreetStyleAnnotation& a : annotations) {
    auto pairs = associate(a, cfg);
    out.insert(out.end(), pairs.begin(), pairs.end());
  }
  return out;
}

// Exact multiset counts per schema kind; indexed by PairKind value.
inline std::array<std::uint64_t, kNumPairKinds> count_pairs(
    std::span<const AssociationPair> pairs) {
  std::array<std::uint64_t, kNumPairKinds> counts{};
  for (const AssociationPair& p : pairs)
    ++counts[static_cast<std::size_t>(p.kind)];
  return counts;
}

// ---------------------------------------------------------------------------
// Persistence (JSON lines)
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kPairsFormatVersion = 1;

inline void save_pairs(const std::filesystem::path& path,
                       std::span<const AssociationPair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  jsonl::write_header(out, "stylerec-pairs", kPairsFormatVersion);
  for (const AssociationPair& p : pairs) {
    json j{{"image_id", p.image_id},
           {"person", p.person_index},
           {"kind", to_string(p.kind)},
           {"top", p.top_detection},
           {"bottom", p.bottom_detection}};
    out << j.dump() << "\n";
  }
  if (!out) throw Error("write failed: " + path.string());
}

inline std::vector<AssociationPair> load_pairs(
    const std::filesystem::path& path) {
  std::vector<AssociationPair> out;
  jsonl::for_each_record(
      path, "stylerec-pairs", kPairsFormatVersion,
      [&](std::uint64_t line, const json& j) {
        AssociationPair p;
        p.image_id = jsonl::as_string(j, "image_id", line);
        p.person_index = jsonl::as_u32(j, "person", line);
        std::string kind = jsonl::as_string(j, "kind", line);
        auto parsed = parse_pair_kind(kind);
        if (!parsed)
          throw ValidationError("unknown pair kind '" + kind + "'", line);
        p.kind = *parsed;
        p.top_detection = jsonl::as_string(j, "top", line);
        p.bottom_detection = jsonl::as_string(j, "bottom", line);
        out.push_back(std::move(p));
      });
  return out;
}

}  // namespace stylerec
