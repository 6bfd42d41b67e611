#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylerec/error.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

using nlohmann::json;

inline constexpr std::uint32_t kAnnotationsFormatVersion = 1;
inline constexpr std::uint32_t kCatalogFormatVersion = 1;

struct IngestOptions {
  // Masks must stay inside the detection box dilated by this many pixels.
  double mask_margin = 2.0;
};

// ---------------------------------------------------------------------------
// JSON-lines plumbing
// ---------------------------------------------------------------------------

namespace jsonl {

inline void write_header(std::ostream& out, const std::string& format,
                         std::uint32_t version) {
  json h{{"format", format}, {"version", version}};
  out << h.dump() << "\n";
}

// Parses the header line and leaves the stream at the first record.
inline void read_header(std::istream& in, const std::string& path,
                        const std::string& format, std::uint32_t version) {
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(path + ": empty file, expected " + format + " header");
  json h = json::parse(line, nullptr, false);
  if (h.is_discarded() || !h.is_object() || !h.contains("format") ||
      h["format"] != format)
    throw FormatError(path + ": not a " + format + " file");
  if (!h.contains("version") || !h["version"].is_number_unsigned() ||
      h["version"].get<std::uint32_t>() != version)
    throw FormatError(path + ": unsupported " + format + " version");
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path,
                     const std::string& format, std::uint32_t version,
                     Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open: " + path.string());
  read_header(in, path.string(), format, version);
  std::string line;
  std::uint64_t line_no = 1;  // header was line 1
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ParseError("invalid JSON record", line_no, "");
    if (!j.is_object())
      throw ParseError("record is not a JSON object", line_no, "");
    fn(line_no, j);
  }
}

// Field accessors that name the offending field on error.

inline const json& require(const json& j, const char* field,
                           std::uint64_t line) {
  auto it = j.find(field);
  if (it == j.end()) throw ParseError("missing required field", line, field);
  return *it;
}

inline std::string as_string(const json& j, const char* field,
                             std::uint64_t line) {
  const json& v = require(j, field, line);
  if (!v.is_string()) throw ParseError("expected a string", line, field);
  return v.get<std::string>();
}

inline double as_double(const json& v, const char* field, std::uint64_t line) {
  if (!v.is_number()) throw ParseError("expected a number", line, field);
  return v.get<double>();
}

inline std::uint32_t as_u32(const json& j, const char* field,
                            std::uint64_t line) {
  const json& v = require(j, field, line);
  if (!v.is_number_unsigned()) {
    throw ParseError("expected a non-negative integer", line, field);
  }
  return v.get<std::uint32_t>();
}

inline BoundingBox as_box(const json& v, const char* field,
                          std::uint64_t line) {
  if (!v.is_array() || v.size() != 4)
    throw ParseError("expected [x_min,y_min,x_max,y_max]", line, field);
  BoundingBox b{as_double(v[0], field, line), as_double(v[1], field, line),
                as_double(v[2], field, line), as_double(v[3], field, line)};
  if (!b.valid())
    throw ValidationError(std::string("degenerate box in '") + field +
                              "': x_min < x_max and y_min < y_max required",
                          line);
  return b;
}

inline json box_to_json(const BoundingBox& b) {
  return json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

}  // namespace jsonl

// ---------------------------------------------------------------------------
// Street-style annotations
// ---------------------------------------------------------------------------

namespace detail {

inline const std::set<std::string> kAnnotationKeys = {
    "image_id", "width", "height", "persons", "garments"};
inline const std::set<std::string> kGarmentKeys = {
    "id", "category", "box", "confidence", "pattern",
    "mask", "pixels", "feature"};
inline const std::set<std::string> kItemKeys = {
    "item_id", "category", "pattern", "dominant_bin", "feature", "metadata"};

inline json collect_extras(const json& j, const std::set<std::string>& known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) extra[it.key()] = it.value();
  return extra;
}

inline void check_box_in_image(const BoundingBox& b, std::uint32_t w,
                               std::uint32_t h, const char* what,
                               std::uint64_t line) {
  if (b.x_min < 0 || b.y_min < 0 || b.x_max > w || b.y_max > h)
    throw ValidationError(std::string(what) + " box outside image bounds",
                          line);
}

inline PixelMask parse_mask(const json& v, std::uint64_t line) {
  if (!v.is_object()) throw ParseError("expected an object", line, "mask");
  PixelMask m;
  m.width = jsonl::as_u32(v, "width", line);
  m.height = jsonl::as_u32(v, "height", line);
  const json& runs = jsonl::require(v, "runs", line);
  if (!runs.is_array()) throw ParseError("expected an array", line, "runs");
  for (const json& r : runs) {
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_unsigned() ||
        !r[1].is_number_unsigned())
      throw ParseError("expected [start,length] pairs", line, "runs");
    m.runs.push_back({r[0].get<std::uint64_t>(), r[1].get<std::uint64_t>()});
  }
  if (!m.valid())
    throw ValidationError("mask runs not canonical or outside grid", line);
  return m;
}

inline json mask_to_json(const PixelMask& m) {
  json runs = json::array();
  for (const PixelMask::Run& r : m.runs)
    runs.push_back(json::array({r.start, r.length}));
  return json{{"width", m.width}, {"height", m.height}, {"runs", runs}};
}

inline void check_mask_in_box(const PixelMask& m, const BoundingBox& box,
                              double margin, std::uint64_t line) {
  for (const PixelMask::Run& r : m.runs) {
    for (std::uint64_t off = r.start; off < r.start + r.length; ++off) {
      const double px = static_cast<double>(off % m.width);
      const double py = static_cast<double>(off / m.width);
      if (px < box.x_min - margin || px + 1 > box.x_max + margin ||
          py < box.y_min - margin || py + 1 > box.y_max + margin)
        throw ValidationError("mask pixel outside dilated detection box",
                              line);
    }
  }
}

inline std::vector<LabColor> parse_pixels(const json& v, std::uint64_t line) {
  if (!v.is_array()) throw ParseError("expected an array", line, "pixels");
  std::vector<LabColor> out;
  out.reserve(v.size());
  for (const json& p : v) {
    if (!p.is_array() || p.size() != 3)
      throw ParseError("expected [L,a,b] triples", line, "pixels");
    LabColor c{jsonl::as_double(p[0], "pixels", line),
               jsonl::as_double(p[1], "pixels", line),
               jsonl::as_double(p[2], "pixels", line)};
    if (!std::isfinite(c.L) || !std::isfinite(c.a) || !std::isfinite(c.b) ||
        c.L < 0 || c.L > 100 || c.a < -128 || c.a > 128 || c.b < -128 ||
        c.b > 128)
      throw ValidationError("pixel color outside Lab range", line);
    out.push_back(c);
  }
  return out;
}

inline json pixels_to_json(const std::vector<LabColor>& pixels) {
  json arr = json::array();
  for (const LabColor& c : pixels) arr.push_back(json::array({c.L, c.a, c.b}));
  return arr;
}

inline GarmentDetection parse_garment(const json& j, std::uint32_t img_w,
                                      std::uint32_t img_h,
                                      const IngestOptions& opts,
                                      std::uint64_t line) {
  GarmentDetection g;
  g.detection_id = jsonl::as_string(j, "id", line);
  if (g.detection_id.empty())
    throw ParseError("detection id must be non-empty", line, "id");

  std::string cat = jsonl::as_string(j, "category", line);
  auto parsed_cat = parse_category(cat);
  if (!parsed_cat)
    throw ValidationError("unknown category '" + cat + "'", line);
  g.category = *parsed_cat;

  g.box = jsonl::as_box(jsonl::require(j, "box", line), "box", line);
  check_box_in_image(g.box, img_w, img_h, "garment", line);

  g.confidence = jsonl::as_double(jsonl::require(j, "confidence", line),
                                  "confidence", line);
  if (!(g.confidence >= 0.0 && g.confidence <= 1.0))
    throw ValidationError("confidence outside [0,1]", line);

  if (j.contains("pattern") && !j["pattern"].is_null()) {
    std::string pat = jsonl::as_string(j, "pattern", line);
    auto parsed_pat = parse_pattern(pat);
    if (!parsed_pat)
      throw ValidationError("unknown pattern '" + pat + "'", line);
    g.pattern = *parsed_pat;
  }

  if (j.contains("mask") && !j["mask"].is_null()) {
    PixelMask m = parse_mask(j["mask"], line);
    if (m.width != img_w || m.height != img_h)
      throw ValidationError("mask grid does not match image dimensions",
                            line);
    check_mask_in_box(m, g.box, opts.mask_margin, line);
    g.mask = std::move(m);
  }

  if (j.contains("pixels") && !j["pixels"].is_null()) {
    g.pixels = parse_pixels(j["pixels"], line);
    if (!g.mask)
      throw ValidationError("segmented pixels present without a mask", line);
    if (g.pixels.size() != g.mask->foreground_count())
      throw ValidationError(
          "pixel count does not match mask foreground count", line);
  }

  if (j.contains("feature") && !j["feature"].is_null())
    g.feature_ref = jsonl::as_string(j, "feature", line);

  g.extra = collect_extras(j, kGarmentKeys);
  return g;
}

inline json garment_to_json(const GarmentDetection& g) {
  json j = g.extra.is_object() ? g.extra : json::object();
  j["id"] = g.detection_id;
  j["category"] = to_string(g.category);
  j["box"] = jsonl::box_to_json(g.box);
  j["confidence"] = g.confidence;
  if (g.pattern) j["pattern"] = to_string(*g.pattern);
  if (g.mask) j["mask"] = mask_to_json(*g.mask);
  if (!g.pixels.empty()) j["pixels"] = pixels_to_json(g.pixels);
  if (g.feature_ref) j["feature"] = *g.feature_ref;
  return j;
}

}  // namespace detail

inline std::vector<StreetStyleAnnotation> load_street_annotations(
    const std::filesystem::path& path, const IngestOptions& opts = {}) {
  std::vector<StreetStyleAnnotation> out;
  jsonl::for_each_record(
      path, "stylerec-annotations", kAnnotationsFormatVersion,
      [&](std::uint64_t line, const json& j) {
        StreetStyleAnnotation a;
        a.image_id = jsonl::as_string(j, "image_id", line);
        if (a.image_id.empty())
          throw ParseError("image_id must be non-empty", line, "image_id");
        a.width = jsonl::as_u32(j, "width", line);
        a.height = jsonl::as_u32(j, "height", line);
        if (a.width == 0 || a.height == 0)
          throw ValidationError("image dimensions must be positive", line);

        const json& persons = jsonl::require(j, "persons", line);
        if (!persons.is_array())
          throw ParseError("expected an array", line, "persons");
        for (const json& p : persons) {
          BoundingBox b = jsonl::as_box(p, "persons", line);
          detail::check_box_in_image(b, a.width, a.height, "person", line);
          a.person_boxes.push_back(b);
        }

        const json& garments = jsonl::require(j, "garments", line);
        if (!garments.is_array())
          throw ParseError("expected an array", line, "garments");
        std::set<std::string> seen_ids;
        for (const json& g : garments) {
          if (!g.is_object())
            throw ParseError("garment is not an object", line, "garments");
          GarmentDetection det =
              detail::parse_garment(g, a.width, a.height, opts, line);
          if (!seen_ids.insert(det.detection_id).second)
            throw ValidationError(
                "duplicate detection id '" + det.detection_id + "'", line);
          a.garments.push_back(std::move(det));
        }

        a.extra = detail::collect_extras(j, detail::kAnnotationKeys);
        out.push_back(std::move(a));
      });
  return out;
}

inline void save_street_annotations(
    const std::filesystem::path& path,
    std::span<const StreetStyleAnnotation> annotations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  jsonl::write_header(out, "stylerec-annotations", kAnnotationsFormatVersion);
  for (const StreetStyleAnnotation& a : annotations) {
    json j = a.extra.is_object() ? a.extra : json::object();
    j["image_id"] = a.image_id;
    j["width"] = a.width;
    j["height"] = a.height;
    json persons = json::array();
    for (const BoundingBox& b : a.person_boxes)
      persons.push_back(jsonl::box_to_json(b));
    j["persons"] = persons;
    json garments = json::array();
    for (const GarmentDetection& g : a.garments)
      garments.push_back(detail::garment_to_json(g));
    j["garments"] = garments;
    out << j.dump() << "\n";
  }
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Inventory catalog
// ---------------------------------------------------------------------------

inline Catalog load_inventory(const std::filesystem::path& path) {
  Catalog catalog;
  jsonl::for_each_record(
      path, "stylerec-catalog", kCatalogFormatVersion,
      [&](std::uint64_t line, const json& j) {
        InventoryItem item;
        item.item_id = jsonl::as_string(j, "item_id", line);
        if (item.item_id.empty())
          throw ParseError("item_id must be non-empty", line, "item_id");

        std::string cat = jsonl::as_string(j, "category", line);
        auto parsed_cat = parse_category(cat);
        if (!parsed_cat)
          throw ValidationError("unknown category '" + cat + "'", line);
        item.category = *parsed_cat;

        if (j.contains("pattern") && !j["pattern"].is_null()) {
          std::string pat = jsonl::as_string(j, "pattern", line);
          auto parsed_pat = parse_pattern(pat);
          if (!parsed_pat)
            throw ValidationError("unknown pattern '" + pat + "'", line);
          item.pattern = *parsed_pat;
        }

        if (j.contains("dominant_bin") && !j["dominant_bin"].is_null())
          item.dominant_bin = jsonl::as_u32(j, "dominant_bin", line);

        if (j.contains("feature") && !j["feature"].is_null())
          item.feature_ref = jsonl::as_string(j, "feature", line);

        if (j.contains("metadata") && !j["metadata"].is_null()) {
          const json& meta = j["metadata"];
          if (!meta.is_object())
            throw ParseError("expected an object", line, "metadata");
          for (auto it = meta.begin(); it != meta.end(); ++it) {
            if (!it.value().is_string())
              throw ParseError("metadata values must be strings", line,
                               "metadata");
            item.metadata[it.key()] = it.value().get<std::string>();
          }
        }

        item.extra = detail::collect_extras(j, detail::kItemKeys);
        try {
          catalog.add(std::move(item));
        } catch (const ValidationError& e) {
          throw ValidationError(e.what(), line);
        }
      });
  return catalog;
}

inline void save_inventory(const std::filesystem::path& path,
                           const Catalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  jsonl::write_header(out, "stylerec-catalog", kCatalogFormatVersion);
  for (const InventoryItem& item : catalog.items()) {
    json j = item.extra.is_object() ? item.extra : json::object();
    j["item_id"] = item.item_id;
    j["category"] = to_string(item.category);
    if (item.pattern) j["pattern"] = to_string(*item.pattern);
    if (item.dominant_bin) j["dominant_bin"] = *item.dominant_bin;
    if (item.feature_ref) j["feature"] = *item.feature_ref;
    if (!item.metadata.empty()) {
      json meta = json::object();
      for (const auto& [k, v] : item.metadata) meta[k] = v;
      j["metadata"] = meta;
    }
    out << j.dump() << "\n";
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace stylerec
