#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylerec/error.hpp"
#include "stylerec/evalmetrics.hpp"
#include "stylerec/ingest.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

inline constexpr std::uint32_t kDetectionsFormatVersion = 1;
inline constexpr std::uint32_t kLabelsFormatVersion = 1;

// Detection predictions: JSON lines with image_id, category, box, confidence.

inline std::vector<DetectionPrediction> load_detection_predictions(
    const std::filesystem::path& path) {
  std::vector<DetectionPrediction> out;
  jsonl::for_each_record(
      path, "stylerec-detections", kDetectionsFormatVersion,
      [&](std::uint64_t line, const json& j) {
        DetectionPrediction p;
        p.image_id = jsonl::as_string(j, "image_id", line);
        std::string cat = jsonl::as_string(j, "category", line);
        auto parsed = parse_category(cat);
        if (!parsed)
          throw ValidationError("unknown category '" + cat + "'", line);
        p.category = *parsed;
        p.box = jsonl::as_box(jsonl::require(j, "box", line), "box", line);
        p.confidence = jsonl::as_double(jsonl::require(j, "confidence", line),
                                        "confidence", line);
        if (!(p.confidence >= 0 && p.confidence <= 1))
          throw ValidationError("confidence outside [0,1]", line);
        out.push_back(std::move(p));
      });
  return out;
}

inline void save_detection_predictions(
    const std::filesystem::path& path,
    std::span<const DetectionPrediction> predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  jsonl::write_header(out, "stylerec-detections", kDetectionsFormatVersion);
  for (const DetectionPrediction& p : predictions) {
    json j{{"image_id", p.image_id},
           {"category", to_string(p.category)},
           {"box", jsonl::box_to_json(p.box)},
           {"confidence", p.confidence}};
    out << j.dump() << "\n";
  }
}

inline std::vector<GroundTruthBox> ground_truth_boxes(
    std::span<const StreetStyleAnnotation> annotations) {
  std::vector<GroundTruthBox> out;
  for (const StreetStyleAnnotation& a : annotations)
    for (const GarmentDetection& g : a.garments)
      out.push_back({a.image_id, g.category, g.box});
  return out;
}

// Classification labels: JSON lines with id and label, joined by id.

inline std::map<std::string, std::string> load_labels(
    const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  jsonl::for_each_record(path, "stylerec-labels", kLabelsFormatVersion,
                         [&](std::uint64_t line, const json& j) {
                           std::string id = jsonl::as_string(j, "id", line);
                           std::string label =
                               jsonl::as_string(j, "label", line);
                           if (!out.emplace(id, label).second)
                             throw ValidationError(
                                 "duplicate label id '" + id + "'", line);
                         });
  return out;
}

inline void save_labels(const std::filesystem::path& path,
                        const std::map<std::string, std::string>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  jsonl::write_header(out, "stylerec-labels", kLabelsFormatVersion);
  for (const auto& [id, label] : labels) {
    json j{{"id", id}, {"label", label}};
    out << j.dump() << "\n";
  }
}

// Segmentation label map from an annotation: background is class 0,
// categories are 1..5 in declaration order. Masks paint in garment order,
// so a later garment overwrites earlier ones on overlap.
inline LabelMap rasterize_labels(const StreetStyleAnnotation& a) {
  LabelMap map;
  map.width = a.width;
  map.height = a.height;
  map.labels.assign(static_cast<std::size_t>(a.width) * a.height, 0);
  for (const GarmentDetection& g : a.garments) {
    if (!g.mask) continue;
    const auto label = static_cast<std::uint8_t>(
        static_cast<std::uint8_t>(g.category) + 1);
    for (const PixelMask::Run& r : g.mask->runs)
      for (std::uint64_t off = r.start; off < r.start + r.length; ++off)
        map.labels[off] = label;
  }
  return map;
}

}  // namespace stylerec
