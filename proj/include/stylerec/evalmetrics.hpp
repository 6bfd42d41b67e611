#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stylerec/error.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

struct EvalCounts {
  std::uint64_t true_positive = 0;
  std::uint64_t false_positive = 0;
  std::uint64_t false_negative = 0;
};

// area(a ∩ b) / area(a ∪ b)
inline double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

// Dense per-pixel class labels, row-major. Class 0 is background.
struct LabelMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> labels;
};

struct SegClassResult {
  EvalCounts counts;
  // IoU = TP/(TP+FP+FN); PA = TP/(TP+FN). Absent when the denominator is 0.
  std::optional<double> iou;
  std::optional<double> pixel_accuracy;
};

struct SegReport {
  std::vector<SegClassResult> per_class;
  std::optional<double> mean_iou;            // unweighted over defined classes
  std::optional<double> mean_pixel_accuracy; // unweighted over defined classes
};

// Dataset-level accumulation: counts are summed over all map pairs before
// any ratio is formed.
inline SegReport mask_metrics(std::span<const LabelMap> predictions,
                              std::span<const LabelMap> ground_truth,
                              std::size_t num_classes) {
  if (predictions.size() != ground_truth.size())
    throw ValidationError("mask_metrics: prediction/ground-truth count mismatch");
  SegReport report;
  report.per_class.resize(num_classes);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const LabelMap& p = predictions[i];
    const LabelMap& g = ground_truth[i];
    if (p.width != g.width || p.height != g.height ||
        p.labels.size() != g.labels.size())
      throw ValidationError("mask_metrics: dimension mismatch at map " +
                            std::to_string(i));
    for (std::size_t px = 0; px < p.labels.size(); ++px) {
      const std::uint8_t pl = p.labels[px], gl = g.labels[px];
      if (pl >= num_classes || gl >= num_classes)
        throw ValidationError("mask_metrics: label outside class set");
      if (pl == gl) {
        ++report.per_class[pl].counts.true_positive;
      } else {
        ++report.per_class[pl].counts.false_positive;
        ++report.per_class[gl].counts.false_negative;
      }
    }
  }
  double iou_sum = 0, pa_sum = 0;
  std::size_t iou_n = 0, pa_n = 0;
  for (SegClassResult& c : report.per_class) {
    const auto tp = c.counts.true_positive, fp = c.counts.false_positive,
               fn = c.counts.false_negative;
    if (tp + fp + fn > 0) {
      c.iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
      iou_sum += *c.iou;
      ++iou_n;
    }
    if (tp + fn > 0) {
      c.pixel_accuracy = static_cast<double>(tp) / static_cast<double>(tp + fn);
      pa_sum += *c.pixel_accuracy;
      ++pa_n;
    }
  }
  if (iou_n) report.mean_iou = iou_sum / iou_n;
  if (pa_n) report.mean_pixel_accuracy = pa_sum / pa_n;
  return report;
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

struct DetectionPrediction {
  std::string image_id;
  GarmentCategory category = GarmentCategory::CoatsJackets;
  BoundingBox box;
  double confidence = 0.0;
};

struct GroundTruthBox {
  std::string image_id;
  GarmentCategory category = GarmentCategory::CoatsJackets;
  BoundingBox box;
};

// Greedy non-maximum suppression per category: highest confidence first
// (ties by input order), suppressing kept-box overlaps above the threshold.
inline std::vector<DetectionPrediction> nms(
    std::span<const DetectionPrediction> detections, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw ValidationError("nms: threshold must be in (0,1]");
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  std::vector<DetectionPrediction> kept;
  for (std::size_t idx : order) {
    const DetectionPrediction& d = detections[idx];
    bool suppressed = false;
    for (const DetectionPrediction& k : kept) {
      if (k.category != d.category) continue;
      if (box_iou(k.box, d.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

// Average precision for one category with greedy IoU matching (a match
// needs IoU strictly above the threshold; each ground-truth box matches at
// most once). All-point interpolation: the area under the precision
// envelope of the full ranking. Returns nullopt when the category has no
// ground truth.
inline std::optional<double> average_precision(
    std::span<const DetectionPrediction> predictions,
    std::span<const GroundTruthBox> ground_truth, GarmentCategory category,
    double iou_threshold = 0.5) {
  std::vector<const GroundTruthBox*> gts;
  std::map<std::string, std::vector<std::size_t>> gt_by_image;
  for (const GroundTruthBox& g : ground_truth) {
    if (g.category != category) continue;
    gt_by_image[g.image_id].push_back(gts.size());
    gts.push_back(&g);
  }
  if (gts.empty()) return std::nullopt;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i].category == category) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });

  std::vector<bool> matched(gts.size(), false);
  std::vector<bool> is_tp;
  is_tp.reserve(order.size());
  for (std::size_t idx : order) {
    const DetectionPrediction& p = predictions[idx];
    double best_iou = iou_threshold;  // strict: must exceed
    std::size_t best_gt = gts.size();
    auto it = gt_by_image.find(p.image_id);
    if (it != gt_by_image.end()) {
      for (std::size_t gi : it->second) {
        if (matched[gi]) continue;
        const double iou = box_iou(p.box, gts[gi]->box);
        if (iou > best_iou) {
          best_iou = iou;
          best_gt = gi;
        }
      }
    }
    if (best_gt < gts.size()) {
      matched[best_gt] = true;
      is_tp.push_back(true);
    } else {
      is_tp.push_back(false);
    }
  }

  // precision-recall over the ranking
  const double num_gt = static_cast<double>(gts.size());
  std::vector<double> precision, recall;
  std::uint64_t tp = 0;
  for (std::size_t i = 0; i < is_tp.size(); ++i) {
    if (is_tp[i]) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tp) / num_gt);
  }
  // precision envelope from the right, integrated over recall steps
  double ap = 0.0;
  double max_prec = 0.0;
  for (std::size_t i = is_tp.size(); i-- > 0;) {
    max_prec = std::max(max_prec, precision[i]);
    const double r_lo = i == 0 ? 0.0 : recall[i - 1];
    ap += (recall[i] - r_lo) * max_prec;
  }
  return ap;
}

// Unweighted mean over categories with a defined AP.
inline double mean_average_precision(
    std::span<const std::optional<double>> per_category) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& ap : per_category) {
    if (!ap) continue;
    sum += *ap;
    ++n;
  }
  if (n == 0)
    throw ValidationError("mean_average_precision: no category has ground truth");
  return sum / n;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

struct ClassificationReport {
  // confusion[true_class][predicted_class]
  std::vector<std::vector<std::uint64_t>> confusion;
  std::vector<std::optional<double>> per_class_accuracy;  // diagonal / support
  double mean_accuracy = 0.0;     // unweighted over classes with support
  double overall_accuracy = 0.0;  // trace / total (support-weighted mean)
};

inline ClassificationReport classification_report(
    std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
    std::size_t num_classes) {
  if (predicted.size() != truth.size())
    throw ValidationError("classification_report: label list length mismatch");
  ClassificationReport rep;
  rep.confusion.assign(num_classes, std::vector<std::uint64_t>(num_classes, 0));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= num_classes || truth[i] >= num_classes)
      throw ValidationError("classification_report: label outside class set");
    ++rep.confusion[truth[i]][predicted[i]];
  }
  rep.per_class_accuracy.resize(num_classes);
  double sum = 0;
  std::size_t n = 0;
  std::uint64_t trace = 0, total = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::uint64_t support = 0;
    for (std::uint64_t v : rep.confusion[c]) support += v;
    trace += rep.confusion[c][c];
    total += support;
    if (support > 0) {
      rep.per_class_accuracy[c] =
          static_cast<double>(rep.confusion[c][c]) / static_cast<double>(support);
      sum += *rep.per_class_accuracy[c];
      ++n;
    }
  }
  rep.mean_accuracy = n ? sum / n : 0.0;
  rep.overall_accuracy =
      total ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
  return rep;
}

}  // namespace stylerec
