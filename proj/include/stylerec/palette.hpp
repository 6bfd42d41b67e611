#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stylerec/colorlab.hpp"
#include "stylerec/error.hpp"
#include "stylerec/rng.hpp"
#include "stylerec/textio.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

// Per-category color map. The centroid order is the bin index used by
// co-occurrence matrices, so it is part of the palette's identity and is
// preserved by persistence.
struct Palette {
  GarmentCategory category = GarmentCategory::CoatsJackets;
  std::vector<LabColor> centroids;
  std::uint64_t seed = 0;
  std::uint32_t iterations = 0;
  double final_inertia = 0.0;

  std::uint32_t size() const { return static_cast<std::uint32_t>(centroids.size()); }
};

struct ColorHistogram {
  std::uint32_t palette_size = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (std::uint64_t c : counts) n += c;
    return n;
  }
};

struct KMeansResult {
  Palette palette;
  std::vector<double> inertia_history;  // one entry per Lloyd iteration
  bool k_clamped = false;               // k exceeded the distinct-color count
};

namespace detail {

inline std::size_t nearest_centroid(const LabColor& p,
                                    std::span<const LabColor> centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    double d = delta_e_squared(p, centroids[j]);
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = j;
    }
  }
  return best;
}

inline std::size_t count_distinct(std::vector<LabColor> pixels) {
  std::sort(pixels.begin(), pixels.end(), [](const LabColor& x, const LabColor& y) {
    if (x.L != y.L) return x.L < y.L;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  std::size_t n = 0;
  for (std::size_t i = 0; i < pixels.size(); ++i)
    if (i == 0 || !(pixels[i] == pixels[i - 1])) ++n;
  return n;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed
// (pixels, k, seed): a private RNG stream, sequential accumulation and
// index-based tie breaks. Empty clusters are repaired by moving the point
// farthest from its centroid out of the cluster with the largest
// within-cluster sum of squares, which never increases the inertia.
// Stops when the relative inertia improvement falls below 1e-6 or after
// 300 iterations.
inline KMeansResult build_palette(std::span<const LabColor> pixels,
                                  std::uint32_t k, std::uint64_t seed,
                                  GarmentCategory category =
                                      GarmentCategory::CoatsJackets) {
  if (pixels.empty()) throw ValidationError("build_palette: empty pixel list");
  if (k == 0) throw ValidationError("build_palette: k must be >= 1");

  KMeansResult result;
  const std::size_t n = pixels.size();
  const std::size_t distinct =
      detail::count_distinct({pixels.begin(), pixels.end()});
  std::size_t k_eff = k;
  if (k_eff > distinct) {
    k_eff = distinct;
    result.k_clamped = true;
  }

  Rng rng(seed);
  std::vector<LabColor> centroids;
  centroids.reserve(k_eff);

  // k-means++ seeding
  centroids.push_back(pixels[rng.next_index(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
    d2[i] = delta_e_squared(pixels[i], centroids[0]);
  while (centroids.size() < k_eff) {
    double total = 0;
    for (double d : d2) total += d;
    double r = rng.next_double() * total;
    std::size_t chosen = n - 1;
    double cum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      cum += d2[i];
      if (cum > r) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(pixels[chosen]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], delta_e_squared(pixels[i], centroids.back()));
  }

  std::vector<std::size_t> assign(n, 0);
  constexpr std::uint32_t kMaxIterations = 300;
  constexpr double kRelTol = 1e-6;
  double prev_inertia = std::numeric_limits<double>::infinity();
  std::uint32_t iterations = 0;

  for (std::uint32_t iter = 0; iter < kMaxIterations; ++iter) {
    ++iterations;
    for (std::size_t i = 0; i < n; ++i)
      assign[i] = detail::nearest_centroid(pixels[i], centroids);

    // repair empty clusters
    std::vector<std::uint64_t> sizes(k_eff, 0);
    for (std::size_t a : assign) ++sizes[a];
    for (std::size_t e = 0; e < k_eff; ++e) {
      while (sizes[e] == 0) {
        std::vector<double> sse(k_eff, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          sse[assign[i]] += delta_e_squared(pixels[i], centroids[assign[i]]);
        std::size_t src = k_eff;
        for (std::size_t c = 0; c < k_eff; ++c) {
          if (sizes[c] < 2) continue;
          if (src == k_eff || sse[c] > sse[src]) src = c;
        }
        if (src == k_eff) break;  // cannot happen while k_eff <= distinct
        std::size_t worst = n;
        double worst_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (assign[i] != src) continue;
          double d = delta_e_squared(pixels[i], centroids[src]);
          if (d > worst_d) {
            worst_d = d;
            worst = i;
          }
        }
        assign[worst] = e;
        --sizes[src];
        ++sizes[e];
      }
    }

    // centroid update
    std::vector<LabColor> sums(k_eff);
    std::vector<std::uint64_t> counts(k_eff, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]].L += pixels[i].L;
      sums[assign[i]].a += pixels[i].a;
      sums[assign[i]].b += pixels[i].b;
      ++counts[assign[i]];
    }
    for (std::size_t j = 0; j < k_eff; ++j) {
      if (counts[j] == 0) continue;
      centroids[j] = {sums[j].L / counts[j], sums[j].a / counts[j],
                      sums[j].b / counts[j]};
    }

    double inertia = 0;
    for (std::size_t i = 0; i < n; ++i)
      inertia += delta_e_squared(pixels[i], centroids[assign[i]]);
    result.inertia_history.push_back(inertia);

    if (inertia == 0.0) break;
    if (prev_inertia != std::numeric_limits<double>::infinity() &&
        prev_inertia - inertia <= kRelTol * prev_inertia)
      break;
    prev_inertia = inertia;
  }

  result.palette.category = category;
  result.palette.centroids = std::move(centroids);
  result.palette.seed = seed;
  result.palette.iterations = iterations;
  result.palette.final_inertia = result.inertia_history.back();
  return result;
}

// Index of the delta_e-nearest centroid; ties go to the lowest index.
inline std::uint32_t assign_bin(const LabColor& c, const Palette& p) {
  if (p.centroids.empty()) throw ValidationError("assign_bin: empty palette");
  return static_cast<std::uint32_t>(detail::nearest_centroid(c, p.centroids));
}

// Histogram over palette bins plus the argmax bin (ties to lowest index).
inline std::pair<std::uint32_t, ColorHistogram> dominant_color(
    std::span<const LabColor> pixels, const Palette& p) {
  if (pixels.empty()) throw ValidationError("dominant_color: empty pixel list");
  ColorHistogram h;
  h.palette_size = p.size();
  h.counts.assign(p.size(), 0);
  for (const LabColor& px : pixels) ++h.counts[assign_bin(px, p)];
  std::uint32_t best = 0;
  for (std::uint32_t j = 1; j < h.counts.size(); ++j)
    if (h.counts[j] > h.counts[best]) best = j;
  return {best, std::move(h)};
}

// Bins whose centroid has chroma >= min_chroma and hue within hue_tol
// degrees of target_h, sorted by hue distance ascending (ties by index).
inline std::vector<std::uint32_t> bins_near_hue(const Palette& p,
                                                double target_h,
                                                double hue_tol,
                                                double min_chroma) {
  if (!(hue_tol > 0.0 && hue_tol <= 180.0))
    throw ValidationError("bins_near_hue: hue_tol must be in (0,180]");
  if (min_chroma < 0)
    throw ValidationError("bins_near_hue: min_chroma must be >= 0");
  std::vector<std::pair<double, std::uint32_t>> hits;
  for (std::uint32_t j = 0; j < p.size(); ++j) {
    LchColor lch = lab_to_lch(p.centroids[j]);
    if (lch.C < min_chroma) continue;
    double d = hue_distance(lch.h, target_h);
    if (d <= hue_tol) hits.emplace_back(d, j);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::uint32_t> out;
  out.reserve(hits.size());
  for (auto& [d, j] : hits) out.push_back(j);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: "stylerec-palette" text format, one centroid per line.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kPaletteFormatVersion = 1;

inline void save_palette(const std::filesystem::path& path, const Palette& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  out << "stylerec-palette " << kPaletteFormatVersion << "\n";
  out << "category " << to_string(p.category) << "\n";
  out << "seed " << p.seed << "\n";
  out << "k " << p.size() << "\n";
  out << "iterations " << p.iterations << "\n";
  out << "inertia " << format_double(p.final_inertia) << "\n";
  for (const LabColor& c : p.centroids)
    out << format_double(c.L) << ' ' << format_double(c.a) << ' '
        << format_double(c.b) << "\n";
  if (!out) throw Error("write failed: " + path.string());
}

inline Palette load_palette(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open: " + path.string());
  TextReader reader(in, path.string());
  reader.expect_header("stylerec-palette", kPaletteFormatVersion);

  Palette p;
  std::string cat = reader.keyword_line("category");
  auto parsed = parse_category(cat);
  if (!parsed)
    throw ParseError("unknown category '" + cat + "'", reader.line_number(),
                     "category");
  p.category = *parsed;
  p.seed = reader.keyword_u64("seed");
  std::uint64_t k = reader.keyword_u64("k");
  if (k == 0) throw ParseError("k must be >= 1", reader.line_number(), "k");
  p.iterations = static_cast<std::uint32_t>(reader.keyword_u64("iterations"));
  p.final_inertia = reader.keyword_double("inertia");
  p.centroids.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    auto nums = reader.number_line(3);
    LabColor c{nums[0], nums[1], nums[2]};
    if (!std::isfinite(c.L) || !std::isfinite(c.a) || !std::isfinite(c.b))
      throw ValidationError("non-finite centroid", reader.line_number());
    p.centroids.push_back(c);
  }
  return p;
}

}  // namespace stylerec
