#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stylerec/association.hpp"
#include "stylerec/corpus.hpp"
#include "stylerec/error.hpp"
#include "stylerec/palette.hpp"
#include "stylerec/textio.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

// ---------------------------------------------------------------------------
// Index domains
// ---------------------------------------------------------------------------

struct Domain {
  enum class Type : std::uint8_t { ColorBins, Patterns, Items };

  Type type = Type::Patterns;
  // Populated for ColorBins and Items.
  std::optional<GarmentCategory> category;
  std::uint32_t size = 0;

  bool operator==(const Domain&) const = default;

  static Domain color_bins(const Palette& p) {
    return {Type::ColorBins, p.category, p.size()};
  }
  static Domain patterns() {
    return {Type::Patterns, std::nullopt,
            static_cast<std::uint32_t>(kNumPatterns)};
  }
};

inline std::string to_string(const Domain& d) {
  switch (d.type) {
    case Domain::Type::ColorBins:
      return "color " + std::string(to_string(*d.category)) + " " +
             std::to_string(d.size);
    case Domain::Type::Patterns:
      return "pattern " + std::to_string(d.size);
    case Domain::Type::Items:
      return "items " + std::string(to_string(*d.category)) + " " +
             std::to_string(d.size);
  }
  throw Error("invalid Domain type");
}

inline Domain parse_domain(const std::string& s, std::uint64_t line) {
  std::istringstream iss(s);
  std::string type;
  iss >> type;
  Domain d;
  if (type == "pattern") {
    std::uint64_t n = 0;
    if (!(iss >> n)) throw ParseError("bad pattern domain", line, "domain");
    d = Domain::patterns();
    if (n != d.size)
      throw ParseError("pattern domain must have " + std::to_string(d.size) +
                           " classes",
                       line, "domain");
    return d;
  }
  if (type == "color" || type == "items") {
    std::string cat;
    std::uint64_t n = 0;
    if (!(iss >> cat >> n) || n == 0)
      throw ParseError("bad domain descriptor", line, "domain");
    auto parsed = parse_category(cat);
    if (!parsed) throw ParseError("unknown category '" + cat + "'", line, "domain");
    d.type = type == "color" ? Domain::Type::ColorBins : Domain::Type::Items;
    d.category = *parsed;
    d.size = static_cast<std::uint32_t>(n);
    return d;
  }
  throw ParseError("unknown domain type '" + type + "'", line, "domain");
}

// ---------------------------------------------------------------------------
// Count matrix
// ---------------------------------------------------------------------------

// Integer joint-occurrence counts over (row domain x column domain) with a
// Laplace smoothing parameter applied only when probabilities are derived.
// Rows are the query ("top") side; columns the recommended ("bottom") side.
struct CooccurrenceMatrix {
  PairKind kind = PairKind::CoatsJacketsDresses;
  Domain rows, cols;
  double alpha = 1.0;
  std::vector<std::uint64_t> counts;  // rows.size * cols.size, row-major

  CooccurrenceMatrix() = default;
  CooccurrenceMatrix(PairKind k, Domain r, Domain c, double a = 1.0)
      : kind(k), rows(r), cols(c), alpha(a) {
    if (a < 0) throw ValidationError("alpha must be >= 0");
    counts.assign(static_cast<std::size_t>(rows.size) * cols.size, 0);
  }

  std::uint64_t& at(std::uint32_t r, std::uint32_t c) {
    return counts[static_cast<std::size_t>(r) * cols.size + c];
  }
  std::uint64_t at(std::uint32_t r, std::uint32_t c) const {
    return counts[static_cast<std::size_t>(r) * cols.size + c];
  }

  std::uint64_t total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  }

  std::uint64_t row_sum(std::uint32_t r) const {
    std::uint64_t n = 0;
    for (std::uint32_t c = 0; c < cols.size; ++c) n += at(r, c);
    return n;
  }

  // Swapped domains; used when the query arrives on the column side.
  CooccurrenceMatrix transposed() const {
    CooccurrenceMatrix t(kind, cols, rows, alpha);
    for (std::uint32_t r = 0; r < rows.size; ++r)
      for (std::uint32_t c = 0; c < cols.size; ++c) t.at(c, r) = at(r, c);
    return t;
  }

  bool operator==(const CooccurrenceMatrix&) const = default;
};

struct RowDistribution {
  std::uint32_t row = 0;
  std::vector<double> probabilities;
};

// Laplace-smoothed row conditional:
//   p[j] = (counts[row,j] + alpha) / (row_sum + alpha * ncols)
// A row with zero denominator (alpha = 0, no observations) falls back to
// the uniform distribution.
inline RowDistribution row_distribution(const CooccurrenceMatrix& m,
                                        std::uint32_t row) {
  if (row >= m.rows.size)
    throw ValidationError("row index " + std::to_string(row) +
                          " out of range");
  RowDistribution d;
  d.row = row;
  d.probabilities.resize(m.cols.size);
  const double denom =
      static_cast<double>(m.row_sum(row)) + m.alpha * m.cols.size;
  if (denom == 0.0) {
    std::fill(d.probabilities.begin(), d.probabilities.end(),
              1.0 / m.cols.size);
    return d;
  }
  for (std::uint32_t c = 0; c < m.cols.size; ++c)
    d.probabilities[c] = (static_cast<double>(m.at(row, c)) + m.alpha) / denom;
  return d;
}

// Argmax column of the smoothed row; ties to the lowest column index.
inline std::uint32_t best_match(const CooccurrenceMatrix& m,
                                std::uint32_t row) {
  RowDistribution d = row_distribution(m, row);
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < d.probabilities.size(); ++c)
    if (d.probabilities[c] > d.probabilities[best]) best = c;
  return best;
}

// Top-k columns by smoothed probability, descending; ties by ascending
// index. Returns min(k, ncols) entries.
inline std::vector<std::uint32_t> top_k_match(const CooccurrenceMatrix& m,
                                              std::uint32_t row,
                                              std::uint32_t k) {
  if (k == 0) throw ValidationError("top_k_match: k must be >= 1");
  RowDistribution d = row_distribution(m, row);
  std::vector<std::uint32_t> order(d.probabilities.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t x, std::uint32_t y) {
                     return d.probabilities[x] > d.probabilities[y];
                   });
  order.resize(std::min<std::size_t>(k, order.size()));
  return order;
}

// Element-wise sum; the operands must agree on kind, domains and alpha.
inline CooccurrenceMatrix merge(const CooccurrenceMatrix& a,
                                const CooccurrenceMatrix& b) {
  if (a.kind != b.kind || !(a.rows == b.rows) || !(a.cols == b.cols) ||
      a.alpha != b.alpha)
    throw ValidationError("merge: matrix domains do not match");
  CooccurrenceMatrix out = a;
  for (std::size_t i = 0; i < out.counts.size(); ++i)
    out.counts[i] += b.counts[i];
  return out;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

// Joint counts of dominant colors over association pairs. Pairs whose
// detections lack segmented pixels are skipped and reported, mirroring the
// data actually available from the segmentation stage.
inline CooccurrenceMatrix build_color_matrix(
    PairKind kind, std::span<const AssociationPair> pairs,
    const AnnotationCorpus& corpus, const Palette& top_palette,
    const Palette& bottom_palette, double alpha = 1.0,
    BuildReport* report = nullptr) {
  BuildReport local;
  BuildReport& rep = report ? *report : local;
  if (top_category(kind) != top_palette.category ||
      bottom_category(kind) != bottom_palette.category)
    throw ValidationError("palette categories do not match pair kind " +
                          to_string(kind));

  CooccurrenceMatrix m(kind, Domain::color_bins(top_palette),
                       Domain::color_bins(bottom_palette), alpha);
  for (const AssociationPair& p : pairs) {
    if (p.kind != kind)
      throw ValidationError("pair kind " + to_string(p.kind) +
                            " does not match matrix kind " + to_string(kind));
    const GarmentDetection& top = corpus.resolve(p.image_id, p.top_detection);
    const GarmentDetection& bottom =
        corpus.resolve(p.image_id, p.bottom_detection);
    if (top.pixels.empty() || bottom.pixels.empty()) {
      rep.skip("missing segmented pixels");
      continue;
    }
    const std::uint32_t tb = dominant_color(top.pixels, top_palette).first;
    const std::uint32_t bb =
        dominant_color(bottom.pixels, bottom_palette).first;
    ++m.at(tb, bb);
    ++rep.used;
  }
  return m;
}

// 10x10 joint counts of texture patterns. Pairs with unlabeled detections
// are skipped and reported.
inline CooccurrenceMatrix build_pattern_matrix(
    PairKind kind, std::span<const AssociationPair> pairs,
    const AnnotationCorpus& corpus, double alpha = 1.0,
    BuildReport* report = nullptr) {
  BuildReport local;
  BuildReport& rep = report ? *report : local;
  CooccurrenceMatrix m(kind, Domain::patterns(), Domain::patterns(), alpha);
  for (const AssociationPair& p : pairs) {
    if (p.kind != kind)
      throw ValidationError("pair kind " + to_string(p.kind) +
                            " does not match matrix kind " + to_string(kind));
    const GarmentDetection& top = corpus.resolve(p.image_id, p.top_detection);
    const GarmentDetection& bottom =
        corpus.resolve(p.image_id, p.bottom_detection);
    if (!top.pattern || !bottom.pattern) {
      rep.skip("missing pattern label");
      continue;
    }
    ++m.at(static_cast<std::uint32_t>(*top.pattern),
           static_cast<std::uint32_t>(*bottom.pattern));
    ++rep.used;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Persistence: "stylerec-cooccur" text format, dense or sparse counts.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kMatrixFormatVersion = 1;

inline void save_matrix(const std::filesystem::path& path,
                        const CooccurrenceMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  std::uint64_t nnz = 0;
  for (std::uint64_t c : m.counts) nnz += c != 0;
  const bool sparse = nnz * 3 < m.counts.size();

  out << "stylerec-cooccur " << kMatrixFormatVersion << "\n";
  out << "kind " << to_string(m.kind) << "\n";
  out << "rows " << to_string(m.rows) << "\n";
  out << "cols " << to_string(m.cols) << "\n";
  out << "alpha " << format_double(m.alpha) << "\n";
  out << "total " << m.total() << "\n";
  if (sparse) {
    out << "storage sparse " << nnz << "\n";
    for (std::uint32_t r = 0; r < m.rows.size; ++r)
      for (std::uint32_t c = 0; c < m.cols.size; ++c)
        if (m.at(r, c) != 0) out << r << ' ' << c << ' ' << m.at(r, c) << "\n";
  } else {
    out << "storage dense\n";
    for (std::uint32_t r = 0; r < m.rows.size; ++r) {
      for (std::uint32_t c = 0; c < m.cols.size; ++c) {
        if (c) out << ' ';
        out << m.at(r, c);
      }
      out << "\n";
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

inline CooccurrenceMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open: " + path.string());
  TextReader reader(in, path.string());
  reader.expect_header("stylerec-cooccur", kMatrixFormatVersion);

  std::string kind_s = reader.keyword_line("kind");
  auto kind = parse_pair_kind(kind_s);
  if (!kind)
    throw ParseError("unknown pair kind '" + kind_s + "'",
                     reader.line_number(), "kind");
  Domain rows = parse_domain(reader.keyword_line("rows"), reader.line_number());
  Domain cols = parse_domain(reader.keyword_line("cols"), reader.line_number());
  double alpha = reader.keyword_double("alpha");
  if (alpha < 0)
    throw ParseError("alpha must be >= 0", reader.line_number(), "alpha");
  std::uint64_t total = reader.keyword_u64("total");

  CooccurrenceMatrix m(*kind, rows, cols, alpha);
  std::string storage = reader.keyword_line("storage");
  if (storage.rfind("sparse", 0) == 0) {
    std::istringstream iss(storage);
    std::string word;
    std::uint64_t nnz = 0;
    if (!(iss >> word >> nnz))
      throw ParseError("bad storage line", reader.line_number(), "storage");
    for (std::uint64_t i = 0; i < nnz; ++i) {
      auto toks = reader.token_line(3);
      std::uint64_t r = parse_u64(toks[0], reader.line_number(), "row");
      std::uint64_t c = parse_u64(toks[1], reader.line_number(), "col");
      std::uint64_t n = parse_u64(toks[2], reader.line_number(), "count");
      if (r >= rows.size || c >= cols.size)
        throw ParseError("entry outside matrix dimensions",
                         reader.line_number(), "entry");
      m.at(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)) = n;
    }
  } else if (storage == "dense") {
    for (std::uint32_t r = 0; r < rows.size; ++r) {
      auto toks = reader.token_line(cols.size);
      for (std::uint32_t c = 0; c < cols.size; ++c)
        m.at(r, c) = parse_u64(toks[c], reader.line_number(), "count");
    }
  } else {
    throw ParseError("unknown storage '" + storage + "'",
                     reader.line_number(), "storage");
  }
  if (m.total() != total)
    throw ValidationError(path.string() +
                          ": total does not match stored counts");
  return m;
}

}  // namespace stylerec
