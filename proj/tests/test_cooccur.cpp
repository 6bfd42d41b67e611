#include <catch2/catch_amalgamated.hpp>

#include "stylerec/cooccur.hpp"
#include "stylerec/rng.hpp"
#include "testutil.hpp"

using namespace stylerec;
using Catch::Approx;

namespace {

// Small street scene: one person wearing one top-side and one bottom-side
// garment with the given pixels/patterns.
struct Scene {
  std::vector<StreetStyleAnnotation> annotations;
  std::vector<AssociationPair> pairs;

  void add_pair(PairKind kind, std::vector<LabColor> top_pixels,
                std::vector<LabColor> bottom_pixels,
                std::optional<PatternClass> top_pattern = {},
                std::optional<PatternClass> bottom_pattern = {}) {
    StreetStyleAnnotation a;
    a.image_id = "img-" + std::to_string(annotations.size());
    a.width = 1000;
    a.height = 1500;
    a.person_boxes = {{0, 0, 400, 1400}};

    auto mk = [&](const std::string& id, GarmentCategory cat,
                  BoundingBox box, std::vector<LabColor> pixels,
                  std::optional<PatternClass> pattern) {
      GarmentDetection g;
      g.detection_id = id;
      g.category = cat;
      g.box = box;
      g.confidence = 0.9;
      g.pattern = pattern;
      if (!pixels.empty()) {
        std::vector<std::uint64_t> offsets;
        const std::uint64_t base =
            static_cast<std::uint64_t>(box.y_min + 2) * 1000 +
            static_cast<std::uint64_t>(box.x_min + 2);
        for (std::size_t i = 0; i < pixels.size(); ++i)
          offsets.push_back(base + i);
        g.mask = PixelMask::encode(1000, 1500, offsets);
        g.pixels = std::move(pixels);
      }
      return g;
    };
    a.garments.push_back(mk("t", top_category(kind), {50, 100, 350, 700},
                            std::move(top_pixels), top_pattern));
    a.garments.push_back(mk("b", bottom_category(kind), {50, 700, 350, 1350},
                            std::move(bottom_pixels), bottom_pattern));
    pairs.push_back({a.image_id, 0, kind, "t", "b"});
    annotations.push_back(std::move(a));
  }
};

Palette three_bin_palette(GarmentCategory cat) {
  Palette p;
  p.category = cat;
  p.centroids = {{10, 0, 0}, {50, 0, 0}, {90, 0, 0}};
  return p;
}

Palette six_bin_palette(GarmentCategory cat) {
  Palette p;
  p.category = cat;
  p.centroids = {{5, 0, 0},  {25, 0, 0}, {45, 0, 0},
                 {65, 0, 0}, {85, 0, 0}, {99, 0, 0}};
  return p;
}

}  // namespace

TEST_CASE("empty pair list gives an all-zero matrix") {
  Scene scene;
  AnnotationCorpus corpus(scene.annotations);
  auto m = build_color_matrix(
      PairKind::TopsBlousesSkirts, {}, corpus,
      three_bin_palette(GarmentCategory::TopsBlouses),
      three_bin_palette(GarmentCategory::Skirts));
  CHECK(m.total() == 0);
  CHECK(m.rows.size == 3);
  CHECK(m.cols.size == 3);
}

TEST_CASE("three pairs landing in one cell") {
  Scene scene;
  for (int i = 0; i < 3; ++i)
    scene.add_pair(PairKind::TopsBlousesSkirts,
                   {{50, 0, 0}, {51, 0, 0}},   // bin 1 of the top palette
                   {{90, 0, 0}, {89, 0, 0}});  // bin 2 of the bottom palette
  AnnotationCorpus corpus(scene.annotations);
  auto m = build_color_matrix(PairKind::TopsBlousesSkirts, scene.pairs, corpus,
                              three_bin_palette(GarmentCategory::TopsBlouses),
                              three_bin_palette(GarmentCategory::Skirts));
  CHECK(m.total() == 3);
  CHECK(m.at(1, 2) == 3);
}

TEST_CASE("pairs without pixels are skipped and reported") {
  Scene scene;
  scene.add_pair(PairKind::TopsBlousesSkirts, {{50, 0, 0}}, {{90, 0, 0}});
  scene.add_pair(PairKind::TopsBlousesSkirts, {}, {{90, 0, 0}});
  AnnotationCorpus corpus(scene.annotations);
  BuildReport report;
  auto m = build_color_matrix(PairKind::TopsBlousesSkirts, scene.pairs, corpus,
                              three_bin_palette(GarmentCategory::TopsBlouses),
                              three_bin_palette(GarmentCategory::Skirts), 1.0,
                              &report);
  CHECK(m.total() == 1);
  CHECK(report.used == 1);
  CHECK(report.skipped == 1);
  CHECK(report.skip_reasons.at("missing segmented pixels") == 1);
}

TEST_CASE("palette category mismatch is an error") {
  Scene scene;
  AnnotationCorpus corpus(scene.annotations);
  CHECK_THROWS_AS(
      build_color_matrix(PairKind::TopsBlousesSkirts, {}, corpus,
                         three_bin_palette(GarmentCategory::CoatsJackets),
                         three_bin_palette(GarmentCategory::Skirts)),
      ValidationError);
}

TEST_CASE("mixed pair kinds are an error") {
  Scene scene;
  scene.add_pair(PairKind::TopsBlousesSkirts, {{50, 0, 0}}, {{90, 0, 0}});
  scene.add_pair(PairKind::TopsBlousesTrousers, {{50, 0, 0}}, {{90, 0, 0}});
  AnnotationCorpus corpus(scene.annotations);
  CHECK_THROWS_AS(
      build_color_matrix(PairKind::TopsBlousesSkirts, scene.pairs, corpus,
                         three_bin_palette(GarmentCategory::TopsBlouses),
                         three_bin_palette(GarmentCategory::Skirts)),
      ValidationError);
}

TEST_CASE("pattern matrix is exactly 10x10 and counts labeled pairs") {
  Scene scene;
  AnnotationCorpus empty_corpus(scene.annotations);
  auto zero = build_pattern_matrix(PairKind::TopsBlousesSkirts, {}, empty_corpus);
  CHECK(zero.rows.size == 10);
  CHECK(zero.cols.size == 10);
  CHECK(zero.counts.size() == 100);
  CHECK(zero.total() == 0);

  Scene labeled;
  labeled.add_pair(PairKind::TopsBlousesSkirts, {}, {}, PatternClass::Stripes,
                   PatternClass::Plain);
  labeled.add_pair(PairKind::TopsBlousesSkirts, {}, {}, std::nullopt,
                   PatternClass::Plain);  // unlabeled top: skipped
  AnnotationCorpus corpus(labeled.annotations);
  BuildReport report;
  auto m = build_pattern_matrix(PairKind::TopsBlousesSkirts, labeled.pairs,
                                corpus, 1.0, &report);
  CHECK(m.at(static_cast<std::uint32_t>(PatternClass::Stripes),
             static_cast<std::uint32_t>(PatternClass::Plain)) == 1);
  CHECK(m.total() == 1);
  CHECK(report.skipped == 1);
}

TEST_CASE("row_distribution hand arithmetic") {
  CooccurrenceMatrix m(PairKind::TopsBlousesSkirts,
                       {Domain::Type::ColorBins, GarmentCategory::TopsBlouses, 2},
                       {Domain::Type::ColorBins, GarmentCategory::Skirts, 4},
                       1.0);
  // all-zero row with alpha=1: uniform prior
  auto d = row_distribution(m, 0);
  for (double p : d.probabilities) CHECK(p == Approx(0.25));

  // alpha 0 with counts (3,1): (0.75, 0.25)
  CooccurrenceMatrix m2(PairKind::TopsBlousesSkirts,
                        {Domain::Type::ColorBins, GarmentCategory::TopsBlouses, 2},
                        {Domain::Type::ColorBins, GarmentCategory::Skirts, 2},
                        0.0);
  m2.at(0, 0) = 3;
  m2.at(0, 1) = 1;
  auto d2 = row_distribution(m2, 0);
  CHECK(d2.probabilities[0] == Approx(0.75));
  CHECK(d2.probabilities[1] == Approx(0.25));

  // alpha 1 with counts (0,2): ((0+1)/(2+2), (2+1)/(2+2)) = (0.25, 0.75)
  CooccurrenceMatrix m3 = m2;
  m3.alpha = 1.0;
  m3.at(0, 0) = 0;
  m3.at(0, 1) = 2;
  auto d3 = row_distribution(m3, 0);
  CHECK(d3.probabilities[0] == Approx(0.25));
  CHECK(d3.probabilities[1] == Approx(0.75));

  CHECK_THROWS_AS(row_distribution(m, 5), ValidationError);
}

TEST_CASE("row distributions sum to one and are positive when alpha > 0") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t rows = 1 + static_cast<std::uint32_t>(rng.next_index(8));
    const std::uint32_t cols = 1 + static_cast<std::uint32_t>(rng.next_index(8));
    CooccurrenceMatrix m(
        PairKind::CoatsJacketsDresses,
        {Domain::Type::ColorBins, GarmentCategory::CoatsJackets, rows},
        {Domain::Type::ColorBins, GarmentCategory::Dresses, cols},
        trial % 2 ? 1.0 : 0.5);
    for (auto& c : m.counts) c = rng.next_index(10);
    for (std::uint32_t r = 0; r < rows; ++r) {
      auto d = row_distribution(m, r);
      double sum = 0;
      for (double p : d.probabilities) {
        CHECK(p > 0.0);
        sum += p;
      }
      CHECK(sum == Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("best_match basics and scaling invariance") {
  CooccurrenceMatrix m(PairKind::TopsBlousesSkirts, Domain::patterns(),
                       Domain::patterns(), 1.0);
  m.at(0, 0) = 0;
  m.at(0, 1) = 5;
  m.at(0, 2) = 1;
  CHECK(best_match(m, 0) == 1);
  // all-zero row: tie-break to column 0
  CHECK(best_match(m, 3) == 0);

  // multiplying a row by a positive integer preserves the argmax
  CooccurrenceMatrix scaled = m;
  for (std::uint32_t c = 0; c < 10; ++c) scaled.at(0, c) *= 7;
  CHECK(best_match(scaled, 0) == best_match(m, 0));
}

TEST_CASE("best_match and top_k agree with a linear-scan oracle") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t cols = 1 + static_cast<std::uint32_t>(rng.next_index(20));
    CooccurrenceMatrix m(
        PairKind::CoatsJacketsSkirts,
        {Domain::Type::ColorBins, GarmentCategory::CoatsJackets, 1},
        {Domain::Type::ColorBins, GarmentCategory::Skirts, cols},
        rng.next_double());
    for (auto& c : m.counts) c = rng.next_index(6);

    auto d = row_distribution(m, 0);
    std::uint32_t brute = 0;
    for (std::uint32_t c = 1; c < cols; ++c)
      if (d.probabilities[c] > d.probabilities[brute]) brute = c;
    CHECK(best_match(m, 0) == brute);

    // full-sort oracle for top-k
    std::vector<std::uint32_t> idx(cols);
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (d.probabilities[a] != d.probabilities[b])
        return d.probabilities[a] > d.probabilities[b];
      return a < b;
    });
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.next_index(cols));
    auto got = top_k_match(m, 0, k);
    idx.resize(std::min<std::size_t>(k, idx.size()));
    CHECK(got == idx);
  }
}

TEST_CASE("top_k_match k=1 equals best_match; k >= ncols is the full order") {
  CooccurrenceMatrix m(PairKind::TopsBlousesTrousers, Domain::patterns(),
                       Domain::patterns(), 1.0);
  Rng rng(4);
  for (auto& c : m.counts) c = rng.next_index(9);
  for (std::uint32_t r = 0; r < 10; ++r) {
    CHECK(top_k_match(m, r, 1)[0] == best_match(m, r));
    CHECK(top_k_match(m, r, 100).size() == 10);
  }
  CHECK_THROWS_AS(top_k_match(m, 0, 0), ValidationError);
}

TEST_CASE("merge: identity, commutativity, associativity, mismatch") {
  Rng rng(12);
  auto random_matrix = [&](double alpha) {
    CooccurrenceMatrix m(PairKind::CoatsJacketsTrousers, Domain::patterns(),
                         Domain::patterns(), alpha);
    for (auto& c : m.counts) c = rng.next_index(5);
    return m;
  };
  auto a = random_matrix(1.0);
  auto b = random_matrix(1.0);
  auto c = random_matrix(1.0);
  CooccurrenceMatrix zero(PairKind::CoatsJacketsTrousers, Domain::patterns(),
                          Domain::patterns(), 1.0);

  CHECK(merge(a, zero) == a);
  CHECK(merge(a, b) == merge(b, a));
  CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));

  CooccurrenceMatrix other_alpha = b;
  other_alpha.alpha = 0.5;
  CHECK_THROWS_AS(merge(a, other_alpha), ValidationError);
  CooccurrenceMatrix other_kind = b;
  other_kind.kind = PairKind::TopsBlousesSkirts;
  CHECK_THROWS_AS(merge(a, other_kind), ValidationError);
}

TEST_CASE("sharded build equals the sequential build") {
  Scene scene;
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const auto top = static_cast<PatternClass>(rng.next_index(10));
    const auto bottom = static_cast<PatternClass>(rng.next_index(10));
    scene.add_pair(PairKind::TopsBlousesTrousers, {}, {}, top, bottom);
  }
  AnnotationCorpus corpus(scene.annotations);
  auto sequential = build_pattern_matrix(PairKind::TopsBlousesTrousers,
                                         scene.pairs, corpus);

  // 4 shards, merged
  CooccurrenceMatrix merged(PairKind::TopsBlousesTrousers, Domain::patterns(),
                            Domain::patterns(), 1.0);
  for (int s = 0; s < 4; ++s) {
    std::vector<AssociationPair> shard;
    for (std::size_t i = s; i < scene.pairs.size(); i += 4)
      shard.push_back(scene.pairs[i]);
    merged = merge(merged, build_pattern_matrix(PairKind::TopsBlousesTrousers,
                                                shard, corpus));
  }
  CHECK(merged == sequential);
}

TEST_CASE("build is invariant under pair permutation") {
  Scene scene;
  Rng rng(6);
  for (int i = 0; i < 25; ++i)
    scene.add_pair(PairKind::CoatsJacketsSkirts,
                   {{10.0 + 40 * (i % 3), 0, 0}},
                   {{10.0 + 40 * ((i + 1) % 3), 0, 0}});
  AnnotationCorpus corpus(scene.annotations);
  auto before = build_color_matrix(
      PairKind::CoatsJacketsSkirts, scene.pairs, corpus,
      three_bin_palette(GarmentCategory::CoatsJackets),
      three_bin_palette(GarmentCategory::Skirts));
  rng.shuffle(scene.pairs);
  auto after = build_color_matrix(
      PairKind::CoatsJacketsSkirts, scene.pairs, corpus,
      three_bin_palette(GarmentCategory::CoatsJackets),
      three_bin_palette(GarmentCategory::Skirts));
  CHECK(before == after);
}

TEST_CASE("total count conservation on random builds") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Scene scene;
    const std::size_t n = rng.next_index(30);
    std::size_t labeled = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool with_labels = rng.next_double() < 0.8;
      if (with_labels) ++labeled;
      scene.add_pair(PairKind::TopsBlousesSkirts, {}, {},
                     with_labels ? std::optional(kAllPatterns[rng.next_index(10)])
                                 : std::nullopt,
                     with_labels ? std::optional(kAllPatterns[rng.next_index(10)])
                                 : std::nullopt);
    }
    AnnotationCorpus corpus(scene.annotations);
    BuildReport report;
    auto m = build_pattern_matrix(PairKind::TopsBlousesSkirts, scene.pairs,
                                  corpus, 1.0, &report);
    CHECK(m.total() == labeled);
    CHECK(report.used + report.skipped == n);
  }
}

TEST_CASE("matrix persistence round trips dense and sparse forms") {
  testutil::TempDir dir("matrix");
  Rng rng(2);

  // dense-ish: most cells nonzero
  CooccurrenceMatrix dense(PairKind::TopsBlousesSkirts, Domain::patterns(),
                           Domain::patterns(), 1.0);
  for (auto& c : dense.counts) c = 1 + rng.next_index(9);
  save_matrix(dir.path() / "dense.matrix", dense);
  CHECK(load_matrix(dir.path() / "dense.matrix") == dense);

  // sparse: a 130x130 color matrix with a few entries
  CooccurrenceMatrix sparse(
      PairKind::CoatsJacketsTrousers,
      {Domain::Type::ColorBins, GarmentCategory::CoatsJackets, 130},
      {Domain::Type::ColorBins, GarmentCategory::Trousers, 130}, 1.0);
  for (int i = 0; i < 40; ++i)
    sparse.at(static_cast<std::uint32_t>(rng.next_index(130)),
              static_cast<std::uint32_t>(rng.next_index(130))) =
        1 + rng.next_index(100);
  save_matrix(dir.path() / "sparse.matrix", sparse);
  CHECK(load_matrix(dir.path() / "sparse.matrix") == sparse);

  // random 130x130 with all cells filled round-trips exactly
  CooccurrenceMatrix big(
      PairKind::CoatsJacketsTrousers,
      {Domain::Type::ColorBins, GarmentCategory::CoatsJackets, 130},
      {Domain::Type::ColorBins, GarmentCategory::Trousers, 130}, 1.0);
  for (auto& c : big.counts) c = rng.next_index(1000);
  save_matrix(dir.path() / "big.matrix", big);
  CHECK(load_matrix(dir.path() / "big.matrix") == big);

  // save -> load -> save is byte-identical
  save_matrix(dir.path() / "big2.matrix", load_matrix(dir.path() / "big.matrix"));
  CHECK(testutil::read_file(dir.path() / "big.matrix") ==
        testutil::read_file(dir.path() / "big2.matrix"));
}

TEST_CASE("matrix load rejects wrong shapes and versions") {
  testutil::TempDir dir("matrix-bad");
  {
    std::ofstream out(dir.path() / "v9.matrix");
    out << "stylerec-cooccur 9\n";
  }
  CHECK_THROWS_AS(load_matrix(dir.path() / "v9.matrix"), FormatError);

  {
    std::ofstream out(dir.path() / "short-row.matrix");
    out << "stylerec-cooccur 1\nkind TopsBlouses-Skirts\n"
        << "rows pattern 10\ncols pattern 10\nalpha 1\ntotal 0\n"
        << "storage dense\n";
    for (int r = 0; r < 10; ++r) out << "0 0 0\n";  // wrong column count
  }
  CHECK_THROWS_AS(load_matrix(dir.path() / "short-row.matrix"), ParseError);

  {
    std::ofstream out(dir.path() / "bad-total.matrix");
    out << "stylerec-cooccur 1\nkind TopsBlouses-Skirts\n"
        << "rows pattern 10\ncols pattern 10\nalpha 1\ntotal 5\n"
        << "storage sparse 1\n0 0 3\n";
  }
  CHECK_THROWS_AS(load_matrix(dir.path() / "bad-total.matrix"),
                  ValidationError);
}

TEST_CASE("transpose swaps domains and cells") {
  CooccurrenceMatrix m(PairKind::TopsBlousesSkirts,
                       {Domain::Type::ColorBins, GarmentCategory::TopsBlouses, 2},
                       {Domain::Type::ColorBins, GarmentCategory::Skirts, 3},
                       1.0);
  m.at(0, 2) = 7;
  m.at(1, 0) = 4;
  auto t = m.transposed();
  CHECK(t.rows.size == 3);
  CHECK(t.cols.size == 2);
  CHECK(t.at(2, 0) == 7);
  CHECK(t.at(0, 1) == 4);
  CHECK(t.transposed() == m);
}
