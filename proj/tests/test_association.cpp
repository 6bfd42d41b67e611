#include <catch2/catch_amalgamated.hpp>

#include "stylerec/association.hpp"
#include "stylerec/rng.hpp"
#include "testutil.hpp"

using namespace stylerec;
using Catch::Approx;

namespace {

GarmentDetection garment(const std::string& id, GarmentCategory cat,
                         BoundingBox box, double confidence = 0.9) {
  GarmentDetection g;
  g.detection_id = id;
  g.category = cat;
  g.box = box;
  g.confidence = confidence;
  return g;
}

}  // namespace

TEST_CASE("schema is exactly the six allowed pairs") {
  CHECK(kAllPairKinds.size() == 6);
  CHECK(schema_pair(GarmentCategory::CoatsJackets, GarmentCategory::Dresses));
  CHECK(schema_pair(GarmentCategory::CoatsJackets, GarmentCategory::Skirts));
  CHECK(schema_pair(GarmentCategory::CoatsJackets, GarmentCategory::Trousers));
  CHECK(schema_pair(GarmentCategory::CoatsJackets, GarmentCategory::TopsBlouses));
  CHECK(schema_pair(GarmentCategory::TopsBlouses, GarmentCategory::Skirts));
  CHECK(schema_pair(GarmentCategory::TopsBlouses, GarmentCategory::Trousers));
  // absent combinations
  CHECK_FALSE(schema_pair(GarmentCategory::TopsBlouses, GarmentCategory::Dresses));
  CHECK_FALSE(schema_pair(GarmentCategory::TopsBlouses, GarmentCategory::TopsBlouses));
  CHECK_FALSE(schema_pair(GarmentCategory::Dresses, GarmentCategory::Skirts));
  CHECK_FALSE(schema_pair(GarmentCategory::Skirts, GarmentCategory::Trousers));

  for (PairKind k : kAllPairKinds) {
    CHECK(parse_pair_kind(to_string(k)) == k);
    auto oriented = schema_pair_oriented(bottom_category(k), top_category(k));
    REQUIRE(oriented);
    CHECK(oriented->kind == k);
    CHECK_FALSE(oriented->first_is_top);
  }
}

TEST_CASE("containment ratio") {
  // fully inside
  CHECK(containment_ratio({10, 10, 20, 20}, {0, 0, 100, 100}) == Approx(1.0));
  // disjoint
  CHECK(containment_ratio({10, 10, 20, 20}, {50, 50, 100, 100}) == Approx(0.0));
  // half overlap: garment area 100, intersection 50
  CHECK(containment_ratio({0, 0, 10, 10}, {5, 0, 20, 20}) == Approx(0.5));
}

TEST_CASE("garments assign to the best-containing person above tau") {
  StreetStyleAnnotation a;
  a.image_id = "i";
  a.width = 1000;
  a.height = 1000;
  a.person_boxes = {{0, 0, 400, 1000}, {350, 0, 750, 1000}};
  // 80% inside person 0, 30% inside person 1 (overlapping persons)
  a.garments.push_back(garment("g0", GarmentCategory::TopsBlouses,
                               {270, 100, 370, 200}));
  // ratio person0: (370-270 covered to 400) = full -> compute: garment
  // x:[270,370] inside person0 x:[0,400] fully; person1 x:[350,750] covers
  // [350,370] = 20% of width
  auto assigned = assign_to_persons(a, {.tau = 0.7});
  REQUIRE(assigned.size() == 2);
  CHECK(assigned[0] == std::vector<std::size_t>{0});
  CHECK(assigned[1].empty());

  // below tau for everyone: unassigned
  StreetStyleAnnotation b = a;
  b.garments[0].box = {380, 100, 780, 200};  // 5% in p0, 92.5% in p1
  auto assigned_b = assign_to_persons(b, {.tau = 0.95});
  CHECK(assigned_b[0].empty());
  CHECK(assigned_b[1].empty());

  // no persons at all
  StreetStyleAnnotation c = a;
  c.person_boxes.clear();
  CHECK(assign_to_persons(c).empty());
  CHECK(associate(c).empty());
}

TEST_CASE("assignment ties prefer the smaller person box, then lower index") {
  StreetStyleAnnotation a;
  a.image_id = "i";
  a.width = 1000;
  a.height = 1000;
  // garment fully inside both persons
  a.person_boxes = {{0, 0, 900, 900}, {50, 50, 500, 500}};
  a.garments.push_back(garment("g0", GarmentCategory::Skirts, {100, 100, 200, 200}));
  auto assigned = assign_to_persons(a);
  CHECK(assigned[1] == std::vector<std::size_t>{0});  // smaller box wins

  // identical person boxes: lower index wins
  StreetStyleAnnotation b = a;
  b.person_boxes = {{0, 0, 900, 900}, {0, 0, 900, 900}};
  auto assigned_b = assign_to_persons(b);
  CHECK(assigned_b[0] == std::vector<std::size_t>{0});
  CHECK(assigned_b[1].empty());
}

TEST_CASE("associate emits schema pairs per person") {
  StreetStyleAnnotation a;
  a.image_id = "img-7";
  a.width = 1000;
  a.height = 1500;
  a.person_boxes = {{0, 0, 400, 1400}};
  a.garments.push_back(garment("top", GarmentCategory::TopsBlouses,
                               {50, 100, 350, 700}));
  a.garments.push_back(garment("pants", GarmentCategory::Trousers,
                               {50, 700, 350, 1350}));
  auto pairs = associate(a);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].kind == PairKind::TopsBlousesTrousers);
  CHECK(pairs[0].top_detection == "top");
  CHECK(pairs[0].bottom_detection == "pants");
  CHECK(pairs[0].person_index == 0);
  CHECK(pairs[0].image_id == "img-7");
}

TEST_CASE("tops with dresses is not in the schema and yields nothing") {
  StreetStyleAnnotation a;
  a.image_id = "i";
  a.width = 1000;
  a.height = 1500;
  a.person_boxes = {{0, 0, 400, 1400}};
  a.garments.push_back(garment("t", GarmentCategory::TopsBlouses,
                               {50, 100, 350, 700}));
  a.garments.push_back(garment("d", GarmentCategory::Dresses,
                               {60, 150, 340, 1200}));
  CHECK(associate(a).empty());
}

TEST_CASE("coat, top and skirt give three pairs in schema order") {
  StreetStyleAnnotation a;
  a.image_id = "i";
  a.width = 1000;
  a.height = 1500;
  a.person_boxes = {{0, 0, 400, 1400}};
  a.garments.push_back(garment("c", GarmentCategory::CoatsJackets,
                               {40, 80, 360, 800}));
  a.garments.push_back(garment("t", GarmentCategory::TopsBlouses,
                               {60, 120, 340, 700}));
  a.garments.push_back(garment("s", GarmentCategory::Skirts,
                               {50, 700, 350, 1200}));
  auto pairs = associate(a);
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].kind == PairKind::CoatsJacketsSkirts);
  CHECK(pairs[1].kind == PairKind::CoatsJacketsTopsBlouses);
  CHECK(pairs[2].kind == PairKind::TopsBlousesSkirts);
  CHECK(pairs[0].top_detection == "c");
  CHECK(pairs[0].bottom_detection == "s");
  CHECK(pairs[1].bottom_detection == "t");
  CHECK(pairs[2].top_detection == "t");
}

TEST_CASE("duplicate categories resolve by confidence, area, then id") {
  StreetStyleAnnotation a;
  a.image_id = "i";
  a.width = 1000;
  a.height = 1500;
  a.person_boxes = {{0, 0, 400, 1400}};
  a.garments.push_back(garment("t-low", GarmentCategory::TopsBlouses,
                               {50, 100, 350, 700}, 0.6));
  a.garments.push_back(garment("t-high", GarmentCategory::TopsBlouses,
                               {60, 110, 340, 690}, 0.8));
  a.garments.push_back(garment("p", GarmentCategory::Trousers,
                               {50, 700, 350, 1350}, 0.9));
  auto pairs = associate(a);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].top_detection == "t-high");

  // equal confidence: larger box wins
  a.garments[0].confidence = 0.8;
  pairs = associate(a);
  CHECK(pairs[0].top_detection == "t-low");  // its box is larger

  // equal confidence and area: lower id wins
  a.garments[1].box = a.garments[0].box;
  pairs = associate(a);
  CHECK(pairs[0].top_detection == "t-high");  // "t-high" < "t-low"
}

TEST_CASE("output is invariant under garment permutation") {
  StreetStyleAnnotation a;
  a.image_id = "i";
  a.width = 1000;
  a.height = 1500;
  a.person_boxes = {{0, 0, 400, 1400}, {420, 0, 820, 1400}};
  a.garments.push_back(garment("c", GarmentCategory::CoatsJackets,
                               {40, 80, 360, 800}));
  a.garments.push_back(garment("t", GarmentCategory::TopsBlouses,
                               {60, 120, 340, 700}));
  a.garments.push_back(garment("s", GarmentCategory::Skirts,
                               {50, 700, 350, 1200}));
  a.garments.push_back(garment("t2", GarmentCategory::TopsBlouses,
                               {460, 120, 780, 700}));
  a.garments.push_back(garment("p2", GarmentCategory::Trousers,
                               {460, 700, 780, 1350}));
  auto expected = associate(a);
  REQUIRE(expected.size() == 4);

  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    StreetStyleAnnotation shuffled = a;
    rng.shuffle(shuffled.garments);
    CHECK(associate(shuffled) == expected);
  }
}

TEST_CASE("no pair spans two persons") {
  StreetStyleAnnotation a;
  a.image_id = "i";
  a.width = 1000;
  a.height = 1500;
  a.person_boxes = {{0, 0, 400, 1400}, {420, 0, 820, 1400}};
  // person 0 wears only a top; person 1 wears only trousers
  a.garments.push_back(garment("t", GarmentCategory::TopsBlouses,
                               {50, 100, 350, 700}));
  a.garments.push_back(garment("p", GarmentCategory::Trousers,
                               {460, 700, 780, 1350}));
  CHECK(associate(a).empty());
}

TEST_CASE("count_pairs sums to the list length") {
  CHECK(count_pairs({}) == std::array<std::uint64_t, 6>{});

  std::vector<AssociationPair> pairs(3);
  for (auto& p : pairs) p.kind = PairKind::TopsBlousesSkirts;
  auto counts = count_pairs(pairs);
  CHECK(counts[static_cast<std::size_t>(PairKind::TopsBlousesSkirts)] == 3);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  CHECK(total == pairs.size());
}

TEST_CASE("association config is validated") {
  CHECK_THROWS_AS(assign_to_persons({}, {.tau = 0.0}), ValidationError);
  CHECK_THROWS_AS(assign_to_persons({}, {.tau = 1.5}), ValidationError);
  AssociationConfig bad;
  bad.same_category_rule = "coin-flip";
  CHECK_THROWS_AS(assign_to_persons({}, bad), ValidationError);
}

TEST_CASE("pairs persistence round trip") {
  testutil::TempDir dir("pairs");
  std::vector<AssociationPair> pairs = {
      {"img-1", 0, PairKind::TopsBlousesTrousers, "g0", "g1"},
      {"img-2", 1, PairKind::CoatsJacketsDresses, "a", "b"},
  };
  const auto path = dir.path() / "pairs.jsonl";
  save_pairs(path, pairs);
  auto loaded = load_pairs(path);
  CHECK(loaded == pairs);
}
