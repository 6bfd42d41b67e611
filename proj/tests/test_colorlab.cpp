#include <catch2/catch_amalgamated.hpp>

#include "stylerec/colorlab.hpp"
#include "stylerec/rng.hpp"

using namespace stylerec;
using Catch::Approx;

TEST_CASE("reference white and black") {
  LabColor white = srgb_to_lab(255, 255, 255);
  CHECK(white.L == Approx(100.0).margin(1e-3));
  CHECK(white.a == Approx(0.0).margin(1e-3));
  CHECK(white.b == Approx(0.0).margin(1e-3));

  LabColor black = srgb_to_lab(0, 0, 0);
  CHECK(black.L == Approx(0.0).margin(1e-3));
  CHECK(black.a == Approx(0.0).margin(1e-3));
  CHECK(black.b == Approx(0.0).margin(1e-3));
}

TEST_CASE("primaries match the reference colorimetry oracle") {
  // Expected values computed beforehand with an independent reference
  // implementation of the sRGB (IEC 61966-2-1) -> CIELab (D65/2°) formulas.
  LabColor red = srgb_to_lab(255, 0, 0);
  CHECK(red.L == Approx(53.2407918333).margin(1e-2));
  CHECK(red.a == Approx(80.0791947927).margin(1e-2));
  CHECK(red.b == Approx(67.2031925365).margin(1e-2));

  LabColor green = srgb_to_lab(0, 255, 0);
  CHECK(green.L == Approx(87.7347188950).margin(1e-2));
  CHECK(green.a == Approx(-86.1953592676).margin(1e-2));
  CHECK(green.b == Approx(83.1793145409).margin(1e-2));

  LabColor blue = srgb_to_lab(0, 0, 255);
  CHECK(blue.L == Approx(32.2970093230).margin(1e-2));
  CHECK(blue.a == Approx(79.2305244338).margin(1e-2));
  CHECK(blue.b == Approx(-107.8601645298).margin(1e-2));
}

TEST_CASE("grays are achromatic and monotone in L") {
  double prev = -1.0;
  for (int v = 0; v <= 255; ++v) {
    LabColor c = srgb_to_lab(static_cast<std::uint8_t>(v),
                             static_cast<std::uint8_t>(v),
                             static_cast<std::uint8_t>(v));
    CHECK(c.a == Approx(0.0).margin(1e-9));
    CHECK(c.b == Approx(0.0).margin(1e-9));
    CHECK(c.L > prev);
    prev = c.L;
  }
}

TEST_CASE("lab to lch axes and achromatic convention") {
  LchColor gray = lab_to_lch({50, 0, 0});
  CHECK(gray.L == 50);
  CHECK(gray.C == 0);
  CHECK(gray.h == 0);

  LchColor pos_a = lab_to_lch({50, 1, 0});
  CHECK(pos_a.C == Approx(1.0));
  CHECK(pos_a.h == Approx(0.0).margin(1e-12));

  LchColor pos_b = lab_to_lch({50, 0, 1});
  CHECK(pos_b.C == Approx(1.0));
  CHECK(pos_b.h == Approx(90.0).margin(1e-12));
}

TEST_CASE("lab/lch round trip") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    LabColor c{rng.next_double() * 100.0, rng.next_double() * 256.0 - 128.0,
               rng.next_double() * 256.0 - 128.0};
    LabColor back = lch_to_lab(lab_to_lch(c));
    CHECK(std::fabs(back.L - c.L) < 1e-6);
    CHECK(std::fabs(back.a - c.a) < 1e-6);
    CHECK(std::fabs(back.b - c.b) < 1e-6);
  }
}

TEST_CASE("delta_e basics and formula oracle") {
  LabColor c{12, -3, 40};
  CHECK(delta_e(c, c) == 0.0);
  CHECK(delta_e({0, 0, 0}, {100, 0, 0}) == Approx(100.0));

  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    LabColor x{rng.next_double() * 100, rng.next_double() * 256 - 128,
               rng.next_double() * 256 - 128};
    LabColor y{rng.next_double() * 100, rng.next_double() * 256 - 128,
               rng.next_double() * 256 - 128};
    const double brute = std::sqrt((x.L - y.L) * (x.L - y.L) +
                                   (x.a - y.a) * (x.a - y.a) +
                                   (x.b - y.b) * (x.b - y.b));
    CHECK(delta_e(x, y) == Approx(brute).margin(1e-12));
    CHECK(delta_e(x, y) == Approx(delta_e(y, x)).margin(1e-12));
  }
}

TEST_CASE("hue rules") {
  CHECK(complementary_hue(30) == Approx(210.0));
  CHECK(complementary_hue(210) == Approx(30.0));
  CHECK(complementary_hue(350) == Approx(170.0));

  auto [t1, t2] = triadic_hues(90);
  CHECK(t1 == Approx(210.0));
  CHECK(t2 == Approx(330.0));
  auto [u1, u2] = triadic_hues(0);
  CHECK(u1 == Approx(120.0));
  CHECK(u2 == Approx(240.0));
}

TEST_CASE("complementary is an involution, +120 has order three") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double h = rng.next_double() * 720.0 - 360.0;  // any real
    CHECK(complementary_hue(complementary_hue(h)) ==
          Approx(normalize_degrees(h)).margin(1e-9));
    double g = normalize_degrees(h);
    for (int j = 0; j < 3; ++j) g = normalize_degrees(g + 120.0);
    CHECK(g == Approx(normalize_degrees(h)).margin(1e-9));
  }
}

TEST_CASE("hue distance is the short way around") {
  CHECK(hue_distance(10, 350) == Approx(20.0));
  CHECK(hue_distance(0, 180) == Approx(180.0));
  CHECK(hue_distance(90, 90) == 0.0);
}
