#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace stylerec {

// CIELab under D65 / 2 degree observer. L in [0,100]; a and b are the
// opponent axes (validated to [-128,128] at ingest boundaries).
struct LabColor {
  double L = 0, a = 0, b = 0;
  bool operator==(const LabColor&) const = default;
};

// Cylindrical form of Lab: chroma C >= 0, hue angle h in [0,360) degrees.
struct LchColor {
  double L = 0, C = 0, h = 0;
  bool operator==(const LchColor&) const = default;
};

inline double normalize_degrees(double h) {
  double r = std::fmod(h, 360.0);
  if (r < 0) r += 360.0;
  // fmod of a tiny negative can round to 360 exactly
  if (r >= 360.0) r = 0.0;
  return r;
}

// sRGB -> CIELab. Standard IEC 61966-2-1 transfer function and primaries;
// the reference white is the matrix row sums, so (255,255,255) maps to
// exactly (100, 0, 0) and neutral grays have a = b = 0.
inline LabColor srgb_to_lab(std::uint8_t r8, std::uint8_t g8,
                            std::uint8_t b8) {
  auto linearize = [](double v) {
    double c = v / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double r = linearize(r8), g = linearize(g8), b = linearize(b8);

  // sRGB -> XYZ (D65)
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1805375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double xn = 0.4124564 + 0.3575761 + 0.1805375;
  const double yn = 0.2126729 + 0.7151522 + 0.0721750;
  const double zn = 0.0193339 + 0.1191920 + 0.9503041;

  auto f = [](double t) {
    const double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
  };
  const double fx = f(x / xn), fy = f(y / yn), fz = f(z / zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

// h is 0 by convention for achromatic colors (a = b = 0).
inline LchColor lab_to_lch(const LabColor& c) {
  const double chroma = std::hypot(c.a, c.b);
  double h = 0.0;
  if (c.a != 0.0 || c.b != 0.0)
    h = normalize_degrees(std::atan2(c.b, c.a) * 180.0 / M_PI);
  return {c.L, chroma, h};
}

inline LabColor lch_to_lab(const LchColor& c) {
  const double rad = c.h * M_PI / 180.0;
  return {c.L, c.C * std::cos(rad), c.C * std::sin(rad)};
}

// CIE76: Euclidean distance in Lab.
inline double delta_e(const LabColor& x, const LabColor& y) {
  return std::sqrt((x.L - y.L) * (x.L - y.L) + (x.a - y.a) * (x.a - y.a) +
                   (x.b - y.b) * (x.b - y.b));
}

inline double delta_e_squared(const LabColor& x, const LabColor& y) {
  return (x.L - y.L) * (x.L - y.L) + (x.a - y.a) * (x.a - y.a) +
         (x.b - y.b) * (x.b - y.b);
}

inline double complementary_hue(double h) { return normalize_degrees(h + 180.0); }

inline std::pair<double, double> triadic_hues(double h) {
  return {normalize_degrees(h + 120.0), normalize_degrees(h + 240.0)};
}

// Shorter way around the circle, in [0, 180].
inline double hue_distance(double h1, double h2) {
  double d = std::fabs(normalize_degrees(h1) - normalize_degrees(h2));
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace stylerec
