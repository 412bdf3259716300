#pragma once

// Synthetic metal-dendrite phantom: straight primary arms radiating from the
// image centre, shorter perpendicular secondary arms, dark noisy background.

#include "uslads/image.hpp"
#include "uslads/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace uslads {

struct DendriteParams
{
  std::size_t width = 128;
  std::size_t height = 128;
  int primary_arms = 4;
  double secondary_rate = 0.1; ///< expected secondary arms per pixel of primary arm
  double thickness = 2.0;      ///< arm width in pixels
  std::uint64_t seed = 7;
};

inline constexpr std::uint8_t kBackgroundMax = 30;
inline constexpr std::uint8_t kForegroundMin = 200;

/// Line segment in (row, col) pixel coordinates.
struct Segment
{
  double r0, c0, r1, c1;

  double distance(double r, double c) const
  {
    const double dr = r1 - r0, dc = c1 - c0;
    const double len2 = dr * dr + dc * dc;
    double t = len2 > 0.0 ? ((r - r0) * dr + (c - c0) * dc) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(r - (r0 + t * dr), c - (c0 + t * dc));
  }
};

struct DendriteSkeleton
{
  std::vector<Segment> primary;
  std::vector<Segment> secondary;
};

namespace detail {

// Shortens the segment from its far end until it lies inside the image.
inline Segment clip_to_image(Segment s, double width, double height)
{
  auto inside = [&](double r, double c) { return r >= 0.0 && c >= 0.0 && r <= height - 1.0 && c <= width - 1.0; };
  double lo = 0.0, hi = 1.0;
  if (inside(s.r1, s.c1))
    return s;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (inside(s.r0 + mid * (s.r1 - s.r0), s.c0 + mid * (s.c1 - s.c0)))
      lo = mid;
    else
      hi = mid;
  }
  return {s.r0, s.c0, s.r0 + lo * (s.r1 - s.r0), s.c0 + lo * (s.c1 - s.c0)};
}

} // namespace detail

/// Arm geometry for the given parameters. The primary arms share the image
/// centre as their start point; each secondary arm starts on a primary axis.
inline DendriteSkeleton dendrite_skeleton(const DendriteParams& p, Rng& rng)
{
  const double w = static_cast<double>(p.width), h = static_cast<double>(p.height);
  const double cr = 0.5 * (h - 1.0), cc = 0.5 * (w - 1.0);
  const double length = 0.45 * std::min(w, h);
  const double spacing = 2.0 * std::numbers::pi / p.primary_arms;
  const double rotation = rng.uniform(0.0, spacing);

  DendriteSkeleton sk;
  for (int a = 0; a < p.primary_arms; ++a) {
    const double theta = rotation + a * spacing;
    const double ur = std::sin(theta), uc = std::cos(theta);
    sk.primary.push_back(detail::clip_to_image({cr, cc, cr + length * ur, cc + length * uc}, w, h));

    // Secondary arms sprout past the core and shrink towards the tip.
    int side = rng.below(2) ? 1 : -1;
    for (double t = 0.15 * length; t <= 0.9 * length; t += 1.0) {
      if (rng.uniform() >= p.secondary_rate)
        continue;
      const double taper = 1.0 - 0.6 * t / length;
      const double len = std::max(3.0, rng.uniform(0.2, 0.4) * length * taper);
      const double br = cr + t * ur, bc = cc + t * uc;
      const double pr = side * uc, pc = -side * ur;
      sk.secondary.push_back(detail::clip_to_image({br, bc, br + len * pr, bc + len * pc}, w, h));
      side = -side;
    }
  }
  return sk;
}

/// Renders a dendrite phantom. Foreground pixels lie within thickness/2 of an
/// arm axis and take values in [200, 255]; background is uniform in [0, 30].
inline Image generate_dendrite(const DendriteParams& p)
{
  if (p.width < 32 || p.height < 32)
    throw std::invalid_argument("generate_dendrite: width and height must be at least 32");
  if (p.primary_arms < 1)
    throw std::invalid_argument("generate_dendrite: at least one primary arm is required");
  if (!(p.thickness > 0.0))
    throw std::invalid_argument("generate_dendrite: thickness must be positive");
  if (!(p.secondary_rate >= 0.0))
    throw std::invalid_argument("generate_dendrite: secondary rate must be non-negative");

  Rng rng(derive_seed(p.seed, "dendrite"));
  const auto sk = dendrite_skeleton(p, rng);

  std::vector<std::uint8_t> fg(p.width * p.height, 0);
  const double half = 0.5 * p.thickness;
  auto draw = [&](const Segment& s) {
    const auto lo_r = static_cast<long>(std::floor(std::min(s.r0, s.r1) - half));
    const auto hi_r = static_cast<long>(std::ceil(std::max(s.r0, s.r1) + half));
    const auto lo_c = static_cast<long>(std::floor(std::min(s.c0, s.c1) - half));
    const auto hi_c = static_cast<long>(std::ceil(std::max(s.c0, s.c1) + half));
    for (long r = std::max(0L, lo_r); r <= std::min<long>(hi_r, static_cast<long>(p.height) - 1); ++r)
      for (long c = std::max(0L, lo_c); c <= std::min<long>(hi_c, static_cast<long>(p.width) - 1); ++c)
        if (s.distance(static_cast<double>(r), static_cast<double>(c)) <= half)
          fg[static_cast<std::size_t>(r) * p.width + static_cast<std::size_t>(c)] = 1;
  };
  for (const auto& s : sk.primary)
    draw(s);
  for (const auto& s : sk.secondary)
    draw(s);

  Image img(p.width, p.height);
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = fg[i] ? static_cast<std::uint8_t>(rng.between(kForegroundMin, 255))
                   : static_cast<std::uint8_t>(rng.between(0, kBackgroundMax));
  return img;
}

} // namespace uslads
