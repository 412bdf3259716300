#pragma once

#include "uslads/image.hpp"
#include "uslads/random.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace uslads {

struct QualityReport
{
  double ratio = 0.0;
  double psnr_db = 0.0; ///< +infinity when the images are identical
  double ssim = 0.0;
  double elapsed = 0.0; ///< seconds

  friend bool operator==(const QualityReport&, const QualityReport&) = default;
};

namespace detail {

inline void require_same_shape(const Image& a, const Image& b, const char* who)
{
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument(std::string(who) + ": image dimensions differ (" + std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
}

} // namespace detail

inline double mse(const Image& reference, const Image& test)
{
  detail::require_same_shape(reference, test, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = static_cast<double>(reference[i]) - static_cast<double>(test[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(reference.size());
}

/// 10 log10(255^2 / MSE); +infinity for identical images.
inline double psnr(const Image& reference, const Image& test)
{
  const double e = mse(reference, test);
  if (e == 0.0)
    return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / e);
}

inline constexpr std::size_t kSsimWindow = 8;

/// Mean SSIM over all 8x8 windows at stride 1, uniform weights, population
/// (1/64) moments, C1 = (0.01*255)^2 and C2 = (0.03*255)^2.
inline double ssim(const Image& reference, const Image& test)
{
  detail::require_same_shape(reference, test, "ssim");
  constexpr std::size_t win = kSsimWindow;
  if (reference.width() < win || reference.height() < win)
    throw std::invalid_argument("ssim: image smaller than the 8x8 window");

  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  constexpr double inv_n = 1.0 / static_cast<double>(win * win);

  const std::size_t w = reference.width(), h = reference.height();
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t r0 = 0; r0 + win <= h; ++r0) {
    for (std::size_t c0 = 0; c0 + win <= w; ++c0) {
      // Integer window sums are exact; the statistic is symmetric in x and y.
      std::int64_t sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t r = r0; r < r0 + win; ++r) {
        for (std::size_t c = c0; c < c0 + win; ++c) {
          const std::int64_t x = reference(r, c), y = test(r, c);
          sx += x;
          sy += y;
          sxx += x * x;
          syy += y * y;
          sxy += x * y;
        }
      }
      const double mx = sx * inv_n, my = sy * inv_n;
      const double vx = sxx * inv_n - mx * mx;
      const double vy = syy * inv_n - my * my;
      const double cov = sxy * inv_n - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

inline QualityReport quality(const Image& truth, const MeasurementSet& ms, double elapsed = 0.0)
{
  const Image sampled = sampled_image(truth, ms);
  return {ms.ratio(), psnr(truth, sampled), ssim(truth, sampled), elapsed};
}

/// Uniform random mask of exactly `count` pixels. Masks for one seed are
/// nested: a larger count extends the smaller one.
inline MeasurementSet random_mask(const Image& image, std::size_t count, std::uint64_t seed)
{
  if (count > image.size())
    throw std::invalid_argument("random_mask: count exceeds pixel count");
  Rng rng(derive_seed(seed, "baseline"));
  MeasurementSet ms(image.width(), image.height());
  for (std::size_t idx : sample_without_replacement(image.size(), count, rng))
    measure_into(image, ms, image.location(idx));
  return ms;
}

/// Random-sampling baseline at floor(ratio * N) locations, scored on the
/// unreconstructed sampled image.
inline std::pair<MeasurementSet, QualityReport> random_baseline(const Image& image, double ratio,
                                                                std::uint64_t seed)
{
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::invalid_argument("random_baseline: ratio must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(image.size())));
  auto ms = random_mask(image, count, seed);
  auto report = quality(image, ms);
  return {std::move(ms), report};
}

} // namespace uslads
