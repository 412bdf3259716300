#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace uslads {

/// Lower bound of the foreground class: a pixel is foreground iff intensity >= value.
struct Threshold
{
  std::uint8_t value = 0;

  bool foreground(std::uint8_t intensity) const { return intensity >= value; }

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

using Histogram = std::array<std::uint64_t, 256>;

inline Histogram histogram(std::span<const std::uint8_t> intensities)
{
  Histogram h{};
  for (auto v : intensities)
    ++h[v];
  return h;
}

/// Otsu's threshold on a 256-bin histogram.
///
/// Candidates tau = 1..255 split the data into [0, tau) and [tau, 255]; the
/// returned tau maximises the between-class variance w0*w1*(mu0 - mu1)^2,
/// smallest tau on ties. A histogram with a single occupied bin v returns v,
/// so every sample stays foreground.
inline Threshold otsu_threshold(const Histogram& hist)
{
  std::int64_t total = 0, total_sum = 0;
  int first_bin = -1, occupied = 0;
  for (int v = 0; v < 256; ++v) {
    if (hist[v] == 0)
      continue;
    if (first_bin < 0)
      first_bin = v;
    ++occupied;
    total += static_cast<std::int64_t>(hist[v]);
    total_sum += static_cast<std::int64_t>(hist[v]) * v;
  }
  if (total == 0)
    throw std::invalid_argument("otsu_threshold: no intensities");
  if (occupied == 1)
    return {static_cast<std::uint8_t>(first_bin)};

  // With n0, s0 the count and sum below tau (n1, s1 above):
  //   w0*w1*(mu0-mu1)^2 = (n1*s0 - n0*s1)^2 / (N^2 * n0 * n1).
  // N^2 is common to every candidate and dropped. The numerator is exact in
  // 64-bit integers, so equal splits compare exactly equal.
  std::int64_t n0 = 0, s0 = 0;
  long double best = -1.0L;
  int best_tau = 1;
  for (int tau = 1; tau < 256; ++tau) {
    n0 += static_cast<std::int64_t>(hist[tau - 1]);
    s0 += static_cast<std::int64_t>(hist[tau - 1]) * (tau - 1);
    const std::int64_t n1 = total - n0;
    const std::int64_t s1 = total_sum - s0;
    long double score = 0.0L;
    if (n0 > 0 && n1 > 0) {
      const auto d = static_cast<long double>(n1 * s0 - n0 * s1);
      score = d * d / (static_cast<long double>(n0) * static_cast<long double>(n1));
    }
    if (score > best) {
      best = score;
      best_tau = tau;
    }
  }
  return {static_cast<std::uint8_t>(best_tau)};
}

inline Threshold otsu_threshold(std::span<const std::uint8_t> intensities)
{
  if (intensities.empty())
    throw std::invalid_argument("otsu_threshold: no intensities");
  return otsu_threshold(histogram(intensities));
}

} // namespace uslads
