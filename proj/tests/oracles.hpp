#pragma once

// Brute-force reference computations for the tests. Nothing here calls the
// library routine it is used to check.

#include "uslads/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

__extension__ using i128 = __int128;

/// Exhaustive Otsu: for every tau in [1, 255] split the raw samples by a
/// naive scan and compare w0*w1*(mu0 - mu1)^2 as exact rationals. Smallest
/// tau wins ties; a single distinct value v returns v.
inline int otsu(const std::vector<std::uint8_t>& xs)
{
  const bool constant = std::all_of(xs.begin(), xs.end(), [&](auto v) { return v == xs.front(); });
  if (constant)
    return xs.front();

  // Score as fraction num/den with num = (n1*s0 - n0*s1)^2, den = n0*n1.
  i128 best_num = -1, best_den = 1;
  int best = 1;
  for (int tau = 1; tau <= 255; ++tau) {
    i128 n0 = 0, s0 = 0, n1 = 0, s1 = 0;
    for (auto v : xs) {
      if (v < tau) {
        ++n0;
        s0 += v;
      } else {
        ++n1;
        s1 += v;
      }
    }
    i128 num = 0, den = 1;
    if (n0 > 0 && n1 > 0) {
      const i128 d = n1 * s0 - n0 * s1;
      num = d * d;
      den = n0 * n1;
    }
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best = tau;
    }
  }
  return best;
}

/// Between-class variance in floating point, straight from the definition.
inline double between_class_variance(const std::vector<std::uint8_t>& xs, int tau)
{
  double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
  for (auto v : xs) {
    if (v < tau) {
      ++n0;
      s0 += v;
    } else {
      ++n1;
      s1 += v;
    }
  }
  if (n0 == 0 || n1 == 0)
    return 0.0;
  const double n = n0 + n1;
  const double mu0 = s0 / n0, mu1 = s1 / n1;
  return (n0 / n) * (n1 / n) * (mu0 - mu1) * (mu0 - mu1);
}

/// Mahalanobis distance through an explicitly inverted matrix.
inline double mahalanobis(const uslads::Vec2& p, const uslads::GaussianComponent& c)
{
  const double a = c.cov.rr, b = c.cov.rc, d = c.cov.cc;
  const double det = a * d - b * b;
  const double i00 = d / det, i01 = -b / det, i11 = a / det;
  const double x = p.row - c.mean.row, y = p.col - c.mean.col;
  return std::sqrt(x * (i00 * x + i01 * y) + y * (i01 * x + i11 * y));
}

/// weight * density, evaluated directly (not in log space).
inline double weighted_density(const uslads::Vec2& p, const uslads::GaussianComponent& c)
{
  const double det = c.cov.rr * c.cov.cc - c.cov.rc * c.cov.rc;
  const double m = mahalanobis(p, c);
  return c.weight * std::exp(-0.5 * m * m) / (2.0 * M_PI * std::sqrt(det));
}

inline std::size_t label(const uslads::Vec2& p, const uslads::GmmModel& model)
{
  std::size_t best = 0;
  double best_log = -INFINITY;
  for (std::size_t k = 0; k < model.k(); ++k) {
    const auto& c = model.components[k];
    const double det = c.cov.rr * c.cov.cc - c.cov.rc * c.cov.rc;
    const double m = mahalanobis(p, c);
    const double lg = std::log(c.weight) - 0.5 * m * m - std::log(2.0 * M_PI * std::sqrt(det));
    if (lg > best_log) {
      best_log = lg;
      best = k;
    }
  }
  return best;
}

/// Exhaustive selection: label every candidate, rank each cluster's
/// candidates by (distance, linear index) with a full sort, keep epsilon.
inline std::vector<std::vector<std::size_t>> select(const uslads::GmmModel& model,
                                                    const std::vector<std::size_t>& candidates, std::size_t width,
                                                    std::size_t epsilon)
{
  std::vector<std::vector<std::pair<double, std::size_t>>> ranked(model.k());
  for (std::size_t idx : candidates) {
    const uslads::Vec2 p{static_cast<double>(idx / width), static_cast<double>(idx % width)};
    const std::size_t k = label(p, model);
    ranked[k].push_back({mahalanobis(p, model.components[k]), idx});
  }
  std::vector<std::vector<std::size_t>> out(model.k());
  for (std::size_t k = 0; k < model.k(); ++k) {
    std::sort(ranked[k].begin(), ranked[k].end());
    for (std::size_t i = 0; i < std::min(epsilon, ranked[k].size()); ++i)
      out[k].push_back(ranked[k][i].second);
  }
  return out;
}

/// Isotropic Gaussian blobs: `per_blob` points around each centre.
inline std::vector<uslads::Vec2> blobs(const std::vector<uslads::Vec2>& centres, std::size_t per_blob, double spread,
                                       std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, spread);
  std::vector<uslads::Vec2> pts;
  for (const auto& c : centres)
    for (std::size_t i = 0; i < per_blob; ++i)
      pts.push_back({c.row + noise(gen), c.col + noise(gen)});
  return pts;
}

} // namespace oracle
