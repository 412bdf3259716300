#pragma once

// Two-dimensional Gaussian mixture models: EM fitting, BIC model-order
// selection, hard prediction and Mahalanobis distance.

#include "uslads/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uslads {

/// A point in pixel coordinates.
struct Vec2
{
  double row = 0.0;
  double col = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Symmetric 2x2 matrix [[rr, rc], [rc, cc]].
struct Cov2
{
  double rr = 1.0;
  double rc = 0.0;
  double cc = 1.0;

  static Cov2 identity() { return {1.0, 0.0, 1.0}; }

  double det() const { return rr * cc - rc * rc; }

  double min_eigenvalue() const
  {
    const double half_trace = 0.5 * (rr + cc);
    const double half_diff = 0.5 * (rr - cc);
    return half_trace - std::hypot(half_diff, rc);
  }

  /// d^T inv(this) d, via the adjugate.
  double inverse_quadratic(double dr, double dc) const
  {
    return (cc * dr * dr - 2.0 * rc * dr * dc + rr * dc * dc) / det();
  }

  friend bool operator==(const Cov2&, const Cov2&) = default;
};

struct GaussianComponent
{
  double weight = 1.0;
  Vec2 mean;
  Cov2 cov;

  /// log(weight * N(p; mean, cov)).
  double weighted_log_density(const Vec2& p) const
  {
    const double q = cov.inverse_quadratic(p.row - mean.row, p.col - mean.col);
    return std::log(weight) - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.det()) - 0.5 * q;
  }
};

struct GmmModel
{
  std::vector<GaussianComponent> components;
  double log_likelihood = 0.0; ///< final training log-likelihood
  std::size_t n_points = 0;
  double covariance_floor = 0.0; ///< regularisation added to each covariance diagonal

  std::size_t k() const { return components.size(); }
};

/// Per-iteration record of an EM run. Entry 0 of log_likelihood is the
/// initial parameters; entry i the parameters after the i-th M-step.
struct EmTrace
{
  std::vector<double> log_likelihood;
  std::vector<double> weight_sum;
  std::vector<double> min_eigenvalue;
  std::size_t reinitialized = 0;
  bool converged = false;
};

struct EmOptions
{
  double tolerance = 1e-6; ///< relative log-likelihood improvement
  std::size_t max_iterations = 200;
  double reg_scale = 1e-4;
  double reg_min_variance = 1e-4;
  double empty_mass = 1e-10; ///< as a fraction of the point count
};

namespace detail {

struct Moments
{
  Vec2 mean;
  Cov2 cov;
};

inline Moments moments(std::span<const Vec2> pts)
{
  const double n = static_cast<double>(pts.size());
  Vec2 m;
  for (const auto& p : pts) {
    m.row += p.row;
    m.col += p.col;
  }
  m.row /= n;
  m.col /= n;
  Cov2 c{0.0, 0.0, 0.0};
  for (const auto& p : pts) {
    const double dr = p.row - m.row, dc = p.col - m.col;
    c.rr += dr * dr;
    c.rc += dr * dc;
    c.cc += dc * dc;
  }
  c.rr /= n;
  c.rc /= n;
  c.cc /= n;
  return {m, c};
}

inline double squared_distance(const Vec2& a, const Vec2& b)
{
  const double dr = a.row - b.row, dc = a.col - b.col;
  return dr * dr + dc * dc;
}

// k-means++ seeding: first mean uniform over the data, each further mean
// drawn with probability proportional to squared distance from the nearest
// chosen mean.
inline std::vector<Vec2> kmeanspp(std::span<const Vec2> pts, std::size_t k, Rng& rng)
{
  std::vector<Vec2> means;
  means.reserve(k);
  means.push_back(pts[rng.below(pts.size())]);
  std::vector<double> d2(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    d2[i] = squared_distance(pts[i], means[0]);
  while (means.size() < k) {
    double total = 0.0;
    for (double d : d2)
      total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = pts.size() - 1;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(pts.size());
    }
    means.push_back(pts[pick]);
    for (std::size_t i = 0; i < pts.size(); ++i)
      d2[i] = std::min(d2[i], squared_distance(pts[i], means.back()));
  }
  return means;
}

// Lifts the smallest eigenvalue to at least `floor` if rounding left it short.
inline void enforce_floor(Cov2& c, double floor)
{
  const double lo = c.min_eigenvalue();
  if (lo < floor) {
    c.rr += floor - lo;
    c.cc += floor - lo;
  }
}

} // namespace detail

/// Fits a k-component full-covariance GMM by EM. Deterministic for a given seed.
inline GmmModel fit_gmm(std::span<const Vec2> pts, std::size_t k, std::uint64_t seed, EmTrace* trace = nullptr,
                        const EmOptions& opt = {})
{
  if (k == 0)
    throw std::invalid_argument("fit_gmm: component count must be at least 1");
  if (pts.size() < k)
    throw std::invalid_argument("fit_gmm: " + std::to_string(pts.size()) + " points cannot support " +
                                std::to_string(k) + " components");

  const std::size_t n = pts.size();
  const auto pooled = detail::moments(pts);
  const double mean_variance = 0.5 * (pooled.cov.rr + pooled.cov.cc);
  const double reg = opt.reg_scale * std::max(mean_variance, opt.reg_min_variance);
  Cov2 init_cov = pooled.cov;
  init_cov.rr += reg;
  init_cov.cc += reg;
  detail::enforce_floor(init_cov, reg);

  Rng rng(seed);
  GmmModel model;
  model.n_points = n;
  model.covariance_floor = reg;
  for (const auto& m : detail::kmeanspp(pts, k, rng))
    model.components.push_back({1.0 / static_cast<double>(k), m, init_cov});

  std::vector<double> resp(n * k);
  std::vector<double> point_ll(n);

  // E-step: responsibilities and total log-likelihood.
  struct Precomputed
  {
    double log_norm; // log(weight) - log(2 pi) - log(det)/2
    double irr, irc, icc; // inverse covariance
  };
  std::vector<Precomputed> pre(k);
  std::vector<double> row(k);
  auto expectation = [&]() {
    for (std::size_t j = 0; j < k; ++j) {
      const auto& c = model.components[j];
      const double det = c.cov.det();
      pre[j] = {std::log(c.weight) - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det), c.cov.cc / det,
                -c.cov.rc / det, c.cov.rr / det};
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const auto& m = model.components[j].mean;
        const double dr = pts[i].row - m.row, dc = pts[i].col - m.col;
        const double q = pre[j].irr * dr * dr + 2.0 * pre[j].irc * dr * dc + pre[j].icc * dc * dc;
        row[j] = pre[j].log_norm - 0.5 * q;
        hi = std::max(hi, row[j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        row[j] = std::exp(row[j] - hi);
        sum += row[j];
      }
      const double lse = hi + std::log(sum);
      point_ll[i] = lse;
      total += lse;
      const double inv = 1.0 / sum;
      for (std::size_t j = 0; j < k; ++j)
        resp[i * k + j] = row[j] * inv;
    }
    return total;
  };

  auto maximization = [&]() {
    for (std::size_t j = 0; j < k; ++j) {
      auto& comp = model.components[j];
      double mass = 0.0, mr = 0.0, mc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * k + j];
        mass += r;
        mr += r * pts[i].row;
        mc += r * pts[i].col;
      }
      if (mass < opt.empty_mass * static_cast<double>(n)) {
        // Collapsed component: restart it at the worst-explained point.
        const auto worst = std::min_element(point_ll.begin(), point_ll.end()) - point_ll.begin();
        comp.mean = pts[static_cast<std::size_t>(worst)];
        comp.cov = init_cov;
        comp.weight = 1.0 / static_cast<double>(n);
        if (trace)
          ++trace->reinitialized;
        continue;
      }
      comp.weight = mass / static_cast<double>(n);
      comp.mean = {mr / mass, mc / mass};
      Cov2 c{0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * k + j];
        const double dr = pts[i].row - comp.mean.row, dc = pts[i].col - comp.mean.col;
        c.rr += r * dr * dr;
        c.rc += r * dr * dc;
        c.cc += r * dc * dc;
      }
      c.rr = c.rr / mass + reg;
      c.rc = c.rc / mass;
      c.cc = c.cc / mass + reg;
      detail::enforce_floor(c, reg);
      comp.cov = c;
    }
    double wsum = 0.0;
    for (const auto& c : model.components)
      wsum += c.weight;
    for (auto& c : model.components)
      c.weight /= wsum;
  };

  double ll = expectation();
  if (trace) {
    *trace = EmTrace{};
    trace->log_likelihood.push_back(ll);
  }
  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    maximization();
    const double next = expectation();
    if (trace) {
      trace->log_likelihood.push_back(next);
      double wsum = 0.0, lo = std::numeric_limits<double>::infinity();
      for (const auto& c : model.components) {
        wsum += c.weight;
        lo = std::min(lo, c.cov.min_eigenvalue());
      }
      trace->weight_sum.push_back(wsum);
      trace->min_eigenvalue.push_back(lo);
    }
    const double improvement = next - ll;
    ll = next;
    if (improvement < opt.tolerance * std::max(std::abs(ll), 1.0)) {
      if (trace)
        trace->converged = true;
      break;
    }
  }
  model.log_likelihood = ll;
  return model;
}

/// Bayesian information criterion, -2 logL + (6k - 1) ln n. Lower is better.
inline double bic(const GmmModel& model, std::size_t n)
{
  if (n == 0)
    throw std::invalid_argument("bic: point count must be positive");
  const double params = 6.0 * static_cast<double>(model.k()) - 1.0;
  return -2.0 * model.log_likelihood + params * std::log(static_cast<double>(n));
}

inline double bic(const GmmModel& model) { return bic(model, model.n_points); }

/// Chooses the component count by BIC over k = 1..n_max and returns a fresh
/// fit at the winner. Candidates are only scored when the point count
/// exceeds n_max; otherwise a single component is used.
inline GmmModel select_model(std::span<const Vec2> pts, std::size_t n_max, std::uint64_t seed,
                             std::vector<double>* scores = nullptr)
{
  if (pts.empty())
    throw std::invalid_argument("select_model: no points");
  if (n_max == 0)
    throw std::invalid_argument("select_model: n_max must be at least 1");

  std::vector<double> bics;
  for (std::size_t i = 1; i <= n_max; ++i) {
    if (pts.size() > n_max)
      bics.push_back(bic(fit_gmm(pts, i, derive_seed(seed, i))));
  }
  std::size_t best_k = 1;
  if (!bics.empty())
    best_k = static_cast<std::size_t>(std::min_element(bics.begin(), bics.end()) - bics.begin()) + 1;
  if (scores)
    *scores = bics;
  return fit_gmm(pts, best_k, derive_seed(seed, best_k));
}

/// Hard assignment: argmax_k weight_k * N(p; mu_k, Sigma_k), lowest index on ties.
inline std::vector<std::size_t> predict(const GmmModel& model, std::span<const Vec2> pts)
{
  if (model.components.empty())
    throw std::invalid_argument("predict: model has no components");
  std::vector<std::size_t> labels(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < model.k(); ++j) {
      const double s = model.components[j].weighted_log_density(pts[i]);
      if (s > best) {
        best = s;
        labels[i] = j;
      }
    }
  }
  return labels;
}

/// sqrt((p - mean)^T cov^-1 (p - mean)).
inline double mahalanobis(const Vec2& p, const Vec2& mean, const Cov2& cov)
{
  const double det = cov.det();
  if (!(det > 0.0) || !(cov.rr > 0.0) || !std::isfinite(det))
    throw std::domain_error("mahalanobis: covariance is not positive definite");
  const double q = cov.inverse_quadratic(p.row - mean.row, p.col - mean.col);
  return std::sqrt(std::max(q, 0.0));
}

} // namespace uslads
