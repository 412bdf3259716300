#pragma once

// Unsupervised dynamic sampling with hierarchical Gaussian mixtures.
//
// A run starts from a small uniform random sample. Each region (initially the
// whole image) is refined layer by layer: the measured intensities are
// thresholded with Otsu's method, a BIC-selected GMM is fitted to the
// foreground locations, and for every cluster the unmeasured locations
// closest to it in Mahalanobis distance are measured. A region whose mixture
// has several components is split by cluster label and the children are
// queued; a single-component region is finished. When every region is
// finished another pass starts from the whole image, so the run stops only
// once the measured fraction exceeds the stop ratio or a pass adds nothing.

#include "uslads/gmm.hpp"
#include "uslads/image.hpp"
#include "uslads/otsu.hpp"
#include "uslads/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uslads {

struct SamplerConfig
{
  double stop_ratio = 0.40;
  double initial_ratio = 0.05;
  std::size_t maxiter = 10;   ///< GMM iterations per layer
  std::size_t epsilon = 10;   ///< measurements per cluster per iteration
  std::size_t n_max = 10;     ///< largest component count in the BIC search
  std::uint64_t seed = 0;
  double snapshot_every = 0.05;

  void validate() const
  {
    if (!(initial_ratio > 0.0 && initial_ratio < 1.0))
      throw std::invalid_argument("initial ratio must lie in (0, 1)");
    if (!(stop_ratio > 0.0 && stop_ratio <= 1.0))
      throw std::invalid_argument("stop ratio must lie in (0, 1]");
    if (!(initial_ratio < stop_ratio))
      throw std::invalid_argument("initial ratio must be smaller than the stop ratio");
    if (maxiter < 1 || epsilon < 1 || n_max < 1)
      throw std::invalid_argument("maxiter, epsilon and max clusters must be at least 1");
    if (!(snapshot_every > 0.0 && snapshot_every <= 1.0))
      throw std::invalid_argument("snapshot interval must lie in (0, 1]");
  }
};

/// A sub-image: a subset of parent-image locations and the measurements taken on it.
struct Region
{
  std::vector<std::size_t> members; ///< ascending linear indices
  std::vector<std::uint8_t> in_region;
  MeasurementSet measurements;      ///< restricted to members, in measurement order
  std::size_t depth = 1;

  std::size_t width() const { return measurements.width(); }
  std::size_t height() const { return measurements.height(); }

  bool contains(std::size_t index) const { return index < in_region.size() && in_region[index] != 0; }

  /// Unmeasured members, ascending.
  std::vector<std::size_t> unmeasured() const
  {
    std::vector<std::size_t> out;
    for (std::size_t idx : members)
      if (!measurements.contains(idx))
        out.push_back(idx);
    return out;
  }
};

/// The whole image as a region carrying every measurement in `ms`.
inline Region full_region(const MeasurementSet& ms)
{
  Region r;
  r.members.resize(ms.area());
  for (std::size_t i = 0; i < r.members.size(); ++i)
    r.members[i] = i;
  r.in_region.assign(ms.area(), 1);
  r.measurements = ms;
  return r;
}

/// Child region over `member_indices` (linear indices inside the parent).
/// Measured members keep their intensities and the parent's measurement order.
inline Region construct_region(const Region& parent, std::span<const std::size_t> member_indices)
{
  if (member_indices.empty())
    throw std::invalid_argument("construct_region: empty membership");
  Region child;
  child.depth = parent.depth + 1;
  child.in_region.assign(parent.in_region.size(), 0);
  for (std::size_t idx : member_indices) {
    if (!parent.contains(idx))
      throw std::invalid_argument("construct_region: location " + std::to_string(idx) + " is outside the parent");
    child.in_region[idx] = 1;
  }
  for (std::size_t idx = 0; idx < child.in_region.size(); ++idx)
    if (child.in_region[idx])
      child.members.push_back(idx);
  child.measurements = MeasurementSet(parent.width(), parent.height());
  for (const auto& m : parent.measurements.entries())
    if (child.in_region[m.loc.row * parent.width() + m.loc.col])
      child.measurements.add(m.loc, m.value);
  return child;
}

/// Measured locations with intensity >= tau, in measurement order.
inline std::vector<Location> segment(const MeasurementSet& ms, Threshold tau)
{
  std::vector<Location> out;
  for (const auto& m : ms.entries())
    if (tau.foreground(m.value))
      out.push_back(m.loc);
  return out;
}

inline Vec2 to_point(const Location& loc)
{
  return {static_cast<double>(loc.row), static_cast<double>(loc.col)};
}

inline std::vector<Vec2> to_points(std::span<const Location> locs)
{
  std::vector<Vec2> out;
  out.reserve(locs.size());
  for (const auto& l : locs)
    out.push_back(to_point(l));
  return out;
}

/// Uniform random sample of floor(ratio * N) distinct locations, measured on `image`.
inline MeasurementSet initial_random_sample(const Image& image, double ratio, std::uint64_t seed)
{
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("initial_random_sample: ratio must lie in (0, 1)");
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(image.size())));
  Rng rng(derive_seed(seed, "init-sample"));
  MeasurementSet ms(image.width(), image.height());
  for (std::size_t idx : sample_without_replacement(image.size(), count, rng))
    measure_into(image, ms, image.location(idx));
  return ms;
}

/// Per cluster, the at most `epsilon` unmeasured locations nearest the
/// cluster in Mahalanobis distance, nearest first. Candidates are assigned
/// to clusters by `predict`; equal distances resolve to the lower linear index.
inline std::vector<std::vector<std::size_t>> select_candidates(const GmmModel& model,
                                                               std::span<const std::size_t> unmeasured,
                                                               std::size_t width, std::size_t epsilon)
{
  std::vector<Vec2> pts;
  pts.reserve(unmeasured.size());
  for (std::size_t idx : unmeasured)
    pts.push_back({static_cast<double>(idx / width), static_cast<double>(idx % width)});
  const auto labels = predict(model, pts);

  struct Ranked
  {
    double distance;
    std::size_t index;
  };
  std::vector<std::vector<Ranked>> per_cluster(model.k());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& comp = model.components[labels[i]];
    per_cluster[labels[i]].push_back({mahalanobis(pts[i], comp.mean, comp.cov), unmeasured[i]});
  }

  std::vector<std::vector<std::size_t>> out(model.k());
  for (std::size_t k = 0; k < model.k(); ++k) {
    auto& ranked = per_cluster[k];
    const std::size_t take = std::min(epsilon, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                      [](const Ranked& a, const Ranked& b) {
                        return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
                      });
    for (std::size_t i = 0; i < take; ++i)
      out[k].push_back(ranked[i].index);
  }
  return out;
}

struct TraceEntry
{
  std::size_t step = 0;
  Location loc;
  std::uint8_t value = 0;
  std::size_t depth = 0; ///< 0 for the initial random sample

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct Snapshot
{
  double target_ratio = 0.0; ///< nominal multiple of the snapshot interval
  std::size_t count = 0;
  double ratio = 0.0; ///< count / N
  std::vector<std::uint8_t> mask;
  double elapsed = 0.0; ///< seconds since the run started

  int percent() const { return static_cast<int>(std::lround(target_ratio * 100.0)); }
};

/// A region the hierarchy finished with.
struct FinishedRegion
{
  std::size_t depth = 0;
  std::size_t members = 0;
  std::size_t measured = 0;

  friend bool operator==(const FinishedRegion&, const FinishedRegion&) = default;
};

struct SamplingTrace
{
  std::vector<TraceEntry> log;
  std::vector<Snapshot> snapshots;
  std::vector<FinishedRegion> finished;
  std::size_t layers = 0;
  std::size_t passes = 0;

  /// Equality ignoring wall-clock times.
  bool same_trajectory(const SamplingTrace& other) const
  {
    if (log != other.log || finished != other.finished || layers != other.layers || passes != other.passes ||
        snapshots.size() != other.snapshots.size())
      return false;
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
      const auto& a = snapshots[i];
      const auto& b = other.snapshots[i];
      if (a.target_ratio != b.target_ratio || a.count != b.count || a.mask != b.mask)
        return false;
    }
    return true;
  }
};

/// Global state of one run: the ground truth acting as measurement oracle,
/// every measurement so far, the trace and the stop budget.
class SamplingSession
{
public:
  using Clock = std::chrono::steady_clock;

  SamplingSession(const Image& truth, const SamplerConfig& cfg)
      : truth_(truth), cfg_(cfg), measurements_(truth.width(), truth.height()), start_(Clock::now()),
        gmm_seed_(derive_seed(cfg.seed, "gmm-init"))
  {
  }

  const Image& truth() const { return truth_; }
  const SamplerConfig& config() const { return cfg_; }
  const MeasurementSet& measurements() const { return measurements_; }
  MeasurementSet& measurements() { return measurements_; }
  SamplingTrace& trace() { return trace_; }
  const SamplingTrace& trace() const { return trace_; }

  /// True once the measured fraction of the whole image exceeds the stop ratio.
  bool budget_reached() const
  {
    return static_cast<double>(measurements_.size()) > cfg_.stop_ratio * static_cast<double>(truth_.size());
  }

  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

  /// Seed for the next mixture fit; every fit in a run draws a fresh one.
  std::uint64_t next_gmm_seed() { return derive_seed(gmm_seed_, gmm_calls_++); }

  /// Measures the location at linear index `idx` and records it globally, in
  /// `region` (when given) and in the trace.
  std::uint8_t measure(std::size_t idx, std::size_t depth, Region* region = nullptr)
  {
    if (measurements_.contains(idx))
      throw std::logic_error("sampler: location " + std::to_string(idx) + " already measured");
    const Location loc = truth_.location(idx);
    const std::uint8_t v = uslads::measure(truth_, loc);
    measurements_.add(loc, v);
    if (region)
      region->measurements.add(loc, v);
    trace_.log.push_back({trace_.log.size(), loc, v, depth});
    take_snapshots();
    return v;
  }

  /// Adopts a pre-measured set (the initial random sample).
  void seed_with(const MeasurementSet& initial)
  {
    for (const auto& m : initial.entries()) {
      if (measure(truth_.index(m.loc), 0) != m.value)
        throw std::logic_error("sampler: initial sample disagrees with the ground truth");
    }
  }

private:
  void take_snapshots()
  {
    const double n = static_cast<double>(truth_.size());
    for (;;) {
      const double target = static_cast<double>(next_snapshot_) * cfg_.snapshot_every;
      if (target > 1.0 + 1e-12)
        return;
      const auto needed = static_cast<std::size_t>(std::ceil(target * n - 1e-9));
      if (measurements_.size() < needed)
        return;
      trace_.snapshots.push_back({target, measurements_.size(), measurements_.ratio(), measurements_.mask(), elapsed()});
      ++next_snapshot_;
    }
  }

  const Image& truth_;
  SamplerConfig cfg_;
  MeasurementSet measurements_;
  SamplingTrace trace_;
  Clock::time_point start_;
  std::uint64_t gmm_seed_;
  std::uint64_t gmm_calls_ = 0;
  std::size_t next_snapshot_ = 1;
};

enum class LayerStop
{
  completed,     ///< ran all maxiter iterations
  budget,        ///< global stop ratio exceeded
  exhausted,     ///< no unmeasured locations left in the region
  no_foreground, ///< nothing at or above the threshold
  too_few_foreground,
};

struct LayerResult
{
  GmmModel model;
  Threshold tau;
  LayerStop stop = LayerStop::completed;
  std::size_t iterations = 0;
  std::size_t measured = 0;
};

inline constexpr std::size_t kMinForeground = 3;

/// One layer of hierarchical refinement on `region` (up to cfg.maxiter iterations).
///
/// Each iteration thresholds the region's measured intensities, fits a
/// BIC-selected mixture to the foreground locations, and measures the
/// epsilon nearest unmeasured locations of every cluster. Regions that run
/// out of foreground stop early and report a single component fitted to all
/// their measured locations.
inline LayerResult layer_gmm(Region& region, const SamplerConfig& cfg, SamplingSession& session)
{
  if (region.measurements.empty())
    throw std::invalid_argument("layer_gmm: region has no measurements");

  LayerResult res;
  bool have_model = false;
  for (std::size_t it = 0; it < cfg.maxiter; ++it) {
    const auto candidates = region.unmeasured();
    if (candidates.empty()) {
      res.stop = LayerStop::exhausted;
      break;
    }

    std::vector<std::uint8_t> intensities;
    intensities.reserve(region.measurements.size());
    for (const auto& m : region.measurements.entries())
      intensities.push_back(m.value);
    const Threshold tau = otsu_threshold(intensities);
    const auto fg = segment(region.measurements, tau);
    if (fg.empty()) {
      res.stop = LayerStop::no_foreground;
      have_model = false;
      break;
    }
    if (fg.size() < kMinForeground) {
      res.stop = LayerStop::too_few_foreground;
      have_model = false;
      break;
    }

    const auto pts = to_points(fg);
    GmmModel model = select_model(pts, cfg.n_max, session.next_gmm_seed());
    for (const auto& picks : select_candidates(model, candidates, region.width(), cfg.epsilon)) {
      for (std::size_t idx : picks) {
        session.measure(idx, region.depth, &region);
        ++res.measured;
      }
    }
    res.model = std::move(model);
    res.tau = tau;
    have_model = true;
    ++res.iterations;
    if (session.budget_reached()) {
      res.stop = LayerStop::budget;
      break;
    }
  }

  if (!have_model) {
    std::vector<Location> all;
    for (const auto& m : region.measurements.entries())
      all.push_back(m.loc);
    const auto pts = to_points(all);
    res.model = fit_gmm(pts, 1, session.next_gmm_seed());
    res.tau = Threshold{0};
  }
  return res;
}

/// Splits `region` by the model's labels. Child k holds the foreground
/// measured locations (intensity >= tau) and the unmeasured locations that
/// the model assigns to component k; components that attract nothing yield
/// no child.
inline std::vector<Region> split_region(const Region& region, const GmmModel& model, Threshold tau)
{
  std::vector<std::size_t> indices;
  for (const auto& m : region.measurements.entries())
    if (tau.foreground(m.value))
      indices.push_back(m.loc.row * region.width() + m.loc.col);
  for (std::size_t idx : region.unmeasured())
    indices.push_back(idx);

  std::vector<Vec2> pts;
  pts.reserve(indices.size());
  for (std::size_t idx : indices)
    pts.push_back({static_cast<double>(idx / region.width()), static_cast<double>(idx % region.width())});
  const auto labels = predict(model, pts);

  std::vector<std::vector<std::size_t>> groups(model.k());
  for (std::size_t i = 0; i < indices.size(); ++i)
    groups[labels[i]].push_back(indices[i]);

  std::vector<Region> children;
  for (auto& g : groups)
    if (!g.empty())
      children.push_back(construct_region(region, g));
  return children;
}

struct SamplingResult
{
  MeasurementSet measurements;
  SamplingTrace trace;
};

/// Full run on `image` under `cfg`.
///
/// Each pass walks the region hierarchy breadth-first from the whole image
/// until every region is finished. Passes repeat over the accumulated
/// measurements until the stop ratio is exceeded or a pass measures nothing.
inline SamplingResult run_uslads(const Image& image, const SamplerConfig& cfg)
{
  cfg.validate();
  SamplingSession session(image, cfg);
  session.seed_with(initial_random_sample(image, cfg.initial_ratio, cfg.seed));

  auto& trace = session.trace();
  while (!session.budget_reached()) {
    const std::size_t before = session.measurements().size();
    ++trace.passes;

    std::deque<Region> queue;
    queue.push_back(full_region(session.measurements()));
    while (!queue.empty() && !session.budget_reached()) {
      Region region = std::move(queue.front());
      queue.pop_front();

      if (region.measurements.empty()) {
        // Nothing measured to threshold or cluster on.
        trace.finished.push_back({region.depth, region.members.size(), 0});
        continue;
      }

      const LayerResult layer = layer_gmm(region, cfg, session);
      ++trace.layers;
      if (layer.stop == LayerStop::budget)
        break;

      const bool single = layer.model.k() == 1 || layer.stop == LayerStop::exhausted ||
                          layer.stop == LayerStop::no_foreground || layer.stop == LayerStop::too_few_foreground;
      if (single) {
        trace.finished.push_back({region.depth, region.members.size(), region.measurements.size()});
        continue;
      }
      for (auto& child : split_region(region, layer.model, layer.tau))
        queue.push_back(std::move(child));
    }

    if (session.measurements().size() == before)
      break;
  }
  return {session.measurements(), std::move(trace)};
}

} // namespace uslads
