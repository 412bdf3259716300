#include "uslads/dendrite.hpp"
#include "uslads/sampler.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace uslads;

namespace {

// Small constant image region: `measured` known locations plus `free`
// unmeasured ones, all in one row band. With few measured points the BIC
// search is skipped, so the layer works with exactly one cluster.
struct Fixture
{
  Image truth{16, 16, 200};
  SamplerConfig cfg;
  SamplingSession session{truth, cfg};
  Region region;

  Fixture(std::size_t measured, std::size_t free)
  {
    cfg.maxiter = 1;
    cfg.epsilon = 10;
    cfg.n_max = 10;
    Region parent = full_region(MeasurementSet(16, 16));
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < measured + free; ++i)
      members.push_back(3 * i + 1);
    region = construct_region(parent, members);
    for (std::size_t i = 0; i < measured; ++i)
      session.measure(members[i], 1, &region);
  }
};

std::set<std::size_t> new_indices(const SamplingTrace& trace, std::size_t from, std::size_t width)
{
  std::set<std::size_t> out;
  for (std::size_t i = from; i < trace.log.size(); ++i)
    out.insert(trace.log[i].loc.row * width + trace.log[i].loc.col);
  return out;
}

SamplerConfig dendrite_config(std::uint64_t seed)
{
  SamplerConfig cfg;
  cfg.seed = seed;
  return cfg;
}

} // namespace

TEST(InitialSample, CountsAndDeterminism)
{
  EXPECT_EQ(initial_random_sample(Image(10, 10, 1), 0.05, 3).size(), 5u);
  const Image img = generate_dendrite({});
  const auto a = initial_random_sample(img, 0.05, 3);
  EXPECT_EQ(a.size(), 819u);
  EXPECT_EQ(a.mask(), initial_random_sample(img, 0.05, 3).mask());
  EXPECT_NE(a.mask(), initial_random_sample(img, 0.05, 4).mask());
  for (const auto& m : a.entries())
    EXPECT_EQ(m.value, img(m.loc.row, m.loc.col));
  EXPECT_THROW(initial_random_sample(img, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(initial_random_sample(img, 1.0, 1), std::invalid_argument);
}

TEST(Segment, FiltersInMeasurementOrder)
{
  MeasurementSet ms(4, 4);
  ms.add({0, 0}, 10);
  ms.add({0, 1}, 200);
  EXPECT_EQ(segment(ms, Threshold{100}), (std::vector<Location>{{0, 1}}));
  EXPECT_EQ(segment(ms, Threshold{0}), (std::vector<Location>{{0, 0}, {0, 1}}));
  EXPECT_TRUE(segment(ms, Threshold{250}).empty());
}

TEST(ConstructRegion, IdentityAndSingleMember)
{
  const Image img = generate_dendrite({});
  const Region parent = full_region(initial_random_sample(img, 0.05, 1));
  const Region same = construct_region(parent, parent.members);
  EXPECT_EQ(same.members, parent.members);
  EXPECT_EQ(same.measurements.entries(), parent.measurements.entries());
  EXPECT_EQ(same.unmeasured(), parent.unmeasured());

  const auto& first = parent.measurements.entries().front();
  const std::vector<std::size_t> one{img.index(first.loc)};
  Region single = construct_region(parent, one);
  EXPECT_EQ(single.measurements.size(), 1u);
  EXPECT_TRUE(single.unmeasured().empty());
  EXPECT_EQ(single.depth, parent.depth + 1);

  SamplingSession session(img, SamplerConfig{});
  session.seed_with(parent.measurements);
  const auto before = session.measurements().size();
  const auto layer = layer_gmm(single, SamplerConfig{}, session);
  EXPECT_EQ(layer.measured, 0u);
  EXPECT_EQ(layer.stop, LayerStop::exhausted);
  EXPECT_EQ(session.measurements().size(), before);
  EXPECT_EQ(single.measurements.size(), 1u);
}

TEST(ConstructRegion, RejectsEmptyAndForeignMembers)
{
  Region parent = full_region(MeasurementSet(8, 8));
  Region child = construct_region(parent, std::vector<std::size_t>{1, 2, 3});
  EXPECT_THROW(construct_region(parent, std::vector<std::size_t>{}), std::invalid_argument);
  EXPECT_THROW(construct_region(child, std::vector<std::size_t>{4}), std::invalid_argument);
  EXPECT_THROW(construct_region(parent, std::vector<std::size_t>{64}), std::invalid_argument);
}

TEST(SplitRegion, ChildrenPartitionUnmeasuredByLabel)
{
  const Image img = generate_dendrite({128, 128, 4, 0.1, 2.0, 5});
  SamplerConfig cfg;
  cfg.maxiter = 1;
  SamplingSession session(img, cfg);
  session.seed_with(initial_random_sample(img, 0.05, 5));
  Region region = full_region(session.measurements());
  const auto layer = layer_gmm(region, cfg, session);
  ASSERT_GT(layer.model.k(), 1u);

  const auto children = split_region(region, layer.model, layer.tau);
  std::vector<std::size_t> unmeasured_union;
  for (const auto& child : children) {
    const auto u = child.unmeasured();
    unmeasured_union.insert(unmeasured_union.end(), u.begin(), u.end());
  }
  std::sort(unmeasured_union.begin(), unmeasured_union.end());
  EXPECT_EQ(unmeasured_union, region.unmeasured());
  EXPECT_TRUE(std::adjacent_find(unmeasured_union.begin(), unmeasured_union.end()) == unmeasured_union.end());

  // Every child is one label, and its measurements are foreground.
  for (const auto& child : children) {
    std::set<std::size_t> labels;
    for (std::size_t idx : child.members)
      labels.insert(oracle::label({double(idx / 128), double(idx % 128)}, layer.model));
    EXPECT_EQ(labels.size(), 1u);
    for (const auto& m : child.measurements.entries())
      EXPECT_TRUE(layer.tau.foreground(m.value));
  }
}

TEST(LayerGmm, FewerCandidatesThanEpsilon)
{
  Fixture f(5, 4);
  const auto from = f.session.trace().log.size();
  const auto layer = layer_gmm(f.region, f.cfg, f.session);
  EXPECT_EQ(layer.model.k(), 1u);
  EXPECT_EQ(layer.measured, 4u);
  EXPECT_EQ(f.session.trace().log.size() - from, 4u);
  EXPECT_TRUE(f.region.unmeasured().empty());
}

TEST(LayerGmm, TakesEpsilonNearestByExhaustiveRanking)
{
  Fixture f(5, 25);
  const auto candidates = f.region.unmeasured();
  ASSERT_EQ(candidates.size(), 25u);
  const auto from = f.session.trace().log.size();
  const auto layer = layer_gmm(f.region, f.cfg, f.session);
  ASSERT_EQ(layer.model.k(), 1u);
  EXPECT_EQ(layer.measured, 10u);

  const auto expected = oracle::select(layer.model, candidates, 16, 10);
  EXPECT_EQ(new_indices(f.session.trace(), from, 16), std::set<std::size_t>(expected[0].begin(), expected[0].end()));
}

TEST(LayerGmm, FullyMeasuredRegionIsUnchanged)
{
  Fixture f(6, 0);
  const auto entries = f.region.measurements.entries();
  const auto layer = layer_gmm(f.region, f.cfg, f.session);
  EXPECT_EQ(layer.measured, 0u);
  EXPECT_EQ(layer.stop, LayerStop::exhausted);
  EXPECT_EQ(f.region.measurements.entries(), entries);
}

TEST(LayerGmm, MultiClusterSelectionMatchesOracle)
{
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Image img = generate_dendrite({128, 128, 4, 0.1, 2.0, seed});
    SamplerConfig cfg;
    cfg.maxiter = 1;
    SamplingSession session(img, cfg);
    session.seed_with(initial_random_sample(img, 0.05, seed));
    Region region = full_region(session.measurements());
    const auto candidates = region.unmeasured();
    const auto from = session.trace().log.size();
    const auto layer = layer_gmm(region, cfg, session);

    std::set<std::size_t> expected;
    for (const auto& picks : oracle::select(layer.model, candidates, 128, cfg.epsilon))
      expected.insert(picks.begin(), picks.end());
    EXPECT_EQ(new_indices(session.trace(), from, 128), expected) << "seed " << seed;
  }
}

TEST(LayerGmm, NoForegroundFallsBackToOneComponent)
{
  // One bright measurement among dark ones: too little foreground to fit.
  Image truth(8, 8, 0);
  truth(0, 0) = 255;
  SamplerConfig cfg;
  SamplingSession session(truth, cfg);
  Region region = full_region(MeasurementSet(8, 8));
  for (std::size_t idx : {0u, 9u, 18u, 27u})
    session.measure(idx, 1, &region);
  const auto layer = layer_gmm(region, cfg, session);
  EXPECT_EQ(layer.stop, LayerStop::too_few_foreground);
  EXPECT_EQ(layer.model.k(), 1u);
  EXPECT_EQ(layer.measured, 0u);
  Region empty = full_region(MeasurementSet(8, 8));
  EXPECT_THROW(layer_gmm(empty, cfg, session), std::invalid_argument);
}

TEST(RunUslads, StopsRightAfterSeedingWithTightBudget)
{
  const Image img = generate_dendrite({});
  SamplerConfig cfg;
  cfg.stop_ratio = cfg.initial_ratio + 1e-4;
  const auto res = run_uslads(img, cfg);
  const double n = static_cast<double>(img.size());
  EXPECT_GE(res.measurements.ratio(), cfg.initial_ratio);
  EXPECT_LE(res.measurements.ratio(), cfg.stop_ratio + double(cfg.n_max * cfg.epsilon) / n);
  EXPECT_GT(res.measurements.ratio(), cfg.stop_ratio);
}

TEST(RunUslads, DefaultDendriteRun)
{
  const Image img = generate_dendrite({});
  const SamplerConfig cfg = dendrite_config(7);
  const auto res = run_uslads(img, cfg);
  const double r = res.measurements.ratio();
  EXPECT_GE(r, 0.40);
  EXPECT_LE(r, 0.40 + double(cfg.epsilon * cfg.n_max * cfg.maxiter) / 16384.0);

  std::set<int> percents;
  for (const auto& s : res.trace.snapshots)
    percents.insert(s.percent());
  for (int p : {5, 10, 20, 30, 40})
    EXPECT_TRUE(percents.count(p)) << p << "% snapshot missing";

  // Snapshots are prefixes of the final mask and never shrink.
  for (std::size_t i = 1; i < res.trace.snapshots.size(); ++i) {
    EXPECT_GE(res.trace.snapshots[i].count, res.trace.snapshots[i - 1].count);
    EXPECT_GE(res.trace.snapshots[i].elapsed, res.trace.snapshots[i - 1].elapsed);
  }
}

TEST(RunUslads, BlankImageTerminates)
{
  const Image img(64, 64, 100);
  const auto res = run_uslads(img, SamplerConfig{});
  EXPECT_GT(res.measurements.ratio(), 0.40);
  for (const auto& m : res.measurements.entries())
    EXPECT_EQ(m.value, 100);
}

TEST(RunUslads, InvariantsAndDeterminism)
{
  const Image img = generate_dendrite({128, 128, 4, 0.1, 2.0, 3});
  for (std::uint64_t seed : {1u, 2u}) {
    const SamplerConfig cfg = dendrite_config(seed);
    const auto a = run_uslads(img, cfg);
    const auto b = run_uslads(img, cfg);
    EXPECT_TRUE(a.trace.same_trajectory(b.trace));

    std::set<std::size_t> seen;
    for (const auto& e : a.trace.log) {
      EXPECT_TRUE(seen.insert(img.index(e.loc)).second);
      EXPECT_EQ(e.value, img(e.loc.row, e.loc.col));
    }
    EXPECT_EQ(seen.size(), a.measurements.size());
    const double n = double(img.size());
    EXPECT_GE(a.measurements.ratio(), cfg.stop_ratio);
    EXPECT_LE(a.measurements.ratio(), cfg.stop_ratio + double(cfg.n_max * cfg.epsilon) / n);
  }
}

TEST(SamplerConfig, Validation)
{
  SamplerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.initial_ratio = cfg.stop_ratio;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.stop_ratio = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.epsilon = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(SamplingSession, RejectsRepeatMeasurement)
{
  const Image img(8, 8, 5);
  SamplingSession session(img, SamplerConfig{});
  session.measure(3, 1);
  EXPECT_THROW(session.measure(3, 1), std::logic_error);
}
