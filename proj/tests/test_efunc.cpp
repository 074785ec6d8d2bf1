#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dnorm_lab/efunc.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/probes.hpp"

using namespace dnorm_lab;

TEST(StepFunction, SingleSpike) {
  const auto f = make_step_function({{0.5, -2.0}}, GridConfig{100});
  EXPECT_EQ(f(0.5), -2.0);
  EXPECT_EQ(f(0.25), 0.0);
  EXPECT_EQ(f(0.51), 0.0);
  EXPECT_EQ(f(0.0), 0.0);
  for (double v : f.values()) EXPECT_EQ(v, 0.0);
  ASSERT_EQ(f.spikes().size(), 1u);
}

TEST(StepFunction, EmptyIsZero) {
  const auto f = make_step_function({}, GridConfig{100});
  EXPECT_EQ(sup_norm(f), 0.0);
  EXPECT_TRUE(f.spikes().empty());
  EXPECT_TRUE(f.support().empty());
}

TEST(StepFunction, OffGridSpikesKeptExactly) {
  const GridConfig grid{10};
  const auto f = make_step_function({{0.2, -1.0}, {0.8, -3.0}}, grid);
  EXPECT_EQ(f(0.2), -1.0);
  EXPECT_EQ(f(0.8), -3.0);
  const auto g = make_step_function({{0.123456789, -1.5}}, grid);
  EXPECT_EQ(g(0.123456789), -1.5);
  ASSERT_EQ(g.spikes().size(), 1u);
  EXPECT_EQ(g.spikes()[0].t, 0.123456789);
  // The spike appears among the evaluation points next to the grid nodes.
  EXPECT_EQ(g.points().size(), grid.resolution + 2);
}

TEST(StepFunction, DuplicateLocationNamesIndices) {
  try {
    make_step_function({{0.3, -1.0}, {0.7, -1.0}, {0.3, -2.0}}, GridConfig{10});
    FAIL() << "expected a duplicate error";
  } catch (const PreconditionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("duplicate"), std::string::npos);
    EXPECT_NE(msg.find('0'), std::string::npos);
    EXPECT_NE(msg.find('2'), std::string::npos);
  }
}

TEST(StepFunction, RejectsBadPoints) {
  EXPECT_THROW(make_step_function({{1.5, -1.0}}, GridConfig{10}), PreconditionError);
  EXPECT_THROW(make_step_function({{-0.1, -1.0}}, GridConfig{10}), PreconditionError);
  EXPECT_THROW(make_step_function({{0.5, NAN}}, GridConfig{10}), PreconditionError);
  EXPECT_THROW(make_step_function({{0.5, INFINITY}}, GridConfig{10}), PreconditionError);
}

TEST(EFunction, Invariants) {
  EXPECT_THROW(GridConfig{0}, PreconditionError);
  EXPECT_THROW(EFunction(GridConfig{4}, {0, 0, 0}), PreconditionError);
  EXPECT_THROW(EFunction(GridConfig{2}, {0, NAN, 0}), PreconditionError);
  const GridConfig g{4};
  EXPECT_EQ(g.point(0), 0.0);
  EXPECT_EQ(g.point(4), 1.0);
  EXPECT_DOUBLE_EQ(g.point(1), 0.25);
}

TEST(EFunction, LinearInterpolationBetweenNodes) {
  const auto f = EFunction::from_function(GridConfig{4}, [](double t) { return -t; });
  EXPECT_DOUBLE_EQ(f(0.125), -0.125);
  EXPECT_DOUBLE_EQ(f(1.0), -1.0);
}

TEST(EFunction, OnGridSpikeOverridesNode) {
  const EFunction f(GridConfig{4}, {0, 0, -1, 0, 0}, {{0.5, -3.0}});
  EXPECT_EQ(f(0.5), -3.0);
  EXPECT_EQ(sup_norm(f), 3.0);
  EXPECT_EQ(f.points().size(), 5u);
}

TEST(SupNorm, Examples) {
  const GridConfig grid{200};
  EXPECT_EQ(sup_norm(EFunction::zero(grid)), 0.0);
  EXPECT_EQ(sup_norm(EFunction::constant(grid, -1.0)), 1.0);
  EXPECT_EQ(sup_norm(make_step_function({{0.2, -1.0}, {0.8, -3.0}}, grid)), 3.0);
}

TEST(PointwiseOps, Examples) {
  const GridConfig grid{50};
  const auto f = EFunction::constant(grid, -1.0);
  const auto zero = scale(f, 0.0);
  EXPECT_EQ(sup_norm(zero), 0.0);
  const auto a = pointwise_abs(f);
  for (const auto& p : a.points()) EXPECT_EQ(p.value, 1.0);
  const auto m = pointwise_max(EFunction::constant(grid, -2.0), EFunction::constant(grid, -1.0));
  for (const auto& p : m.points()) EXPECT_EQ(p.value, -1.0);
}

TEST(PointwiseOps, SpikesUnion) {
  const GridConfig grid{10};
  const auto f = make_step_function({{0.25, -1.0}}, grid);
  const auto g = make_step_function({{0.75, -2.0}}, grid);
  const auto s = add(f, g);
  EXPECT_EQ(s(0.25), -1.0);
  EXPECT_EQ(s(0.75), -2.0);
  const auto m = pointwise_min(f, g);
  EXPECT_EQ(m(0.25), -1.0);
  EXPECT_EQ(m(0.75), -2.0);
  EXPECT_EQ(m(0.5), 0.0);
}

TEST(PointwiseOps, MismatchedGridsRejected) {
  EXPECT_THROW(pointwise_max(EFunction::zero(GridConfig{10}), EFunction::zero(GridConfig{20})), PreconditionError);
  EXPECT_THROW(add(EFunction::zero(GridConfig{10}), EFunction::zero(GridConfig{11})), PreconditionError);
}

namespace {

EFunction random_function(std::mt19937_64& rng, GridConfig grid, bool nonpositive) {
  std::uniform_real_distribution<double> val(-5.0, nonpositive ? 0.0 : 5.0);
  std::uniform_real_distribution<double> loc(0.0, 1.0);
  std::vector<double> values(grid.resolution + 1);
  for (auto& v : values) v = val(rng);
  std::vector<Spike> spikes;
  const int ns = static_cast<int>(rng() % 4);
  for (int i = 0; i < ns; ++i) spikes.push_back({loc(rng), 3.0 * val(rng)});
  return EFunction(grid, values, spikes);
}

}  // namespace

TEST(EFunctionProperties, SupNormHomogeneous) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const auto f = random_function(rng, GridConfig{37}, false);
    const double k = c(rng);
    EXPECT_NEAR(sup_norm(scale(f, k)), std::abs(k) * sup_norm(f), 1e-15 * std::abs(k) * sup_norm(f));
  }
}

TEST(EFunctionProperties, MaxOfNonpositiveBounded) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto f = random_function(rng, GridConfig{23}, true);
    const auto g = random_function(rng, GridConfig{23}, true);
    EXPECT_LE(sup_norm(pointwise_max(f, g)), std::max(sup_norm(f), sup_norm(g)));
  }
}

TEST(EFunctionProperties, StepSupIsMaxAbs) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> val(-7.0, 7.0);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = rng() % 6;
    std::vector<Spike> pts;
    double expected = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = val(rng);
      pts.push_back({(static_cast<double>(j) + 0.37) / 6.0, x});
      expected = std::max(expected, std::abs(x));
    }
    EXPECT_EQ(sup_norm(make_step_function(pts, GridConfig{17})), expected);
  }
}

TEST(StandardProbes, NineNonpositiveProbes) {
  const auto probes = standard_probes(GridConfig{200});
  ASSERT_EQ(probes.size(), 9u);
  for (const auto& p : probes) EXPECT_TRUE(p.f.nonpositive()) << p.id;
  EXPECT_EQ(sup_norm(probes[0].f), 0.0);
}
