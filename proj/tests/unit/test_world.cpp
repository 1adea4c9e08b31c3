#include <gtest/gtest.h>

#include "rearrange/error.hpp"
#include "rearrange/world.hpp"

using namespace rearrange;
using namespace rearrange::world;

namespace {

Policy zero_policy() {
  return [](const BallState& s, int) {
    Action a;
    a.velocities.assign(s.size(), Vec2{});
    return a;
  };
}

BallState two_balls(Vec2 a, Vec2 b) { return BallState{{a, b}, {0, 1}}; }

}  // namespace

TEST(WorldConfig, DefaultsAndValidation) {
  WorldConfig c;
  EXPECT_DOUBLE_EQ(c.half_extent, 0.3);
  EXPECT_DOUBLE_EQ(c.ball_radius, 0.025);
  EXPECT_EQ(c.num_balls(), 21);
  EXPECT_NO_THROW(c.validate());
  c.horizon = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.ball_radius = 0.3;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(SampleInitialState, SingleBallInsideBox) {
  WorldConfig c;
  c.n_colors = 1;
  c.n_per_color = 1;
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng rng = make_rng(3, streams::kInitialState, i);
    BallState s = sample_initial_state(c, rng);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_LE(std::abs(s.positions[0].x), c.bound());
    EXPECT_LE(std::abs(s.positions[0].y), c.bound());
  }
}

TEST(SampleInitialState, DefaultK21IsLegal) {
  WorldConfig c;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Rng rng = make_rng(11, streams::kInitialState, i);
    BallState s = sample_initial_state(c, rng);
    ASSERT_EQ(s.size(), 21u);
    ASSERT_GE(min_pair_distance(s), 2 * c.ball_radius - kOverlapTol);
    ASSERT_TRUE(inside_walls(s, c));
  }
}

TEST(SampleInitialState, PackingInfeasible) {
  WorldConfig c;
  c.n_per_color = 100;
  Rng rng = make_rng(0);
  EXPECT_THROW(sample_initial_state(c, rng), ValidationError);
}

TEST(Step, ZeroActionKeepsState) {
  WorldConfig c;
  Rng rng = make_rng(1);
  BallState s = sample_initial_state(c, rng);
  StepRecord r = step(s, Action{Field(s.size())}, c);
  EXPECT_EQ(r.state_after, s);
  EXPECT_EQ(r.collision_count, 0);
  EXPECT_TRUE(r.pair_collisions.empty());
}

TEST(Step, HeadOnPairIsSeparatedAndCounted) {
  WorldConfig c;
  c.n_colors = 2;
  c.n_per_color = 1;
  c.v_max = 0.3;
  BallState s = two_balls({-0.03, 0.0}, {0.03, 0.0});
  StepRecord r = step(s, Action{{{0.3, 0.0}, {-0.3, 0.0}}}, c);
  EXPECT_GE(min_pair_distance(r.state_after), 0.05 - kOverlapTol);
  EXPECT_EQ(r.collision_count, 1);
  ASSERT_EQ(r.pair_collisions.size(), 1u);
  EXPECT_EQ(r.pair_collisions[0], std::make_pair(0, 1));
}

TEST(Step, WallClamp) {
  WorldConfig c;
  c.n_colors = 1;
  c.n_per_color = 1;
  BallState s{{{c.bound(), 0.0}}, {0}};
  StepRecord r = step(s, Action{{{1.0, 0.0}}}, c);
  EXPECT_DOUBLE_EQ(r.state_after.positions[0].x, c.bound());
}

TEST(Step, SpeedsAreClipped) {
  WorldConfig c;
  c.n_colors = 1;
  c.n_per_color = 1;
  BallState s{{{0.0, 0.0}}, {0}};
  StepRecord r = step(s, Action{{{30.0, 40.0}}}, c);
  EXPECT_NEAR(norm(r.action.velocities[0]), c.v_max, 1e-12);
  EXPECT_NEAR(norm(r.state_after.positions[0]), c.v_max * c.dt, 1e-12);
}

TEST(Rollout, ZeroPolicyIsStatic) {
  WorldConfig c;
  c.horizon = 20;
  Trajectory t = rollout(zero_policy(), c, 0);
  ASSERT_EQ(t.steps.size(), 20u);
  for (const auto& r : t.steps) {
    EXPECT_EQ(r.state_after, t.initial());
    EXPECT_EQ(r.collision_count, 0);
  }
  EXPECT_EQ(t.states().size(), 21u);
}

TEST(Rollout, DeterministicAndSharedInitialState) {
  WorldConfig c;
  c.horizon = 30;
  c.rng_seed = 42;
  Policy push = [](const BallState& s, int) {
    Action a;
    for (const Vec2& p : s.positions) a.velocities.push_back(-5.0 * p);
    return a;
  };
  Trajectory a = rollout(push, c, 7);
  Trajectory b = rollout(push, c, 7);
  EXPECT_EQ(a, b);
  Trajectory z = rollout(zero_policy(), c, 7);
  EXPECT_EQ(z.initial(), a.initial());
  EXPECT_EQ(episode_initial_state(c, 7), a.initial());
  EXPECT_NE(episode_initial_state(c, 8), a.initial());
}

TEST(Rollout, ConfinementNonPenetrationSpeedBound) {
  WorldConfig c;
  c.horizon = 100;
  c.rng_seed = 5;
  Policy inward = [](const BallState& s, int) {
    Action a;
    for (const Vec2& p : s.positions) a.velocities.push_back(-10.0 * p);
    return a;
  };
  Trajectory t = rollout(inward, c, 0);
  const double bound = c.v_max * c.dt + c.resolution_passes * 2 * c.ball_radius;
  for (const auto& r : t.steps) {
    ASSERT_TRUE(inside_walls(r.state_after, c));
    ASSERT_GE(min_pair_distance(r.state_after), 2 * c.ball_radius - kOverlapTol);
    for (std::size_t i = 0; i < r.state_after.size(); ++i) {
      ASSERT_LE(norm(r.state_after.positions[i] - r.state_before.positions[i]), bound);
    }
    ASSERT_EQ(r.collision_count, static_cast<int>(r.pair_collisions.size()));
  }
}

TEST(CanonicalCategories, Layout) {
  WorldConfig c;
  c.n_per_color = 2;
  EXPECT_EQ(canonical_categories(c), (std::vector<int>{0, 0, 1, 1, 2, 2}));
}
