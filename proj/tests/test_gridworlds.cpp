#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgfdc/expert.hpp"
#include "pgfdc/gridworld.hpp"
#include "pgfdc/rng.hpp"

using namespace pgfdc;

namespace {

bool same_bytes(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(EnvSpecTable, DimensionsActionsAndStepLimits) {
  const EnvSpec g = EnvSpec::make(EnvId::gridworld14);
  EXPECT_EQ(g.height, 14);
  EXPECT_EQ(g.width, 14);
  EXPECT_EQ(g.action_count, 3);
  EXPECT_EQ(g.n_max, 192);

  const EnvSpec k = EnvSpec::make(EnvId::keyworld14);
  EXPECT_EQ(k.height, 14);
  EXPECT_EQ(k.action_count, 5);
  EXPECT_EQ(k.n_max, 1960);

  const EnvSpec f = EnvSpec::make(EnvId::fourrooms);
  EXPECT_EQ(f.height, 15);
  EXPECT_EQ(f.width, 15);
  EXPECT_EQ(f.action_count, 3);
  EXPECT_EQ(f.n_max, 1536);

  EXPECT_NE(g.layout_hash(), k.layout_hash());
  EXPECT_NE(g.layout_hash(), f.layout_hash());
  EXPECT_NE(k.layout_hash(), f.layout_hash());
  EXPECT_EQ(g.layout_hash(), EnvSpec::make(EnvId::gridworld14).layout_hash());

  EXPECT_EQ(env_id_from_string("keyworld14"), EnvId::keyworld14);
  EXPECT_THROW(env_id_from_string("lavaworld"), std::invalid_argument);
}

TEST(GridEnvTest, ResetIsDeterministicAcrossSeeds) {
  GridEnv a(EnvId::gridworld14), b(EnvId::gridworld14);
  Tensor oa = a.reset(0), ob = b.reset(12345);
  EXPECT_TRUE(same_bytes(oa, ob));

  GridEnv k(EnvId::keyworld14);
  k.reset(7);
  EXPECT_FALSE(k.state().pose.carrying_key);
  EXPECT_FALSE(k.state().pose.door_open);

  GridEnv f(EnvId::fourrooms);
  f.reset();
  EXPECT_LT(f.state().pose.row, 7);  // top-left room
  EXPECT_LT(f.state().pose.col, 7);
}

TEST(GridEnvTest, RejectsBadActionsAndStepsAfterDone) {
  GridEnv env(EnvId::gridworld14);
  env.reset();
  EXPECT_THROW(env.step(3), std::invalid_argument);
  EXPECT_THROW(env.step(-1), std::invalid_argument);
  for (int i = 0; i < 192; ++i) env.step(kActLeft);
  EXPECT_TRUE(env.done());
  EXPECT_THROW(env.step(kActForward), std::logic_error);
}

TEST(GridEnvTest, WallBumpIsCountedNoOp) {
  GridEnv env(EnvId::gridworld14);
  env.reset();
  env.step(kActLeft);  // face north, wall directly ahead
  const auto before = env.state().pose;
  GridEnv::StepResult r = env.step(kActForward);
  EXPECT_EQ(env.state().pose.row, before.row);
  EXPECT_EQ(env.state().pose.col, before.col);
  EXPECT_EQ(env.state().pose.heading, before.heading);
  EXPECT_EQ(env.state().n_t, 2);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
}

namespace {

// Runs actions until done; returns (total reward, steps, done).
struct RunOutcome {
  double total = 0.0;
  int steps = 0;
  bool reached_goal = false;
};

RunOutcome run_script(GridEnv& env, const std::vector<int>& actions) {
  RunOutcome out;
  env.reset();
  for (int a : actions) {
    GridEnv::StepResult r = env.step(a);
    out.total += r.reward;
    out.steps += 1;
    if (r.done) {
      out.reached_goal = r.reward > 0.0;
      break;
    }
  }
  return out;
}

std::vector<int> goal_script_with_bumps(int bumps) {
  // forward x11 to (1,12), bump the east wall `bumps` times, turn south,
  // forward x11 onto the goal; total steps = 23 + bumps.
  std::vector<int> s(11, kActForward);
  s.insert(s.end(), static_cast<std::size_t>(bumps), kActForward);  // blocked at (1,13)
  s.push_back(kActRight);
  s.insert(s.end(), 11, kActForward);
  return s;
}

}  // namespace

TEST(RewardRule, GoalAtHalfTheStepBudgetPaysPointFiveFive) {
  GridEnv env(EnvId::gridworld14);
  RunOutcome out = run_script(env, goal_script_with_bumps(73));
  EXPECT_EQ(out.steps, 96);
  EXPECT_TRUE(out.reached_goal);
  EXPECT_NEAR(out.total, 0.55, 1e-12);
}

TEST(RewardRule, GoalOnTheLastAllowedStepPaysPointOne) {
  GridEnv env(EnvId::gridworld14);
  RunOutcome out = run_script(env, goal_script_with_bumps(169));
  EXPECT_EQ(out.steps, 192);
  EXPECT_TRUE(out.reached_goal);
  EXPECT_NEAR(out.total, 0.1, 1e-12);
}

TEST(RewardRule, TruncationWithoutGoalPaysNothing) {
  GridEnv env(EnvId::gridworld14);
  RunOutcome out = run_script(env, goal_script_with_bumps(170));
  EXPECT_EQ(out.steps, 192);
  EXPECT_FALSE(out.reached_goal);
  EXPECT_EQ(out.total, 0.0);
  EXPECT_TRUE(env.done());
}

TEST(RewardRule, QuickestPossibleFinishStaysBelowOne) {
  // Even an instant win pays strictly less than 1.
  const EnvSpec spec = EnvSpec::make(EnvId::gridworld14);
  const double best = 1.0 - 0.9 * (1.0 / spec.n_max);
  EXPECT_LT(best, 1.0);
  EXPECT_GT(best, 0.99);
}

TEST(KeyDoorMechanics, PickupToggleAndPassThrough) {
  GridEnv env(EnvId::keyworld14);
  env.reset();
  // Reach (3,2) facing the key at (3,3).
  for (int a : {kActRight, kActForward, kActForward, kActLeft, kActForward}) env.step(a);
  EXPECT_EQ(env.state().pose.row, 3);
  EXPECT_EQ(env.state().pose.col, 2);

  env.step(kActForward);  // key blocks movement
  EXPECT_EQ(env.state().pose.col, 2);

  env.step(kActPickup);
  EXPECT_TRUE(env.state().pose.carrying_key);

  env.step(kActForward);  // key cell is walkable once carried
  EXPECT_EQ(env.state().pose.col, 3);

  // Go stand at (6,6) facing the locked door at (6,7).
  for (int a : {kActForward, kActForward, kActForward, kActRight, kActForward, kActForward,
                kActForward, kActLeft})
    env.step(a);
  EXPECT_EQ(env.state().pose.row, 6);
  EXPECT_EQ(env.state().pose.col, 6);
  EXPECT_EQ(env.state().pose.heading, kHeadingE);

  env.step(kActForward);  // locked door blocks
  EXPECT_EQ(env.state().pose.col, 6);
  EXPECT_FALSE(env.state().pose.door_open);

  env.step(kActToggle);
  EXPECT_TRUE(env.state().pose.door_open);

  env.step(kActForward);
  EXPECT_EQ(env.state().pose.col, 7);  // standing in the doorway
  env.step(kActForward);
  EXPECT_EQ(env.state().pose.col, 8);
}

TEST(KeyDoorMechanics, ToggleWithoutKeyDoesNothing) {
  GridEnv env(EnvId::keyworld14);
  env.reset();
  // Straight to (6,6) facing east without picking up the key.
  for (int a : {kActRight, kActForward, kActForward, kActForward, kActForward, kActForward,
                kActLeft, kActForward, kActForward, kActForward, kActForward, kActForward})
    env.step(a);
  EXPECT_EQ(env.state().pose.row, 6);
  EXPECT_EQ(env.state().pose.col, 6);
  env.step(kActToggle);
  EXPECT_FALSE(env.state().pose.door_open);
  env.step(kActForward);
  EXPECT_EQ(env.state().pose.col, 6);  // still locked
}

TEST(Observation, ShapeRangeAndAgentMarker) {
  GridEnv env(EnvId::gridworld14);
  Tensor obs = env.reset();
  ASSERT_EQ(obs.shape(), (std::vector<int>{3, 7, 7}));
  for (int i = 0; i < obs.size(); ++i) {
    ASSERT_GE(obs.data()[i], 0.0);
    ASSERT_LE(obs.data()[i], 1.0);
  }
  // Agent at the bottom-center of the view.
  EXPECT_EQ(obs.data()[0 * 49 + 6 * 7 + 3], 1.0);
}

TEST(Observation, EgocentricOrientationFacingEast) {
  GridEnv env(EnvId::gridworld14);
  Tensor obs = env.reset();  // at (1,1) facing east
  auto type_at = [&obs](int vr, int vc) { return obs.data()[vr * 7 + vc]; };
  // One column to the agent's left lies the north border wall (row 0).
  EXPECT_EQ(type_at(6, 2), 0.2);
  // To the right is open floor at (2,1).
  EXPECT_EQ(type_at(6, 4), 0.0);
  // Straight ahead six cells: (1,7), open floor.
  EXPECT_EQ(type_at(0, 3), 0.0);
  // The whole left edge of the view is the wall behind row 0.
  for (int vr = 0; vr < 7; ++vr) EXPECT_EQ(type_at(vr, 0), 0.2) << vr;
}

TEST(Observation, KeyCarryingChangesAgentColorAndRemovesKey) {
  GridEnv env(EnvId::keyworld14);
  env.reset();
  for (int a : {kActRight, kActForward, kActForward, kActLeft, kActForward}) env.step(a);
  // Facing the key at (3,3) from (3,2): the key is one cell ahead.
  Tensor before = env.observe();
  EXPECT_EQ(before.data()[0 * 49 + 5 * 7 + 3], 0.6);  // key type directly ahead
  EXPECT_EQ(before.data()[1 * 49 + 6 * 7 + 3], 0.0);  // agent carries nothing

  env.step(kActPickup);
  Tensor after = env.observe();
  EXPECT_EQ(after.data()[0 * 49 + 5 * 7 + 3], 0.0);   // key gone from the grid
  EXPECT_EQ(after.data()[1 * 49 + 6 * 7 + 3], 0.6);   // carried key shows on the agent
}

TEST(Observation, DoorStateChannelTracksLock) {
  GridEnv env(EnvId::keyworld14);
  env.reset();
  for (int a : {kActRight, kActForward, kActForward, kActLeft, kActForward, kActPickup,
                kActForward, kActForward, kActForward, kActForward, kActRight, kActForward,
                kActForward, kActForward, kActLeft})
    env.step(a);
  ASSERT_EQ(env.state().pose.row, 6);
  ASSERT_EQ(env.state().pose.col, 6);
  Tensor locked = env.observe();
  EXPECT_EQ(locked.data()[0 * 49 + 5 * 7 + 3], 0.4);  // door type ahead
  EXPECT_EQ(locked.data()[2 * 49 + 5 * 7 + 3], 1.0);  // locked
  env.step(kActToggle);
  Tensor open = env.observe();
  EXPECT_EQ(open.data()[2 * 49 + 5 * 7 + 3], 0.0);  // unlocked
}

TEST(ReplayDeterminism, RandomActionStreamsMatchExactly) {
  for (EnvId id : {EnvId::gridworld14, EnvId::keyworld14, EnvId::fourrooms}) {
    const EnvSpec spec = EnvSpec::make(id);
    Rng rng(fnv1a64(to_string(id)));
    for (int trial = 0; trial < 10; ++trial) {
      GridEnv a(spec), b(spec);
      Tensor oa = a.reset(trial), ob = b.reset(trial);
      ASSERT_TRUE(same_bytes(oa, ob));
      for (int t = 0; t < 60 && !a.done(); ++t) {
        const int act = rng.uniform_int(spec.action_count);
        GridEnv::StepResult ra = a.step(act), rb = b.step(act);
        ASSERT_TRUE(same_bytes(ra.obs, rb.obs));
        ASSERT_EQ(ra.reward, rb.reward);
        ASSERT_EQ(ra.done, rb.done);
        // The agent must always stand on walkable ground.
        const char cell =
            grids::effective_cell(spec, a.state().pose, a.state().pose.row, a.state().pose.col);
        ASSERT_NE(cell, '#');
        ASSERT_NE(cell, 'K');
        if (cell == 'D') ASSERT_TRUE(a.state().pose.door_open);
        for (int i = 0; i < ra.obs.size(); ++i) {
          ASSERT_GE(ra.obs.data()[i], 0.0);
          ASSERT_LE(ra.obs.data()[i], 1.0);
        }
      }
    }
  }
}

TEST(RenderAscii, GoldenStartFrames) {
  const std::string grid14 =
      "##############\n"
      "#>...........#\n"
      "#............#\n"
      "#............#\n"
      "#............#\n"
      "#............#\n"
      "#............#\n"
      "#............#\n"
      "#............#\n"
      "#............#\n"
      "#............#\n"
      "#............#\n"
      "#...........G#\n"
      "##############\n"
      "steps=0 carrying=0 door=none\n";
  GridEnv g(EnvId::gridworld14);
  g.reset();
  EXPECT_EQ(g.render_ascii(), grid14);

  const std::string key14 =
      "##############\n"
      "#>.....#.....#\n"
      "#......#.....#\n"
      "#..K...#.....#\n"
      "#......#.....#\n"
      "#......#.....#\n"
      "#......D.....#\n"
      "#......#.....#\n"
      "#......#.....#\n"
      "#......#.....#\n"
      "#......#.....#\n"
      "#......#.....#\n"
      "#......#....G#\n"
      "##############\n"
      "steps=0 carrying=0 door=locked\n";
  GridEnv k(EnvId::keyworld14);
  k.reset();
  EXPECT_EQ(k.render_ascii(), key14);

  const std::string rooms =
      "###############\n"
      "#>.....#......#\n"
      "#......#......#\n"
      "#.............#\n"
      "#......#......#\n"
      "#......#......#\n"
      "#......#......#\n"
      "###.#######.###\n"
      "#......#......#\n"
      "#......#......#\n"
      "#......#......#\n"
      "#.............#\n"
      "#......#......#\n"
      "#......#.....G#\n"
      "###############\n"
      "steps=0 carrying=0 door=none\n";
  GridEnv f(EnvId::fourrooms);
  f.reset();
  EXPECT_EQ(f.render_ascii(), rooms);
}

TEST(BfsExpert, ShortestPlanOnOpenRoom) {
  const EnvSpec spec = EnvSpec::make(EnvId::gridworld14);
  const std::vector<int> plan = bfs_expert_plan(spec);
  EXPECT_EQ(plan.size(), 23u);  // 22 moves plus a single turn is optimal here

  Trajectory traj = bfs_expert(spec, 0);
  EXPECT_TRUE(traj.terminal);
  EXPECT_EQ(traj.actions.size(), 23u);
  EXPECT_EQ(traj.observations.size(), traj.actions.size());
  EXPECT_NEAR(traj.total_return, 1.0 - 0.9 * (23.0 / 192.0), 1e-12);
  EXPECT_GT(traj.total_return, 0.1);
}

TEST(BfsExpert, KeyworldPlanUsesPickupAndToggleOnce) {
  Trajectory traj = bfs_expert(EnvSpec::make(EnvId::keyworld14), 0);
  EXPECT_TRUE(traj.terminal);
  EXPECT_GT(traj.total_return, 0.1);
  EXPECT_EQ(std::count(traj.actions.begin(), traj.actions.end(), kActPickup), 1);
  EXPECT_EQ(std::count(traj.actions.begin(), traj.actions.end(), kActToggle), 1);
}

TEST(BfsExpert, FourroomsReachesTheGoal) {
  Trajectory traj = bfs_expert(EnvSpec::make(EnvId::fourrooms), 0);
  EXPECT_TRUE(traj.terminal);
  EXPECT_GT(traj.total_return, 0.1);
  EXPECT_LT(traj.actions.size(), 60u);
}

TEST(BfsExpert, ReplayReproducesRecordedObservations) {
  for (EnvId id : {EnvId::gridworld14, EnvId::keyworld14, EnvId::fourrooms})
    EXPECT_TRUE(verify_replay(bfs_expert(EnvSpec::make(id), 3))) << to_string(id);
}

TEST(DemoFiles, RoundTripPreservesTrajectory) {
  const std::string path = temp_path("pgfdc_demo_rt.json");
  Trajectory traj = bfs_expert(EnvSpec::make(EnvId::keyworld14), 11);
  save_demo(traj, path);
  Trajectory back = load_demo(path);
  EXPECT_EQ(back.env_id, traj.env_id);
  EXPECT_EQ(back.seed, traj.seed);
  EXPECT_EQ(back.terminal, traj.terminal);
  EXPECT_EQ(back.total_return, traj.total_return);
  EXPECT_EQ(back.layout_hash, traj.layout_hash);
  ASSERT_EQ(back.actions, traj.actions);
  ASSERT_EQ(back.observations.size(), traj.observations.size());
  for (std::size_t i = 0; i < back.observations.size(); ++i)
    EXPECT_TRUE(same_bytes(back.observations[i], traj.observations[i])) << i;
  EXPECT_TRUE(verify_replay(back));
  std::filesystem::remove(path);
}

TEST(DemoFiles, LoaderRejectsBadInput) {
  const std::string path = temp_path("pgfdc_demo_bad.json");

  {  // not JSON at all
    std::ofstream os(path);
    os << "definitely not json {";
  }
  EXPECT_THROW(load_demo(path), std::runtime_error);

  Trajectory traj = bfs_expert(EnvSpec::make(EnvId::gridworld14), 0);
  save_demo(traj, path);

  auto mutate = [&path](const std::function<void(nlohmann::json&)>& fn) {
    std::ifstream is(path);
    nlohmann::json j;
    is >> j;
    fn(j);
    std::ofstream os(path);
    os << j.dump();
  };

  mutate([](nlohmann::json& j) { j["format_version"] = 99; });
  EXPECT_THROW(load_demo(path), std::runtime_error);

  save_demo(traj, path);
  mutate([](nlohmann::json& j) { j["steps"] = nlohmann::json::array(); });
  EXPECT_THROW(load_demo(path), std::runtime_error);

  save_demo(traj, path);
  mutate([](nlohmann::json& j) { j["layout_hash"] = "0000000000000000"; });
  EXPECT_THROW(load_demo(path), std::runtime_error);

  save_demo(traj, path);
  mutate([](nlohmann::json& j) { j["steps"][0]["action"] = 4; });  // outside R^3
  EXPECT_THROW(load_demo(path), std::runtime_error);

  save_demo(traj, path);
  mutate([](nlohmann::json& j) { j["env_id"] = "marsworld"; });
  EXPECT_THROW(load_demo(path), std::runtime_error);

  save_demo(traj, path);
  mutate([](nlohmann::json& j) { j["steps"][0]["obs"][0][0][0] = 2.5; });
  EXPECT_THROW(load_demo(path), std::runtime_error);

  EXPECT_THROW(load_demo(temp_path("pgfdc_demo_missing.json")), std::runtime_error);
  std::filesystem::remove(path);
}
