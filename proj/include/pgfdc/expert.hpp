#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pgfdc/gridworld.hpp"
#include "pgfdc/tensor.hpp"

namespace pgfdc {

// One demonstration episode: the observation seen before each action, plus
// bookkeeping that lets loaders validate the file against the live layout.
struct Trajectory {
  EnvId env_id = EnvId::gridworld14;
  std::uint64_t seed = 0;
  std::vector<Tensor> observations;  // s_t, each 3x7x7
  std::vector<int> actions;          // a_t
  bool terminal = false;
  double total_return = 0.0;
  std::uint64_t layout_hash = 0;

  std::size_t size() const { return actions.size(); }
};

namespace detail {

inline int encode_pose(const EnvSpec& spec, const AgentPose& p) {
  return (((p.row * spec.width + p.col) * 4 + p.heading) * 2 + (p.carrying_key ? 1 : 0)) * 2 +
         (p.door_open ? 1 : 0);
}

}  // namespace detail

// Breadth-first search over (position, heading, carrying, door-open) states
// from an arbitrary start pose, expanding actions in index order; returns a
// minimal-length action plan whose final state satisfies `target`. The plan is
// empty when the start pose already satisfies it.
inline std::vector<int> bfs_plan_from(const EnvSpec& spec, const AgentPose& start,
                                      const std::function<bool(const AgentPose&)>& target) {
  const int state_count = spec.height * spec.width * 4 * 2 * 2;
  std::vector<int> parent_state(static_cast<std::size_t>(state_count), -1);
  std::vector<signed char> parent_action(static_cast<std::size_t>(state_count), -1);
  std::vector<AgentPose> pose_of(static_cast<std::size_t>(state_count));
  std::vector<bool> seen(static_cast<std::size_t>(state_count), false);

  const int s0 = detail::encode_pose(spec, start);
  seen[static_cast<std::size_t>(s0)] = true;
  pose_of[static_cast<std::size_t>(s0)] = start;
  std::deque<int> frontier{s0};
  int goal_state = -1;
  if (target(start)) goal_state = s0;

  while (!frontier.empty() && goal_state < 0) {
    const int cur = frontier.front();
    frontier.pop_front();
    const AgentPose p = pose_of[static_cast<std::size_t>(cur)];
    for (int a = 0; a < spec.action_count; ++a) {
      const AgentPose q = grids::apply_action(spec, p, a);
      const int id = detail::encode_pose(spec, q);
      if (seen[static_cast<std::size_t>(id)]) continue;
      seen[static_cast<std::size_t>(id)] = true;
      pose_of[static_cast<std::size_t>(id)] = q;
      parent_state[static_cast<std::size_t>(id)] = cur;
      parent_action[static_cast<std::size_t>(id)] = static_cast<signed char>(a);
      if (target(q)) {
        goal_state = id;
        break;
      }
      frontier.push_back(id);
    }
  }
  if (goal_state < 0)
    throw std::runtime_error(std::string("no path to the requested cell in ") +
                             to_string(spec.id));

  std::vector<int> plan;
  for (int s = goal_state; s != s0; s = parent_state[static_cast<std::size_t>(s)])
    plan.push_back(parent_action[static_cast<std::size_t>(s)]);
  std::reverse(plan.begin(), plan.end());
  return plan;
}

// Minimal-length plan from the environment's start pose onto the goal cell.
inline std::vector<int> bfs_expert_plan(const EnvSpec& spec) {
  const AgentPose start{spec.start_row, spec.start_col, spec.start_heading, false, false};
  return bfs_plan_from(spec, start, [&spec](const AgentPose& p) {
    return grids::raw_cell(spec, p.row, p.col) == 'G';
  });
}

namespace detail {

// Executes a planned action sequence from reset and records the episode.
inline Trajectory run_plan(const EnvSpec& spec, const std::vector<int>& plan,
                           std::uint64_t seed) {
  GridEnv env(spec);
  Trajectory traj;
  traj.env_id = spec.id;
  traj.seed = seed;
  traj.layout_hash = spec.layout_hash();
  Tensor obs = env.reset(seed);
  for (int a : plan) {
    traj.observations.push_back(obs);
    traj.actions.push_back(a);
    GridEnv::StepResult r = env.step(a);
    traj.total_return += r.reward;
    obs = r.obs;
    if (r.done) break;
  }
  traj.terminal = env.done();
  return traj;
}

}  // namespace detail

// Executes the planned actions and records the demonstration.
inline Trajectory bfs_expert(const EnvSpec& spec, std::uint64_t seed = 0) {
  Trajectory traj = detail::run_plan(spec, bfs_expert_plan(spec), seed);
  if (!traj.terminal || traj.total_return <= 0.0)
    throw std::runtime_error(std::string("scripted expert failed to reach the goal in ") +
                             to_string(spec.id));
  return traj;
}

// Fixed detour cell used by the second demonstration variant for each layout.
// Chosen off every minimal start-to-goal route so the two demonstrations take
// visibly different paths.
inline std::pair<int, int> second_demo_waypoint(EnvId id) {
  switch (id) {
    case EnvId::gridworld14: return {12, 1};
    case EnvId::keyworld14: return {12, 1};
    case EnvId::fourrooms: return {13, 1};
  }
  throw std::invalid_argument("unknown environment id");
}

// A second scripted demonstration: the shortest plan that first touches the
// given waypoint cell and then continues to the goal. Produces a successful
// but suboptimal episode that differs from the direct bfs_expert route.
inline Trajectory bfs_expert_via_waypoint(const EnvSpec& spec, int waypoint_row,
                                          int waypoint_col, std::uint64_t seed = 0) {
  if (waypoint_row < 0 || waypoint_row >= spec.height || waypoint_col < 0 ||
      waypoint_col >= spec.width || grids::raw_cell(spec, waypoint_row, waypoint_col) == '#')
    throw std::invalid_argument("waypoint (" + std::to_string(waypoint_row) + "," +
                                std::to_string(waypoint_col) + ") is not a reachable cell in " +
                                to_string(spec.id));
  const AgentPose start{spec.start_row, spec.start_col, spec.start_heading, false, false};
  std::vector<int> plan = bfs_plan_from(spec, start, [&](const AgentPose& p) {
    return p.row == waypoint_row && p.col == waypoint_col;
  });
  AgentPose mid = start;
  for (int a : plan) mid = grids::apply_action(spec, mid, a);
  const std::vector<int> tail = bfs_plan_from(spec, mid, [&spec](const AgentPose& p) {
    return grids::raw_cell(spec, p.row, p.col) == 'G';
  });
  plan.insert(plan.end(), tail.begin(), tail.end());
  Trajectory traj = detail::run_plan(spec, plan, seed);
  if (!traj.terminal || traj.total_return <= 0.0)
    throw std::runtime_error(std::string("waypoint expert failed to reach the goal in ") +
                             to_string(spec.id));
  return traj;
}

// variant 1: direct shortest demonstration. variant 2: detour through the
// layout's fixed waypoint.
inline Trajectory scripted_demo(const EnvSpec& spec, int variant, std::uint64_t seed = 0) {
  if (variant == 1) return bfs_expert(spec, seed);
  if (variant == 2) {
    const auto [r, c] = second_demo_waypoint(spec.id);
    return bfs_expert_via_waypoint(spec, r, c, seed);
  }
  throw std::invalid_argument("demo variant must be 1 or 2, got " + std::to_string(variant));
}

// Runs the trajectory's actions from reset and checks that observations,
// termination, and return match what the file recorded.
inline bool verify_replay(const Trajectory& traj) {
  GridEnv env(EnvSpec::make(traj.env_id));
  Tensor obs = env.reset(traj.seed);
  double ret = 0.0;
  for (std::size_t t = 0; t < traj.actions.size(); ++t) {
    const Tensor& want = traj.observations[t];
    if (!want.same_shape(obs)) return false;
    for (int i = 0; i < obs.size(); ++i)
      if (obs.data()[i] != want.data()[i]) return false;
    if (env.done()) return false;
    GridEnv::StepResult r = env.step(traj.actions[t]);
    ret += r.reward;
    obs = r.obs;
  }
  return env.done() == traj.terminal && std::abs(ret - traj.total_return) < 1e-12;
}

inline constexpr int kDemoFormatVersion = 1;

inline void save_demo(const Trajectory& traj, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kDemoFormatVersion;
  j["env_id"] = to_string(traj.env_id);
  j["seed"] = traj.seed;
  j["layout_hash"] = hex64(traj.layout_hash);
  j["terminal"] = traj.terminal;
  j["total_return"] = traj.total_return;
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t t = 0; t < traj.actions.size(); ++t) {
    const Tensor& obs = traj.observations[t];
    nlohmann::json chans = nlohmann::json::array();
    for (int c = 0; c < 3; ++c) {
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < 7; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < 7; ++k) row.push_back(obs.data()[(c * 7 + r) * 7 + k]);
        rows.push_back(std::move(row));
      }
      chans.push_back(std::move(rows));
    }
    steps.push_back({{"obs", std::move(chans)}, {"action", traj.actions[t]}});
  }
  j["steps"] = std::move(steps);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(1) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline Trajectory load_demo(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open demo file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("demo file " + path + " is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kDemoFormatVersion)
      throw std::runtime_error("demo file " + path + " has unsupported format_version " +
                               j.at("format_version").dump());
    Trajectory traj;
    try {
      traj.env_id = env_id_from_string(j.at("env_id").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("demo file " + path + ": " + e.what());
    }
    traj.seed = j.at("seed").get<std::uint64_t>();
    traj.terminal = j.at("terminal").get<bool>();
    traj.total_return = j.at("total_return").get<double>();

    const EnvSpec spec = EnvSpec::make(traj.env_id);
    traj.layout_hash = spec.layout_hash();
    if (j.at("layout_hash").get<std::string>() != hex64(traj.layout_hash))
      throw std::runtime_error("demo file " + path + " was recorded on a different " +
                               to_string(traj.env_id) + " layout (hash mismatch)");

    const auto& steps = j.at("steps");
    if (!steps.is_array() || steps.empty())
      throw std::runtime_error("demo file " + path + " contains no steps");
    for (const auto& s : steps) {
      const int action = s.at("action").get<int>();
      if (action < 0 || action >= spec.action_count)
        throw std::runtime_error("demo file " + path + " has action " + std::to_string(action) +
                                 " outside the " + to_string(traj.env_id) + " action space");
      const auto& chans = s.at("obs");
      Tensor obs = Tensor::zeros({3, 7, 7});
      if (!chans.is_array() || chans.size() != 3)
        throw std::runtime_error("demo file " + path + " has a malformed observation");
      for (int c = 0; c < 3; ++c) {
        const auto& rows = chans[static_cast<std::size_t>(c)];
        if (!rows.is_array() || rows.size() != 7)
          throw std::runtime_error("demo file " + path + " has a malformed observation");
        for (int r = 0; r < 7; ++r) {
          const auto& row = rows[static_cast<std::size_t>(r)];
          if (!row.is_array() || row.size() != 7)
            throw std::runtime_error("demo file " + path + " has a malformed observation");
          for (int k = 0; k < 7; ++k) {
            const double v = row[static_cast<std::size_t>(k)].get<double>();
            if (!(v >= 0.0 && v <= 1.0))
              throw std::runtime_error("demo file " + path + " has observation value " +
                                       std::to_string(v) + " outside [0,1]");
            obs.data()[(c * 7 + r) * 7 + k] = v;
          }
        }
      }
      traj.observations.push_back(std::move(obs));
      traj.actions.push_back(action);
    }
    return traj;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("demo file " + path + " is missing required fields: " + e.what());
  }
}

}  // namespace pgfdc
