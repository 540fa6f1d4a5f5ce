#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pgfdc/checkpoint.hpp"
#include "pgfdc/expert.hpp"
#include "pgfdc/gridworld.hpp"
#include "pgfdc/hash.hpp"
#include "pgfdc/models.hpp"
#include "pgfdc/rlcore.hpp"
#include "pgfdc/rng.hpp"

namespace pgfdc {

// A behaviour under evaluation: picks the next action for an observation,
// drawing any randomness from the supplied stream.
using ActionFn = std::function<int(const Tensor& obs, Rng& rng)>;

// Stochastic execution of a policy network: actions are sampled from the
// network's action distribution, never argmaxed.
inline ActionFn sampling_policy(const PolicyNet& policy) {
  return [&policy](const Tensor& obs, Rng& rng) {
    const PolicyNet::Out out = policy.forward(nullptr, stack({obs}));
    return sample_from_row(out.probs, 0, rng.uniform());
  };
}

// Uniform-random behaviour over the action space.
inline ActionFn uniform_policy(int action_count) {
  if (action_count < 1) throw std::invalid_argument("action_count must be positive");
  return [action_count](const Tensor&, Rng& rng) { return rng.uniform_int(action_count); };
}

// One episode from reset to termination (the environment's step cap bounds
// the loop). Optionally keeps the visited state-action pairs.
struct EpisodeTrace {
  double ret = 0.0;
  int steps = 0;
  std::vector<Tensor> observations;
  std::vector<int> actions;
};

inline EpisodeTrace play_episode(GridEnv& env, const ActionFn& act, Rng& rng,
                                 bool keep_pairs = false) {
  EpisodeTrace tr;
  Tensor obs = env.reset();
  while (!env.done()) {
    const int a = act(obs, rng);
    if (keep_pairs) {
      tr.observations.push_back(obs);
      tr.actions.push_back(a);
    }
    const GridEnv::StepResult r = env.step(a);
    tr.ret += r.reward;
    obs = r.obs;
    ++tr.steps;
  }
  return tr;
}

// Aggregate over `seeds` independent evaluation streams of `episodes`
// episodes each. Returns are extrinsic-only; mean and std are taken over all
// seeds*episodes entries (population std). per_episode_returns is seed-major:
// entry s*episodes+e is episode e of stream s.
struct EvalReport {
  EnvId env_id = EnvId::gridworld14;
  std::string checkpoint_hash;  // content hash when evaluated from a file; empty otherwise
  int seeds = 0;
  int episodes = 0;
  std::vector<double> per_episode_returns;
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> mean_disc_score;

  nlohmann::json to_json() const {
    nlohmann::json j{{"env_id", to_string(env_id)},
                     {"checkpoint_hash", checkpoint_hash},
                     {"seeds", seeds},
                     {"episodes", episodes},
                     {"per_episode_returns", per_episode_returns},
                     {"mean", mean},
                     {"std", stddev}};
    if (mean_disc_score) j["mean_disc_score"] = *mean_disc_score;
    return j;
  }

  static EvalReport from_json(const nlohmann::json& j) {
    EvalReport r;
    r.env_id = env_id_from_string(j.at("env_id").get<std::string>());
    r.checkpoint_hash = j.at("checkpoint_hash").get<std::string>();
    r.seeds = j.at("seeds").get<int>();
    r.episodes = j.at("episodes").get<int>();
    r.per_episode_returns = j.at("per_episode_returns").get<std::vector<double>>();
    r.mean = j.at("mean").get<double>();
    r.stddev = j.at("std").get<double>();
    if (j.contains("mean_disc_score")) r.mean_disc_score = j.at("mean_disc_score").get<double>();
    if (r.per_episode_returns.size() !=
        static_cast<std::size_t>(r.seeds) * static_cast<std::size_t>(r.episodes))
      throw std::runtime_error("evaluation report lists " +
                               std::to_string(r.per_episode_returns.size()) + " returns for " +
                               std::to_string(r.seeds) + " seeds x " +
                               std::to_string(r.episodes) + " episodes");
    return r;
  }
};

namespace detail_eval {

inline void finalize_stats(EvalReport& r) {
  const std::size_t want =
      static_cast<std::size_t>(r.seeds) * static_cast<std::size_t>(r.episodes);
  if (r.per_episode_returns.size() != want)
    throw std::logic_error("evaluation produced " + std::to_string(r.per_episode_returns.size()) +
                           " episodes, expected " + std::to_string(want));
  double sum = 0.0;
  for (double v : r.per_episode_returns) sum += v;
  r.mean = sum / static_cast<double>(want);
  double sq = 0.0;
  for (double v : r.per_episode_returns) sq += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(sq / static_cast<double>(want));
}

// Per-seed stream derived only from (base_seed, seed index), independent of
// evaluation order, so episodes could be farmed out per seed without changing
// any number.
inline Rng seed_stream(std::uint64_t base_seed, int s) {
  return Rng(base_seed).split(static_cast<std::uint64_t>(s));
}

}  // namespace detail_eval

// Runs the evaluation protocol: for each seed stream, `episodes` episodes
// sampled stochastically; extrinsic returns only.
inline EvalReport evaluate_policy(const ActionFn& act, EnvId env_id, int seeds = 10,
                                  int episodes = 10, std::uint64_t base_seed = 0) {
  if (seeds < 1) throw std::invalid_argument("evaluation needs at least one seed");
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode per seed");
  EvalReport rep;
  rep.env_id = env_id;
  rep.seeds = seeds;
  rep.episodes = episodes;
  rep.per_episode_returns.reserve(static_cast<std::size_t>(seeds) *
                                  static_cast<std::size_t>(episodes));
  const EnvSpec spec = EnvSpec::make(env_id);
  for (int s = 0; s < seeds; ++s) {
    Rng stream = detail_eval::seed_stream(base_seed, s);
    GridEnv env(spec);
    for (int e = 0; e < episodes; ++e)
      rep.per_episode_returns.push_back(play_episode(env, act, stream).ret);
  }
  detail_eval::finalize_stats(rep);
  return rep;
}

inline EvalReport evaluate_policy(const PolicyNet& policy, EnvId env_id, int seeds = 10,
                                  int episodes = 10, std::uint64_t base_seed = 0) {
  return evaluate_policy(sampling_policy(policy), env_id, seeds, episodes, base_seed);
}

// Environment tag stored in checkpoints produced by the trainer; absent for
// hand-assembled parameter maps.
inline std::optional<EnvId> checkpoint_env(const ParamMap& params) {
  const auto it = params.find("meta/env");
  if (it == params.end()) return std::nullopt;
  const double raw = it->second.data()[0];
  const int v = static_cast<int>(raw);
  if (raw != static_cast<double>(v) || v < 0 || v > 2)
    throw std::runtime_error("checkpoint carries an unrecognized environment tag");
  return static_cast<EnvId>(v);
}

inline void check_checkpoint_env(const ParamMap& params, EnvId want, const std::string& what) {
  const std::optional<EnvId> got = checkpoint_env(params);
  if (got && *got != want)
    throw std::runtime_error(what + " was trained on " + to_string(*got) +
                             " but evaluation targets " + to_string(want));
}

inline PolicyNet policy_from_params(const ParamMap& params, int action_count) {
  Rng rng(0);
  PolicyNet net(action_count, rng);
  net.load(params);
  return net;
}

inline DiscriminatorNet discriminator_from_params(const ParamMap& params, int action_count) {
  Rng rng(0);
  DiscriminatorNet net(action_count, rng);
  net.load(params);
  return net;
}

// Loads a checkpoint file, validates it against the target environment, and
// runs the evaluation protocol; the report records the file's content hash.
inline EvalReport evaluate_checkpoint(const std::string& checkpoint_path, EnvId env_id,
                                      int seeds = 10, int episodes = 10,
                                      std::uint64_t base_seed = 0) {
  const ParamMap params = load_checkpoint(checkpoint_path);
  check_checkpoint_env(params, env_id, "checkpoint " + checkpoint_path);
  const EnvSpec spec = EnvSpec::make(env_id);
  const PolicyNet net = policy_from_params(params, spec.action_count);
  EvalReport rep = evaluate_policy(net, env_id, seeds, episodes, base_seed);
  rep.checkpoint_hash = hex64(hash_file(checkpoint_path));
  return rep;
}

namespace detail_eval {

// Sum of raw discriminator outputs over the given pairs, evaluated in
// batches; returns {sum, count}.
inline std::pair<double, std::size_t> disc_output_sum(const DiscriminatorNet& disc,
                                                      const std::vector<Tensor>& obs,
                                                      const std::vector<int>& actions) {
  if (obs.size() != actions.size())
    throw std::invalid_argument("discriminator scoring: " + std::to_string(obs.size()) +
                                " observations vs " + std::to_string(actions.size()) + " actions");
  double sum = 0.0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t i = 0; i < obs.size(); i += kChunk) {
    const std::size_t m = std::min(kChunk, obs.size() - i);
    const std::vector<Tensor> window(obs.begin() + static_cast<std::ptrdiff_t>(i),
                                     obs.begin() + static_cast<std::ptrdiff_t>(i + m));
    const std::vector<int> acts(actions.begin() + static_cast<std::ptrdiff_t>(i),
                                actions.begin() + static_cast<std::ptrdiff_t>(i + m));
    const DiscriminatorNet::Out out = disc.forward(nullptr, stack(window), acts);
    for (std::size_t k = 0; k < m; ++k) sum += out.d.data()[k];
  }
  return {sum, obs.size()};
}

}  // namespace detail_eval

// Mean raw discriminator output D(s,a) over a fixed set of pairs.
inline double discriminator_score_pairs(const DiscriminatorNet& disc,
                                        const std::vector<Tensor>& obs,
                                        const std::vector<int>& actions) {
  if (obs.empty()) throw std::invalid_argument("discriminator scoring needs at least one pair");
  const auto [sum, n] = detail_eval::disc_output_sum(disc, obs, actions);
  return sum / static_cast<double>(n);
}

// Scores a stored trajectory (e.g. a demonstration) pair by pair.
inline double discriminator_score_trajectory(const DiscriminatorNet& disc,
                                             const Trajectory& traj) {
  return discriminator_score_pairs(disc, traj.observations, traj.actions);
}

// Rolls out fresh episodes with the given behaviour (same seed-stream
// protocol as evaluate_policy) and averages D(s,a) over every visited pair.
inline double discriminator_score_policy(const DiscriminatorNet& disc, const ActionFn& act,
                                         EnvId env_id, int seeds = 10, int episodes = 10,
                                         std::uint64_t base_seed = 0) {
  if (seeds < 1 || episodes < 1)
    throw std::invalid_argument("discriminator scoring needs at least one seed and episode");
  const EnvSpec spec = EnvSpec::make(env_id);
  double sum = 0.0;
  std::size_t count = 0;
  for (int s = 0; s < seeds; ++s) {
    Rng stream = detail_eval::seed_stream(base_seed, s);
    GridEnv env(spec);
    for (int e = 0; e < episodes; ++e) {
      const EpisodeTrace tr = play_episode(env, act, stream, /*keep_pairs=*/true);
      const auto [s_sum, s_n] = detail_eval::disc_output_sum(disc, tr.observations, tr.actions);
      sum += s_sum;
      count += s_n;
    }
  }
  if (count == 0) throw std::runtime_error("discriminator scoring visited no state-action pairs");
  return sum / static_cast<double>(count);
}

inline double discriminator_score_policy(const DiscriminatorNet& disc, const PolicyNet& policy,
                                         EnvId env_id, int seeds = 10, int episodes = 10,
                                         std::uint64_t base_seed = 0) {
  return discriminator_score_policy(disc, sampling_policy(policy), env_id, seeds, episodes,
                                    base_seed);
}

inline void save_eval_report(const EvalReport& rep, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << rep.to_json().dump(1) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline EvalReport load_eval_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open evaluation report: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("evaluation report " + path + " is not valid JSON: " + e.what());
  }
  try {
    return EvalReport::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("evaluation report " + path + " is missing required fields: " +
                             e.what());
  }
}

}  // namespace pgfdc
