#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pgfdc/adam.hpp"
#include "pgfdc/checkpoint.hpp"
#include "pgfdc/expert.hpp"
#include "pgfdc/gridworld.hpp"
#include "pgfdc/hash.hpp"
#include "pgfdc/intrinsic.hpp"
#include "pgfdc/metrics.hpp"
#include "pgfdc/models.hpp"
#include "pgfdc/rlcore.hpp"
#include "pgfdc/rng.hpp"
#include "pgfdc/snapshot.hpp"

namespace pgfdc {

enum class Algo { pgfdc, ppo, a2c, icm_only, random };

inline const char* to_string(Algo a) {
  switch (a) {
    case Algo::pgfdc: return "pgfdc";
    case Algo::ppo: return "ppo";
    case Algo::a2c: return "a2c";
    case Algo::icm_only: return "icm-only";
    case Algo::random: return "random";
  }
  throw std::invalid_argument("unknown algorithm id");
}

inline Algo algo_from_string(const std::string& s) {
  if (s == "pgfdc") return Algo::pgfdc;
  if (s == "ppo") return Algo::ppo;
  if (s == "a2c") return Algo::a2c;
  if (s == "icm-only") return Algo::icm_only;
  if (s == "random") return Algo::random;
  throw std::invalid_argument("unknown algorithm '" + s +
                              "' (expected pgfdc, ppo, a2c, icm-only, or random)");
}

enum class RunMode { sync, async };

inline const char* to_string(RunMode m) { return m == RunMode::sync ? "sync" : "async"; }

inline RunMode mode_from_string(const std::string& s) {
  if (s == "sync") return RunMode::sync;
  if (s == "async") return RunMode::async;
  throw std::invalid_argument("unknown mode '" + s + "' (expected sync or async)");
}

// Everything a training run needs. Weight defaults match the default
// environment; construction from JSON re-derives them for the configured one.
struct TrainConfig {
  EnvId env = EnvId::gridworld14;
  Algo algo = Algo::pgfdc;
  RunMode mode = RunMode::sync;
  std::string demo_path;  // demonstration file: required by pgfdc, rejected by icm-only
  std::string out_dir;
  PpoHyper ppo;
  RewardWeights weights = RewardWeights::defaults_for(EnvId::gridworld14);
  int horizon = 2048;
  int iterations = 460;
  std::uint64_t seed = 0;
  int disc_steps = 5;       // discriminator updates per outer iteration
  int curiosity_steps = 5;  // curiosity updates per outer iteration
  std::size_t replay_capacity = 50000;
  bool lockstep = false;    // async only: force workers to alternate deterministically
  int async_jitter_us = 0;  // async only: random pre-phase sleep for scheduling stress

  void validate() const {
    ppo.validate();
    weights.validate();
    if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (disc_steps < 1 || curiosity_steps < 1)
      throw std::invalid_argument("per-iteration update step counts must be at least 1");
    if (replay_capacity < 1) throw std::invalid_argument("replay capacity must be positive");
    if (async_jitter_us < 0) throw std::invalid_argument("scheduling jitter must be nonnegative");
    if (out_dir.empty()) throw std::invalid_argument("an output directory is required");
    if (algo == Algo::pgfdc && demo_path.empty())
      throw std::invalid_argument("pgfdc requires a demonstration file");
    if (algo == Algo::icm_only && !demo_path.empty())
      throw std::invalid_argument(
          "icm-only trains without demonstration data; remove the demo file");
  }
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  std::string metrics_path;
  std::string checkpoint_path;
  std::string manifest_path;
};

inline constexpr int kCuriosityBatchSize = 128;
inline constexpr double kDiscriminatorLr = 1e-3;
inline constexpr double kCuriosityLr = 1e-3;

// What one rollout-and-update phase produced, for the metrics row.
struct RolloutPhaseOutcome {
  double mean_return = 0.0;  // extrinsic-only, over episodes finished this phase
  double mean_r_d = 0.0;
  double mean_r_c = 0.0;
  int episodes_finished = 0;
  UpdateStats update;
};

// Owns all training state and exposes the four phases of one outer iteration:
//   rollout_phase        collect -> advantages -> policy update -> store into the replay ring
//   discriminator_phase  disc_steps single-step updates on fresh generated samples, publish
//   curiosity_phase      curiosity_steps joint-loss updates, publish
//   refresh_reward       fetch latest snapshots into the reward-view copies
// The rollout always scores rewards with the view copies refreshed at the END
// of the previous iteration, so iteration 0 sees the version-0 parameters.
// Phase methods touch disjoint mutable state (the replay ring and snapshot
// hub are internally synchronized), which is what lets the asynchronous
// drivers run them from different threads; each phase owns a dedicated RNG
// stream so any schedule that preserves phase order reproduces the
// synchronous run bit-for-bit.
class TrainerCore {
 public:
  explicit TrainerCore(const TrainConfig& cfg)
      : cfg_(validated(cfg)),
        spec_(EnvSpec::make(cfg_.env)),
        env_(spec_),
        replay_(cfg_.replay_capacity),
        rng_rollout_(0),
        rng_policy_(0),
        rng_disc_(0),
        rng_curiosity_(0) {
    w_ = cfg_.weights;
    if (!uses_discriminator()) w_.lambda_d = 0.0;
    if (!uses_curiosity()) w_.lambda_c = 0.0;

    Rng root(cfg_.seed);
    Rng init_rng = root.split("init");
    rng_rollout_ = root.split("rollout");
    rng_policy_ = root.split("policy-update");
    rng_disc_ = root.split("discriminator-update");
    rng_curiosity_ = root.split("curiosity-update");

    {
      Rng r = init_rng.split("policy");
      policy_.emplace(spec_.action_count, r);
    }
    if (cfg_.algo == Algo::random) {
      // A zeroed action head makes the softmax exactly uniform; with updates
      // skipped, the run is the uniform-random baseline.
      ParamMap v = policy_->named_view();
      for (const char* name : {"policy/actor_out.w", "policy/actor_out.b"}) {
        Tensor t = v.at(name);
        for (int i = 0; i < t.size(); ++i) t.data()[i] = 0.0;
      }
    }
    opt_policy_.emplace(policy_->params(), AdamConfig{cfg_.ppo.lr});

    if (uses_discriminator()) {
      Rng r = init_rng.split("discriminator");
      disc_.emplace(spec_.action_count, r);
      opt_disc_.emplace(disc_->params(), AdamConfig{kDiscriminatorLr});
      Rng rv = init_rng.split("discriminator-view");
      view_disc_.emplace(spec_.action_count, rv);
      hub_.init(SnapshotKind::discriminator, disc_->named_clone());
    }
    if (uses_curiosity()) {
      Rng r = init_rng.split("curiosity");
      curiosity_.emplace(spec_.action_count, r);
      opt_curiosity_.emplace(curiosity_->params(), AdamConfig{kCuriosityLr});
      Rng rv = init_rng.split("curiosity-view");
      view_curiosity_.emplace(spec_.action_count, rv);
      hub_.init(SnapshotKind::curiosity, curiosity_->named_clone());
    }
    refresh_reward();  // version-0 parameters become the initial reward view

    if (uses_discriminator()) {
      Trajectory demo = load_demo(cfg_.demo_path);
      if (demo.env_id != cfg_.env)
        throw std::runtime_error(std::string("demonstration was recorded on ") +
                                 to_string(demo.env_id) + " but training targets " +
                                 to_string(cfg_.env));
      if (!verify_replay(demo))
        throw std::runtime_error("demonstration file does not replay cleanly: " + cfg_.demo_path);
      expert_pairs_.reserve(demo.size());
      for (std::size_t t = 0; t < demo.size(); ++t)
        expert_pairs_.push_back(LabeledPair{demo.observations[t], demo.actions[t], 1});
    }
  }

  bool uses_discriminator() const { return cfg_.algo == Algo::pgfdc; }
  bool uses_curiosity() const {
    return cfg_.algo == Algo::pgfdc || cfg_.algo == Algo::icm_only;
  }

  RolloutPhaseOutcome rollout_phase() {
    RolloutPhaseOutcome out;
    RolloutBatch batch = collect_rollout(env_, *policy_, make_intrinsic_fn(), w_.lambda_d,
                                         w_.lambda_c, cfg_.horizon, rng_rollout_);
    compute_gae(batch, cfg_.ppo.gamma, cfg_.ppo.lambda_gae);
    switch (cfg_.algo) {
      case Algo::a2c:
        out.update = a2c_update(*policy_, *opt_policy_, batch, cfg_.ppo, rng_policy_);
        break;
      case Algo::random:
        break;  // the baseline never learns
      default:
        out.update = ppo_update(*policy_, *opt_policy_, batch, cfg_.ppo, rng_policy_);
        break;
    }
    if (uses_discriminator() || uses_curiosity())
      for (const Transition& tr : batch.steps)
        replay_.push(ReplayTuple{tr.obs, tr.action, tr.obs_next});
    env_steps_ += cfg_.horizon;

    double sum_d = 0.0, sum_c = 0.0, finished_sum = 0.0;
    for (const Transition& tr : batch.steps) {
      sum_d += tr.r_d;
      sum_c += tr.r_c;
      episode_acc_ += tr.r_e;
      if (tr.done) {
        out.episodes_finished += 1;
        finished_sum += episode_acc_;
        episode_acc_ = 0.0;
      }
    }
    const double n = static_cast<double>(batch.steps.size());
    out.mean_r_d = sum_d / n;
    out.mean_r_c = sum_c / n;
    out.mean_return = out.episodes_finished > 0
                          ? finished_sum / static_cast<double>(out.episodes_finished)
                          : 0.0;
    return out;
  }

  // Balanced classes: each step pits the full demonstration against an
  // equally sized uniform sample of generated pairs.
  double discriminator_phase() {
    if (!uses_discriminator())
      throw std::logic_error("this algorithm trains no discriminator");
    const int n = static_cast<int>(expert_pairs_.size());
    double last = 0.0;
    for (int s = 0; s < cfg_.disc_steps; ++s) {
      std::vector<ReplayTuple> tuples = replay_.sample(n, rng_disc_);
      std::vector<LabeledPair> gen;
      gen.reserve(tuples.size());
      for (const ReplayTuple& t : tuples) gen.push_back(LabeledPair{t.obs, t.action, 0});
      last = update_discriminator(*disc_, *opt_disc_, expert_pairs_, gen, 1, w_.eps_d).back();
    }
    hub_.publish(SnapshotKind::discriminator, disc_->named_clone(), {last});
    return last;
  }

  std::pair<double, double> curiosity_phase() {
    if (!uses_curiosity()) throw std::logic_error("this algorithm trains no curiosity model");
    double last_ei = 0.0, last_f = 0.0;
    for (int s = 0; s < cfg_.curiosity_steps; ++s) {
      std::vector<ReplayTuple> batch = replay_.sample(kCuriosityBatchSize, rng_curiosity_);
      CuriosityCurves curves = update_curiosity(*curiosity_, *opt_curiosity_, batch, 1, w_.beta);
      last_ei = curves.l_ei.back();
      last_f = curves.l_f.back();
    }
    hub_.publish(SnapshotKind::curiosity, curiosity_->named_clone(), {last_ei, last_f});
    return {last_ei, last_f};
  }

  void refresh_reward() {
    if (view_disc_) {
      auto snap = hub_.fetch(SnapshotKind::discriminator);
      if (snap->version < last_disc_version_)
        throw std::logic_error("discriminator snapshot version went backwards");
      view_disc_->load(snap->params);
      last_disc_version_ = snap->version;
      last_disc_stats_ = snap->stats;
    }
    if (view_curiosity_) {
      auto snap = hub_.fetch(SnapshotKind::curiosity);
      if (snap->version < last_curiosity_version_)
        throw std::logic_error("curiosity snapshot version went backwards");
      view_curiosity_->load(snap->params);
      last_curiosity_version_ = snap->version;
      last_curiosity_stats_ = snap->stats;
    }
  }

  MetricsRow make_row(int iteration, const RolloutPhaseOutcome& out) const {
    MetricsRow r;
    r.iteration = iteration;
    r.env_steps = env_steps_;
    r.mean_return = out.mean_return;
    r.mean_r_d = out.mean_r_d;
    r.mean_r_c = out.mean_r_c;
    r.ppo_policy_loss = out.update.policy_loss;
    r.ppo_value_loss = out.update.value_loss;
    r.entropy = out.update.entropy;
    r.disc_objective = last_disc_stats_.empty() ? 0.0 : last_disc_stats_[0];
    r.l_ei = last_curiosity_stats_.empty() ? 0.0 : last_curiosity_stats_[0];
    r.l_f = last_curiosity_stats_.size() > 1 ? last_curiosity_stats_[1] : 0.0;
    return r;
  }

  // Single file: every network of the run plus metadata the evaluators use
  // for compatibility checks. Name prefixes keep the groups disjoint.
  ParamMap checkpoint_params() const {
    ParamMap all = policy_->named_clone();
    if (disc_) all.merge(disc_->named_clone());
    if (curiosity_) all.merge(curiosity_->named_clone());
    auto meta = [&all](const char* name, double v) {
      Tensor t = Tensor::zeros({1});
      t.data()[0] = v;
      all[name] = t;
    };
    meta("meta/env", static_cast<double>(static_cast<int>(cfg_.env)));
    meta("meta/algo", static_cast<double>(static_cast<int>(cfg_.algo)));
    meta("meta/action_count", static_cast<double>(spec_.action_count));
    return all;
  }

  const TrainConfig& config() const { return cfg_; }
  const EnvSpec& spec() const { return spec_; }
  const RewardWeights& effective_weights() const { return w_; }
  long long env_steps() const { return env_steps_; }
  std::uint64_t last_disc_version() const { return last_disc_version_; }
  std::uint64_t last_curiosity_version() const { return last_curiosity_version_; }
  std::size_t demo_size() const { return expert_pairs_.size(); }
  ReplayBufferG& replay() { return replay_; }
  PolicyNet& policy() { return *policy_; }
  DiscriminatorNet* discriminator() { return disc_ ? &*disc_ : nullptr; }
  CuriosityNets* curiosity() { return curiosity_ ? &*curiosity_ : nullptr; }

 private:
  static TrainConfig validated(TrainConfig c) {
    c.validate();
    return c;
  }

  IntrinsicRewardFn make_intrinsic_fn() {
    if (!view_disc_ && !view_curiosity_) return IntrinsicRewardFn();
    return [this](const std::vector<Transition>& steps) {
      std::vector<Tensor> obs, obs_next;
      std::vector<int> actions;
      obs.reserve(steps.size());
      obs_next.reserve(steps.size());
      actions.reserve(steps.size());
      for (const Transition& tr : steps) {
        obs.push_back(tr.obs);
        actions.push_back(tr.action);
        obs_next.push_back(tr.obs_next);
      }
      IntrinsicBatchRewards out;
      out.r_d = view_disc_ ? demonstration_rewards(*view_disc_, obs, actions, w_.eps_d)
                           : std::vector<double>(steps.size(), 0.0);
      out.r_c = view_curiosity_ ? curiosity_rewards(*view_curiosity_, obs, actions, obs_next)
                                : std::vector<double>(steps.size(), 0.0);
      return out;
    };
  }

  TrainConfig cfg_;
  EnvSpec spec_;
  GridEnv env_;
  ReplayBufferG replay_;
  RewardWeights w_;  // configured weights with algorithm-disabled channels zeroed
  Rng rng_rollout_, rng_policy_, rng_disc_, rng_curiosity_;
  std::optional<PolicyNet> policy_;
  std::optional<Adam> opt_policy_;
  std::optional<DiscriminatorNet> disc_;
  std::optional<Adam> opt_disc_;
  std::optional<CuriosityNets> curiosity_;
  std::optional<Adam> opt_curiosity_;
  std::optional<DiscriminatorNet> view_disc_;    // reward-scoring copies; only
  std::optional<CuriosityNets> view_curiosity_;  // refresh_reward writes them
  SnapshotHub hub_;
  std::vector<LabeledPair> expert_pairs_;
  std::vector<double> last_disc_stats_, last_curiosity_stats_;
  std::uint64_t last_disc_version_ = 0, last_curiosity_version_ = 0;
  double episode_acc_ = 0.0;  // extrinsic return of the episode in progress
  long long env_steps_ = 0;
};

// One thread runs the four phases in order; this is the reference schedule
// every other driver must reproduce.
inline std::vector<MetricsRow> run_sync_loop(TrainerCore& core) {
  const TrainConfig& cfg = core.config();
  std::vector<MetricsRow> rows;
  rows.reserve(static_cast<std::size_t>(cfg.iterations));
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < cfg.iterations; ++k) {
    try {
      RolloutPhaseOutcome out = core.rollout_phase();
      if (core.uses_discriminator()) core.discriminator_phase();
      if (core.uses_curiosity()) core.curiosity_phase();
      core.refresh_reward();
      MetricsRow row = core.make_row(k, out);
      row.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(row);
    } catch (const std::exception& e) {
      throw std::runtime_error("training aborted at iteration " + std::to_string(k) + ": " +
                               e.what());
    }
  }
  return rows;
}

// Three workers: the policy worker (rollout + update + metrics), the
// discriminator worker, and the curiosity worker. All cross-worker traffic is
// immutable snapshots through the hub plus the internally synchronized replay
// ring; shutdown is a stop flag honored at phase boundaries. In lockstep a
// global tick serializes the phases into exactly the synchronous order; in
// free-running mode the helpers are paced by a generation counter that the
// policy worker bumps once per rollout, so each helper phase trains on data
// no older than one iteration.
inline std::vector<MetricsRow> run_async_loop(TrainerCore& core) {
  const TrainConfig& cfg = core.config();
  const bool lockstep = cfg.lockstep;
  const bool has_disc = core.uses_discriminator();
  const bool has_cur = core.uses_curiosity();
  const int disc_slot = has_disc ? 1 : -1;
  const int cur_slot = has_cur ? (has_disc ? 2 : 1) : -1;
  const int slots = 2 + (has_disc ? 1 : 0) + (has_cur ? 1 : 0);

  struct State {
    std::mutex mu;
    std::condition_variable cv;
    bool stop = false;
    std::exception_ptr error;
    std::uint64_t generation = 0;  // rollouts completed (free-running pacing)
    std::uint64_t tick = 0;        // lockstep phase counter
  } st;

  auto record_failure = [&st](const std::string& msg) {
    {
      std::lock_guard<std::mutex> lk(st.mu);
      if (!st.error) st.error = std::make_exception_ptr(std::runtime_error(msg));
      st.stop = true;
    }
    st.cv.notify_all();
  };
  auto wait_for_tick = [&st](std::uint64_t want) {
    std::unique_lock<std::mutex> lk(st.mu);
    st.cv.wait(lk, [&st, want] { return st.stop || st.tick == want; });
    return !st.stop;
  };
  auto advance_tick = [&st] {
    {
      std::lock_guard<std::mutex> lk(st.mu);
      ++st.tick;
    }
    st.cv.notify_all();
  };
  auto jitter = [&cfg](Rng& r) {
    if (cfg.async_jitter_us > 0)
      std::this_thread::sleep_for(std::chrono::microseconds(r.uniform_int(cfg.async_jitter_us + 1)));
  };

  // Helper workers: lockstep takes exactly one phase per iteration slot;
  // free-running waits for fresh rollout data, then trains and publishes.
  auto helper_body = [&](const char* who, int slot, Rng jitter_rng, auto&& phase) {
    try {
      if (lockstep) {
        for (int k = 0; k < cfg.iterations; ++k) {
          if (!wait_for_tick(static_cast<std::uint64_t>(k) * slots + slot)) return;
          phase();
          advance_tick();
        }
      } else {
        std::uint64_t seen = 0;
        for (;;) {
          {
            std::unique_lock<std::mutex> lk(st.mu);
            st.cv.wait(lk, [&st, seen] { return st.stop || st.generation > seen; });
            if (st.stop) return;
            seen = st.generation;
          }
          jitter(jitter_rng);
          phase();
        }
      }
    } catch (const std::exception& e) {
      record_failure(std::string(who) + " worker failed: " + e.what());
    } catch (...) {
      record_failure(std::string(who) + " worker failed with an unknown error");
    }
  };

  std::vector<std::thread> helpers;
  if (has_disc)
    helpers.emplace_back(helper_body, "discriminator", disc_slot,
                         Rng(cfg.seed).split("jitter-discriminator"),
                         [&core] { core.discriminator_phase(); });
  if (has_cur)
    helpers.emplace_back(helper_body, "curiosity", cur_slot,
                         Rng(cfg.seed).split("jitter-curiosity"),
                         [&core] { core.curiosity_phase(); });

  // The policy worker runs on the calling thread.
  std::vector<MetricsRow> rows;
  rows.reserve(static_cast<std::size_t>(cfg.iterations));
  const auto t0 = std::chrono::steady_clock::now();
  try {
    for (int k = 0; k < cfg.iterations; ++k) {
      if (lockstep) {
        if (!wait_for_tick(static_cast<std::uint64_t>(k) * slots)) break;
      } else {
        std::lock_guard<std::mutex> lk(st.mu);
        if (st.stop) break;
      }
      RolloutPhaseOutcome out = core.rollout_phase();
      if (lockstep) {
        advance_tick();
        if (!wait_for_tick(static_cast<std::uint64_t>(k) * slots + slots - 1)) break;
      } else {
        {
          std::lock_guard<std::mutex> lk(st.mu);
          ++st.generation;
        }
        st.cv.notify_all();
      }
      core.refresh_reward();
      MetricsRow row = core.make_row(k, out);
      row.wall_clock_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(row);
      if (lockstep) advance_tick();
    }
  } catch (const std::exception& e) {
    record_failure(std::string("policy worker failed at iteration ") + std::to_string(rows.size()) +
                   ": " + e.what());
  } catch (...) {
    record_failure("policy worker failed with an unknown error");
  }
  {
    std::lock_guard<std::mutex> lk(st.mu);
    st.stop = true;
  }
  st.cv.notify_all();
  for (std::thread& t : helpers) t.join();
  if (st.error) std::rethrow_exception(st.error);
  return rows;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return nlohmann::json{{"env", to_string(c.env)},
                        {"algo", to_string(c.algo)},
                        {"mode", to_string(c.mode)},
                        {"demo", c.demo_path},
                        {"out", c.out_dir},
                        {"seed", c.seed},
                        {"iterations", c.iterations},
                        {"horizon", c.horizon},
                        {"gamma", c.ppo.gamma},
                        {"lambda_gae", c.ppo.lambda_gae},
                        {"clip_eps", c.ppo.clip_eps},
                        {"alpha_entropy", c.ppo.alpha_entropy},
                        {"alpha_value", c.ppo.alpha_value},
                        {"lr", c.ppo.lr},
                        {"epochs", c.ppo.epochs},
                        {"minibatch", c.ppo.minibatch},
                        {"lambda_d", c.weights.lambda_d},
                        {"lambda_c", c.weights.lambda_c},
                        {"beta", c.weights.beta},
                        {"eps_d", c.weights.eps_d},
                        {"disc_steps", c.disc_steps},
                        {"curiosity_steps", c.curiosity_steps},
                        {"replay_capacity", c.replay_capacity},
                        {"lockstep", c.lockstep},
                        {"async_jitter_us", c.async_jitter_us}};
}

// Unknown keys are rejected so a typo cannot silently fall back to a default.
// lambda_d / lambda_c defaults follow the configured environment.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> allowed = {
      "env",        "algo",       "mode",          "demo",          "out",
      "seed",       "iterations", "horizon",       "gamma",         "lambda_gae",
      "clip_eps",   "alpha_entropy", "alpha_value", "lr",           "epochs",
      "minibatch",  "lambda_d",   "lambda_c",      "beta",          "eps_d",
      "disc_steps", "curiosity_steps", "replay_capacity", "lockstep", "async_jitter_us"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw std::invalid_argument("unknown config key '" + item.key() + "'");
  TrainConfig c;
  c.env = env_id_from_string(j.value("env", std::string("gridworld14")));
  c.weights = RewardWeights::defaults_for(c.env);
  c.algo = algo_from_string(j.value("algo", std::string("pgfdc")));
  c.mode = mode_from_string(j.value("mode", std::string("sync")));
  c.demo_path = j.value("demo", c.demo_path);
  c.out_dir = j.value("out", c.out_dir);
  c.seed = j.value("seed", c.seed);
  c.iterations = j.value("iterations", c.iterations);
  c.horizon = j.value("horizon", c.horizon);
  c.ppo.gamma = j.value("gamma", c.ppo.gamma);
  c.ppo.lambda_gae = j.value("lambda_gae", c.ppo.lambda_gae);
  c.ppo.clip_eps = j.value("clip_eps", c.ppo.clip_eps);
  c.ppo.alpha_entropy = j.value("alpha_entropy", c.ppo.alpha_entropy);
  c.ppo.alpha_value = j.value("alpha_value", c.ppo.alpha_value);
  c.ppo.lr = j.value("lr", c.ppo.lr);
  c.ppo.epochs = j.value("epochs", c.ppo.epochs);
  c.ppo.minibatch = j.value("minibatch", c.ppo.minibatch);
  c.weights.lambda_d = j.value("lambda_d", c.weights.lambda_d);
  c.weights.lambda_c = j.value("lambda_c", c.weights.lambda_c);
  c.weights.beta = j.value("beta", c.weights.beta);
  c.weights.eps_d = j.value("eps_d", c.weights.eps_d);
  c.disc_steps = j.value("disc_steps", c.disc_steps);
  c.curiosity_steps = j.value("curiosity_steps", c.curiosity_steps);
  c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
  c.lockstep = j.value("lockstep", c.lockstep);
  c.async_jitter_us = j.value("async_jitter_us", c.async_jitter_us);
  return c;
}

// metrics.csv + checkpoint.bin + manifest.json under the output directory.
// The manifest echoes the configuration and records content hashes of both
// artifacts so a run can be identified after the fact.
inline TrainResult write_artifacts(const TrainConfig& cfg, const TrainerCore& core,
                                   std::vector<MetricsRow> rows) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  TrainResult res;
  res.rows = std::move(rows);
  res.metrics_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
  write_metrics_csv(res.rows, res.metrics_path);
  res.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.bin").string();
  save_checkpoint(res.checkpoint_path, core.checkpoint_params());
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = train_config_to_json(cfg);
  manifest["seed"] = cfg.seed;
  manifest["env_layout_hash"] = hex64(core.spec().layout_hash());
  manifest["metrics_hash"] = hex64(hash_file(res.metrics_path));
  manifest["checkpoint_hash"] = hex64(hash_file(res.checkpoint_path));
  res.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();
  std::ofstream os(res.manifest_path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + res.manifest_path);
  os << manifest.dump(1) << "\n";
  if (!os) throw std::runtime_error("write failed: " + res.manifest_path);
  return res;
}

inline TrainResult train(const TrainConfig& cfg) {
  TrainerCore core(cfg);
  std::vector<MetricsRow> rows =
      cfg.mode == RunMode::sync ? run_sync_loop(core) : run_async_loop(core);
  return write_artifacts(cfg, core, std::move(rows));
}

inline TrainResult train_sync(const TrainConfig& cfg) {
  if (cfg.mode != RunMode::sync)
    throw std::invalid_argument("train_sync called with an async configuration");
  return train(cfg);
}

inline TrainResult train_async(const TrainConfig& cfg) {
  if (cfg.mode != RunMode::async)
    throw std::invalid_argument("train_async called with a sync configuration");
  return train(cfg);
}

}  // namespace pgfdc
