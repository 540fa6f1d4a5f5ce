// Command line entry point: train policies, generate scripted demonstrations,
// evaluate checkpoints and discriminator scores, and run built-in numeric
// self-checks. Validation problems (bad flags or values, unreadable inputs,
// unwritable outputs) exit with status 2; failures during a run exit with 1.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pgfdc/eval.hpp"
#include "pgfdc/expert.hpp"
#include "pgfdc/gridworld.hpp"
#include "pgfdc/intrinsic.hpp"
#include "pgfdc/metrics.hpp"
#include "pgfdc/occupancy.hpp"
#include "pgfdc/rlcore.hpp"
#include "pgfdc/trainer.hpp"

namespace {

using namespace pgfdc;

// Re-classifies an input problem as a validation error (exit status 2).
[[noreturn]] void usage_error(const std::string& msg) { throw std::invalid_argument(msg); }

nlohmann::json read_json_file(const std::string& path, const char* what) {
  std::ifstream is(path);
  if (!is) usage_error(std::string("cannot open ") + what + ": " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    usage_error(std::string(what) + " " + path + " is not valid JSON: " + e.what());
  }
  return j;
}

void probe_output_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) usage_error("cannot create output directory " + dir + ": " + ec.message());
  const fs::path probe = fs::path(dir) / ".write-probe";
  {
    std::ofstream os(probe);
    if (!os) usage_error("output directory " + dir + " is not writable");
  }
  fs::remove(probe, ec);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) usage_error("cannot open for writing: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string config_path, env, algo, mode, demo, out;
  std::uint64_t seed = 0;
  int iters = 0, horizon = 0, epochs = 0, minibatch = 0;
  int disc_steps = 0, curiosity_steps = 0, replay_capacity = 0;
  long long jitter_us = 0;
  double lr = 0, gamma = 0, lambda_gae = 0, clip_eps = 0, entropy_coef = 0, value_coef = 0;
  double lambda_d = 0, lambda_c = 0, beta = 0, eps_d = 0;
  bool lockstep = false;
};

int cmd_train(const CLI::App& sub, const TrainFlags& f) {
  TrainConfig cfg;
  if (sub.count("--config"))
    cfg = train_config_from_json(read_json_file(f.config_path, "config file"));
  if (sub.count("--env")) {
    cfg.env = env_id_from_string(f.env);
    cfg.weights = RewardWeights::defaults_for(cfg.env);
  }
  if (sub.count("--algo")) cfg.algo = algo_from_string(f.algo);
  if (sub.count("--mode")) cfg.mode = mode_from_string(f.mode);
  if (sub.count("--demo")) cfg.demo_path = f.demo;
  if (sub.count("--seed")) cfg.seed = f.seed;
  if (sub.count("--iters")) cfg.iterations = f.iters;
  if (sub.count("--horizon")) cfg.horizon = f.horizon;
  if (sub.count("--epochs")) cfg.ppo.epochs = f.epochs;
  if (sub.count("--minibatch")) cfg.ppo.minibatch = f.minibatch;
  if (sub.count("--lr")) cfg.ppo.lr = f.lr;
  if (sub.count("--gamma")) cfg.ppo.gamma = f.gamma;
  if (sub.count("--lambda-gae")) cfg.ppo.lambda_gae = f.lambda_gae;
  if (sub.count("--clip-eps")) cfg.ppo.clip_eps = f.clip_eps;
  if (sub.count("--entropy-coef")) cfg.ppo.alpha_entropy = f.entropy_coef;
  if (sub.count("--value-coef")) cfg.ppo.alpha_value = f.value_coef;
  if (sub.count("--lambda-d")) cfg.weights.lambda_d = f.lambda_d;
  if (sub.count("--lambda-c")) cfg.weights.lambda_c = f.lambda_c;
  if (sub.count("--beta")) cfg.weights.beta = f.beta;
  if (sub.count("--eps-d")) cfg.weights.eps_d = f.eps_d;
  if (sub.count("--disc-steps")) cfg.disc_steps = f.disc_steps;
  if (sub.count("--curiosity-steps")) cfg.curiosity_steps = f.curiosity_steps;
  if (sub.count("--replay-capacity")) cfg.replay_capacity = f.replay_capacity;
  if (sub.count("--jitter-us")) cfg.async_jitter_us = f.jitter_us;
  if (f.lockstep) cfg.lockstep = true;

  // Output directory precedence: --out flag, then PGFDC_OUT_DIR, then the
  // config file value. No other setting reads the environment.
  if (sub.count("--out")) {
    cfg.out_dir = f.out;
  } else if (const char* env_out = std::getenv("PGFDC_OUT_DIR"); env_out && *env_out) {
    cfg.out_dir = env_out;
  }

  cfg.validate();
  if (!cfg.demo_path.empty()) {
    // Surface unreadable or mismatched demonstrations before training starts.
    try {
      const Trajectory demo = load_demo(cfg.demo_path);
      if (demo.env_id != cfg.env)
        usage_error("demonstration " + cfg.demo_path + " was recorded on " +
                    to_string(demo.env_id) + " but training targets " + to_string(cfg.env));
    } catch (const std::runtime_error& e) {
      usage_error(e.what());
    }
  }
  probe_output_dir(cfg.out_dir);

  const TrainResult res = train(cfg);
  const double final_return = res.rows.empty() ? 0.0 : res.rows.back().mean_return;
  std::cout << "trained " << to_string(cfg.algo) << " on " << to_string(cfg.env) << " for "
            << cfg.iterations << " iterations ("
            << static_cast<long long>(cfg.iterations) * cfg.horizon << " env steps), "
            << to_string(cfg.mode) << " mode\n"
            << "final mean return " << final_return << "\n"
            << "metrics:    " << res.metrics_path << "\n"
            << "checkpoint: " << res.checkpoint_path << "\n"
            << "manifest:   " << res.manifest_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// demo-generate
// ---------------------------------------------------------------------------

int cmd_demo_generate(const std::string& env_s, const std::string& out, int variant,
                      std::uint64_t seed) {
  const EnvId env = env_id_from_string(env_s);
  const EnvSpec spec = EnvSpec::make(env);
  const Trajectory demo = scripted_demo(spec, variant, seed);
  if (!verify_replay(demo)) throw std::runtime_error("generated demonstration failed replay");
  try {
    save_demo(demo, out);
  } catch (const std::runtime_error& e) {
    usage_error(e.what());
  }
  std::cout << "wrote demonstration variant " << variant << " for " << to_string(env) << ": "
            << demo.size() << " steps, return " << demo.total_return << " -> " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const std::string& checkpoint, const std::string& env_s, int seeds, int episodes,
             std::uint64_t base_seed, const std::string& out) {
  const EnvId env = env_id_from_string(env_s);
  if (seeds < 1 || episodes < 1) usage_error("--seeds and --episodes must be at least 1");
  // Input problems (missing file, wrong environment, incompatible shapes) are
  // validation errors; only the episode loop itself is a runtime failure.
  try {
    load_checkpoint(checkpoint);
  } catch (const std::runtime_error& e) {
    usage_error(e.what());
  }
  EvalReport rep;
  try {
    rep = evaluate_checkpoint(checkpoint, env, seeds, episodes, base_seed);
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    if (msg.find("was trained on") != std::string::npos ||
        msg.find("checkpoint") != std::string::npos)
      usage_error(msg);
    throw;
  }
  const std::string text = rep.to_json().dump(1) + "\n";
  std::cout << text;
  if (!out.empty()) write_text_file(out, text);
  return 0;
}

// ---------------------------------------------------------------------------
// eval-disc
// ---------------------------------------------------------------------------

int cmd_eval_disc(const std::string& checkpoint, const std::string& env_s,
                  const std::string& source, const std::string& demo_path, int seeds,
                  int episodes, std::uint64_t base_seed, const std::string& out) {
  const EnvId env = env_id_from_string(env_s);
  if (seeds < 1 || episodes < 1) usage_error("--seeds and --episodes must be at least 1");
  if (source == "demo" && demo_path.empty())
    usage_error("--demo is required when --source demo is selected");

  ParamMap params;
  try {
    params = load_checkpoint(checkpoint);
    check_checkpoint_env(params, env, "checkpoint " + checkpoint);
  } catch (const std::runtime_error& e) {
    usage_error(e.what());
  }
  const EnvSpec spec = EnvSpec::make(env);
  DiscriminatorNet disc = [&]() {
    try {
      return discriminator_from_params(params, spec.action_count);
    } catch (const std::runtime_error& e) {
      usage_error(std::string("checkpoint ") + checkpoint +
                  " does not contain a discriminator: " + e.what());
    }
  }();

  nlohmann::json j{{"env_id", to_string(env)},
                   {"checkpoint_hash", hex64(hash_file(checkpoint))},
                   {"source", source}};
  if (source == "demo") {
    Trajectory demo;
    try {
      demo = load_demo(demo_path);
    } catch (const std::runtime_error& e) {
      usage_error(e.what());
    }
    if (demo.env_id != env)
      usage_error("demonstration " + demo_path + " was recorded on " + to_string(demo.env_id) +
                  " but scoring targets " + to_string(env));
    j["pairs"] = demo.size();
    j["mean_disc_score"] = discriminator_score_trajectory(disc, demo);
  } else {
    ActionFn act;
    if (source == "random") {
      act = uniform_policy(spec.action_count);
    } else {  // "policy": the policy stored in the same checkpoint
      try {
        const PolicyNet policy = policy_from_params(params, spec.action_count);
        act = [policy](const Tensor& obs, Rng& rng) {
          const PolicyNet::Out o = policy.forward(nullptr, stack({obs}));
          return sample_from_row(o.probs, 0, rng.uniform());
        };
      } catch (const std::runtime_error& e) {
        usage_error(std::string("checkpoint ") + checkpoint +
                    " does not contain a policy: " + e.what());
      }
    }
    j["seeds"] = seeds;
    j["episodes"] = episodes;
    j["mean_disc_score"] = discriminator_score_policy(disc, act, env, seeds, episodes, base_seed);
  }
  const std::string text = j.dump(1) + "\n";
  std::cout << text;
  if (!out.empty()) write_text_file(out, text);
  return 0;
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

bool report_check(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "ok   " : "FAIL ") << name << ": " << detail << "\n";
  return ok;
}

// A pose-neutral stall: turn to face the border wall north of the start cell,
// push against it, turn back. Each blocked forward still counts one step.
std::vector<int> stalled_goal_plan(const EnvSpec& spec, int total_steps) {
  std::vector<int> plan = bfs_expert_plan(spec);
  const int extra = total_steps - static_cast<int>(plan.size());
  if (extra < 2) throw std::logic_error("stall budget too small");
  std::vector<int> out;
  out.push_back(kActLeft);
  for (int i = 0; i < extra - 2; ++i) out.push_back(kActForward);
  out.push_back(kActRight);
  out.insert(out.end(), plan.begin(), plan.end());
  return out;
}

double run_plan_return(const EnvSpec& spec, const std::vector<int>& plan, int* steps_taken,
                       bool* finished) {
  GridEnv env(spec);
  env.reset();
  double ret = 0.0;
  int n = 0;
  for (int a : plan) {
    const GridEnv::StepResult r = env.step(a);
    ret += r.reward;
    ++n;
    if (r.done) break;
  }
  if (steps_taken) *steps_taken = n;
  if (finished) *finished = env.done();
  return ret;
}

int cmd_oracle_check() {
  bool all = true;
  char buf[160];

  {  // Advantage recursion against the pinned three-step fixture.
    RolloutBatch b;
    for (int t = 0; t < 3; ++t) {
      Transition tr;
      tr.r_tilde = (t == 2) ? 1.0 : 0.0;
      tr.value = 0.0;
      tr.done = (t == 2);
      b.steps.push_back(tr);
    }
    compute_gae(b, 0.99, 0.95);
    const double want[3] = {0.88454025, 0.9405, 1.0};
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) worst = std::max(worst, std::abs(b.advantages[t] - want[t]));
    std::snprintf(buf, sizeof buf, "max |A - expected| = %.3e (tol 1e-12)", worst);
    all &= report_check("advantage-fixture", worst <= 1e-12, buf);
  }

  {  // Advantage recursion against a direct discounted-sum recomputation.
    Rng rng(5);
    RolloutBatch b;
    const int n = 64;
    for (int t = 0; t < n; ++t) {
      Transition tr;
      tr.r_tilde = rng.uniform(-1.0, 1.0);
      tr.value = rng.uniform(-1.0, 1.0);
      tr.done = rng.uniform() < 0.15;
      b.steps.push_back(tr);
    }
    b.bootstrap_value = b.steps.back().done ? 0.0 : 0.3;
    const double gamma = 0.99, lam = 0.95;
    compute_gae(b, gamma, lam);
    double worst = 0.0;
    for (int t = 0; t < n; ++t) {
      double acc = 0.0, scale = 1.0;
      for (int l = t; l < n; ++l) {
        const Transition& tr = b.steps[l];
        const double next_v =
            tr.done ? 0.0 : (l + 1 < n ? b.steps[l + 1].value : b.bootstrap_value);
        acc += scale * (tr.r_tilde + gamma * next_v - tr.value);
        if (tr.done) break;
        scale *= gamma * lam;
      }
      worst = std::max(worst, std::abs(b.advantages[t] - acc));
    }
    std::snprintf(buf, sizeof buf, "max |A - direct sum| = %.3e over %d steps (tol 1e-10)",
                  worst, n);
    all &= report_check("advantage-direct-sum", worst <= 1e-10, buf);
  }

  {  // Goal reward closed forms on the 14x14 grid: reach at 96 of 192 -> 0.55,
     // reach exactly at the cap -> 0.1.
    const EnvSpec spec = EnvSpec::make(EnvId::gridworld14);
    int n96 = 0, n192 = 0;
    bool f96 = false, f192 = false;
    const double r96 = run_plan_return(spec, stalled_goal_plan(spec, 96), &n96, &f96);
    const double r192 = run_plan_return(spec, stalled_goal_plan(spec, 192), &n192, &f192);
    const bool ok96 = f96 && n96 == 96 && std::abs(r96 - 0.55) <= 1e-12;
    const bool ok192 = f192 && n192 == 192 && std::abs(r192 - 0.1) <= 1e-12;
    std::snprintf(buf, sizeof buf, "return(96 steps) = %.17g, return(192 steps) = %.17g", r96,
                  r192);
    all &= report_check("goal-reward-closed-form", ok96 && ok192, buf);
  }

  {  // Curiosity reward transform: fixed points and bounds.
    const double at0 = curiosity_transform(0.0);
    const double atln3 = curiosity_transform(std::log(3.0));
    bool mono = true;
    double prev = -1.0;
    for (double z = 0.0; z <= 10.0; z += 0.25) {
      const double v = curiosity_transform(z);
      mono = mono && v > prev && v >= 0.0 && v < 1.0;
      prev = v;
    }
    const double saturated = curiosity_transform(800.0);
    const bool ok = std::abs(at0) <= 1e-15 && std::abs(atln3 - 0.5) <= 1e-15 && mono &&
                    std::isfinite(saturated) && saturated <= 1.0;
    std::snprintf(buf, sizeof buf, "f(0) = %.3g, f(ln 3) = %.17g, monotone, f(800) = %g", at0,
                  atln3, saturated);
    all &= report_check("curiosity-transform", ok, buf);
  }

  {  // Demonstration reward: indifferent discriminator scores log(1/2); the
     // clamp keeps every reward within [log eps, 0].
    Rng rng(12);
    DiscriminatorNet disc(3, rng);
    ParamMap view = disc.named_view();
    for (const char* nm : {"discriminator/out.w", "discriminator/out.b"}) {
      Tensor t = view.at(nm);
      std::fill(t.data(), t.data() + t.size(), 0.0);
    }
    const EnvSpec spec = EnvSpec::make(EnvId::gridworld14);
    GridEnv env(spec);
    const Tensor obs = env.reset();
    const double at_half = demonstration_reward(disc, obs, 0);
    const bool ok_half = std::abs(at_half - std::log(0.5)) <= 1e-15;

    Rng rng2(13);
    DiscriminatorNet random_disc(3, rng2);
    Rng stream(14);
    bool bounded = true;
    GridEnv env2(spec);
    Tensor o = env2.reset();
    for (int i = 0; i < 20; ++i) {
      const int a = stream.uniform_int(3);
      const double r_d = demonstration_reward(random_disc, o, a);
      bounded = bounded && r_d <= 0.0 && r_d >= std::log(1e-6) - 1e-12;
      const GridEnv::StepResult s = env2.step(a);
      o = s.obs;
      if (s.done) o = env2.reset();
    }
    std::snprintf(buf, sizeof buf, "r_d(D=1/2) = %.17g (log 1/2 = %.17g); bounds held", at_half,
                  std::log(0.5));
    all &= report_check("demonstration-reward", ok_half && bounded, buf);
  }

  {  // Reward composition with the 14x14 grid defaults.
    const RewardWeights w = RewardWeights::defaults_for(EnvId::gridworld14);
    const double got = compose_reward(0.55, std::log(0.5), 0.25, w);
    const double want = 0.55 + w.lambda_d * std::log(0.5) + w.lambda_c * 0.25;
    std::snprintf(buf, sizeof buf, "r = %.17g, recomputed %.17g", got, want);
    all &= report_check("reward-composition", std::abs(got - want) <= 1e-15, buf);
  }

  {  // Jensen-Shannon corner cases and a geometric occupancy identity.
    const double self_js = js_divergence({0.3, 0.7}, {0.3, 0.7});
    const double disjoint = js_divergence({1.0, 0.0}, {0.0, 1.0});
    TabularMdp loop;
    loop.n_states = 1;
    loop.n_actions = 1;
    loop.next = {0};
    loop.p0 = {1.0};
    const double total = occupancy_oracle(loop, {1.0}, 0.99).total();
    const bool ok = self_js == 0.0 && std::abs(disjoint - std::log(2.0)) <= 1e-12 &&
                    std::abs(total - 100.0) <= 1e-9;
    std::snprintf(buf, sizeof buf,
                  "JS(p,p) = %.3g, JS(disjoint) - log 2 = %.3e, self-loop mass = %.12g",
                  self_js, disjoint - std::log(2.0), total);
    all &= report_check("occupancy-and-js", ok, buf);
  }

  std::cout << (all ? "oracle-check: all checks passed\n"
                    : "oracle-check: at least one check FAILED\n");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Policy-gradient training on deterministic sparse-reward gridworlds, with reward "
      "shaping from a demonstration-trained discriminator and a curiosity model."};
  app.require_subcommand(1);

  // ---- train ----
  TrainFlags tf;
  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train a policy and write metrics.csv, checkpoint.bin and manifest.json");
  train_cmd->add_option("--config", tf.config_path,
                        "JSON config file; explicit flags override its values");
  train_cmd->add_option("--env", tf.env, "Environment: gridworld14, keyworld14 or fourrooms");
  train_cmd->add_option("--algo", tf.algo,
                        "Algorithm: pgfdc, ppo, a2c, icm-only or random");
  train_cmd->add_option("--mode", tf.mode, "Execution mode: sync or async");
  train_cmd->add_option("--demo", tf.demo, "Demonstration file (required for pgfdc)");
  train_cmd->add_option("--out", tf.out,
                        "Output directory (falls back to $PGFDC_OUT_DIR when omitted)");
  train_cmd->add_option("--seed", tf.seed, "Run seed");
  train_cmd->add_option("--iters", tf.iters, "Outer training iterations");
  train_cmd->add_option("--horizon", tf.horizon, "Rollout steps per iteration");
  train_cmd->add_option("--epochs", tf.epochs, "Optimization epochs per policy update");
  train_cmd->add_option("--minibatch", tf.minibatch, "Minibatch size for policy updates");
  train_cmd->add_option("--lr", tf.lr, "Policy learning rate");
  train_cmd->add_option("--gamma", tf.gamma, "Discount factor");
  train_cmd->add_option("--lambda-gae", tf.lambda_gae, "Advantage-estimation lambda");
  train_cmd->add_option("--clip-eps", tf.clip_eps, "Policy ratio clip width");
  train_cmd->add_option("--entropy-coef", tf.entropy_coef, "Entropy bonus coefficient");
  train_cmd->add_option("--value-coef", tf.value_coef, "Value loss coefficient");
  train_cmd->add_option("--lambda-d", tf.lambda_d, "Demonstration reward weight");
  train_cmd->add_option("--lambda-c", tf.lambda_c, "Curiosity reward weight");
  train_cmd->add_option("--beta", tf.beta, "Curiosity loss mix");
  train_cmd->add_option("--eps-d", tf.eps_d, "Discriminator output clamp");
  train_cmd->add_option("--disc-steps", tf.disc_steps,
                        "Discriminator ascent steps per iteration");
  train_cmd->add_option("--curiosity-steps", tf.curiosity_steps,
                        "Curiosity descent steps per iteration");
  train_cmd->add_option("--replay-capacity", tf.replay_capacity,
                        "Generated-transition replay capacity");
  train_cmd->add_option("--jitter-us", tf.jitter_us,
                        "Async mode: random per-phase delay upper bound, microseconds");
  train_cmd->add_flag("--lockstep", tf.lockstep,
                      "Async mode: run phases on a fixed rotation (reproduces sync bytes)");

  // ---- demo-generate ----
  std::string dg_env, dg_out;
  int dg_variant = 1;
  std::uint64_t dg_seed = 0;
  CLI::App* demo_cmd =
      app.add_subcommand("demo-generate", "Write a scripted shortest-path demonstration");
  demo_cmd->add_option("--env", dg_env, "Environment: gridworld14, keyworld14 or fourrooms")
      ->required();
  demo_cmd->add_option("--out", dg_out, "Demonstration file to write")->required();
  demo_cmd->add_option("--variant", dg_variant,
                       "1 = direct shortest route, 2 = detour through a fixed waypoint")
      ->check(CLI::Range(1, 2));
  demo_cmd->add_option("--seed", dg_seed, "Seed recorded in the demonstration");

  // ---- eval ----
  std::string ev_ckpt, ev_env, ev_out;
  int ev_seeds = 10, ev_episodes = 10;
  std::uint64_t ev_base = 0;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Evaluate a checkpoint: stochastic episodes over independent seed streams");
  eval_cmd->add_option("--checkpoint", ev_ckpt, "Checkpoint file to evaluate")->required();
  eval_cmd->add_option("--env", ev_env, "Environment: gridworld14, keyworld14 or fourrooms")
      ->required();
  eval_cmd->add_option("--seeds", ev_seeds, "Number of independent evaluation streams");
  eval_cmd->add_option("--episodes", ev_episodes, "Episodes per stream");
  eval_cmd->add_option("--base-seed", ev_base, "Base seed the streams are derived from");
  eval_cmd->add_option("--out", ev_out, "Also write the JSON report to this file");

  // ---- eval-disc ----
  std::string ed_ckpt, ed_env, ed_source = "policy", ed_demo, ed_out;
  int ed_seeds = 10, ed_episodes = 10;
  std::uint64_t ed_base = 0;
  CLI::App* disc_cmd = app.add_subcommand(
      "eval-disc", "Mean discriminator score over visited state-action pairs");
  disc_cmd->add_option("--checkpoint", ed_ckpt, "Checkpoint holding the discriminator")
      ->required();
  disc_cmd->add_option("--env", ed_env, "Environment: gridworld14, keyworld14 or fourrooms")
      ->required();
  disc_cmd
      ->add_option("--source", ed_source,
                   "Pairs to score: policy (from the same checkpoint), random, or demo")
      ->check(CLI::IsMember({"policy", "random", "demo"}));
  disc_cmd->add_option("--demo", ed_demo, "Demonstration file (required with --source demo)");
  disc_cmd->add_option("--seeds", ed_seeds, "Rollout streams (policy/random sources)");
  disc_cmd->add_option("--episodes", ed_episodes, "Episodes per stream");
  disc_cmd->add_option("--base-seed", ed_base, "Base seed the streams are derived from");
  disc_cmd->add_option("--out", ed_out, "Also write the JSON result to this file");

  // ---- oracle-check ----
  app.add_subcommand("oracle-check",
                     "Run built-in numeric identities (advantages, rewards, occupancy)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(*train_cmd, tf);
    if (demo_cmd->parsed()) return cmd_demo_generate(dg_env, dg_out, dg_variant, dg_seed);
    if (eval_cmd->parsed())
      return cmd_eval(ev_ckpt, ev_env, ev_seeds, ev_episodes, ev_base, ev_out);
    if (disc_cmd->parsed())
      return cmd_eval_disc(ed_ckpt, ed_env, ed_source, ed_demo, ed_seeds, ed_episodes, ed_base,
                           ed_out);
    return cmd_oracle_check();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
