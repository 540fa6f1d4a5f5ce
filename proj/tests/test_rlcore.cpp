#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "pgfdc/rlcore.hpp"

namespace pgfdc {
namespace {

// Independent advantage oracle: the direct double-sum form
// A_t = sum_l (gamma*lambda)^l * delta_{t+l}, stopping at episode end.
// Structurally different from the production backward recursion.
struct OracleProblem {
  std::vector<double> r, v;
  std::vector<char> done;
  double bootstrap = 0.0;
  double gamma = 0.99;
  double lambda = 0.95;
};

std::vector<double> oracle_gae(const OracleProblem& p) {
  const int n = static_cast<int>(p.r.size());
  std::vector<double> adv(n);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0, w = 1.0;
    for (int k = t; k < n; ++k) {
      const double next_v = p.done[k] ? 0.0 : (k + 1 < n ? p.v[k + 1] : p.bootstrap);
      const double delta = p.r[k] + p.gamma * next_v - p.v[k];
      acc += w * delta;
      if (p.done[k]) break;
      w *= p.gamma * p.lambda;
    }
    adv[t] = acc;
  }
  return adv;
}

RolloutBatch batch_from(const OracleProblem& p) {
  RolloutBatch b;
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    Transition tr;
    tr.r_tilde = p.r[i];
    tr.value = p.v[i];
    tr.done = p.done[i] != 0;
    b.steps.push_back(tr);
  }
  b.bootstrap_value = p.bootstrap;
  return b;
}

TEST(GaeTest, FixtureThreeStepEpisode) {
  OracleProblem p;
  p.r = {0.0, 0.0, 1.0};
  p.v = {0.0, 0.0, 0.0};
  p.done = {0, 0, 1};
  RolloutBatch b = batch_from(p);
  compute_gae(b, 0.99, 0.95);
  ASSERT_EQ(b.advantages.size(), 3u);
  EXPECT_NEAR(b.advantages[0], 0.88454025, 1e-12);
  EXPECT_NEAR(b.advantages[1], 0.9405, 1e-12);
  EXPECT_NEAR(b.advantages[2], 1.0, 1e-12);
  for (int t = 0; t < 3; ++t)  // V == 0, so targets coincide with advantages
    EXPECT_DOUBLE_EQ(b.value_targets[t], b.advantages[t]);
}

TEST(GaeTest, ZeroRewardsZeroValuesGiveZeroAdvantages) {
  OracleProblem p;
  p.r.assign(16, 0.0);
  p.v.assign(16, 0.0);
  p.done.assign(16, 0);
  RolloutBatch b = batch_from(p);
  compute_gae(b, 0.99, 0.95);
  for (double a : b.advantages) EXPECT_DOUBLE_EQ(a, 0.0);
}

TEST(GaeTest, LambdaZeroIsOneStepTemporalDifference) {
  Rng rng(31);
  OracleProblem p;
  const int n = 20;
  for (int i = 0; i < n; ++i) {
    p.r.push_back(rng.normal());
    p.v.push_back(rng.normal());
    p.done.push_back(rng.uniform() < 0.2 ? 1 : 0);
  }
  p.bootstrap = rng.normal();
  RolloutBatch b = batch_from(p);
  compute_gae(b, 0.99, 0.0);
  for (int t = 0; t < n; ++t) {
    const double next_v = p.done[t] ? 0.0 : (t + 1 < n ? p.v[t + 1] : p.bootstrap);
    EXPECT_NEAR(b.advantages[t], p.r[t] + 0.99 * next_v - p.v[t], 1e-12) << t;
  }
}

TEST(GaeTest, MatchesBruteForceOracleOnRandomProblems) {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    OracleProblem p;
    const int n = 1 + rng.uniform_int(40);
    for (int i = 0; i < n; ++i) {
      p.r.push_back(rng.normal());
      p.v.push_back(rng.normal());
      p.done.push_back(rng.uniform() < 0.15 ? 1 : 0);
    }
    p.bootstrap = rng.normal();
    p.gamma = 0.9 + 0.099 * rng.uniform();
    p.lambda = rng.uniform();
    RolloutBatch b = batch_from(p);
    compute_gae(b, p.gamma, p.lambda);
    const std::vector<double> expect = oracle_gae(p);
    for (int t = 0; t < n; ++t) {
      ASSERT_NEAR(b.advantages[t], expect[t], 1e-10) << "trial " << trial << " t " << t;
      ASSERT_NEAR(b.value_targets[t], expect[t] + p.v[t], 1e-10);
    }
  }
}

TEST(GaeTest, EpisodeBoundariesIsolateLaterRewards) {
  Rng rng(33);
  OracleProblem p;
  const int n = 12, boundary = 5;  // done at t = 5
  for (int i = 0; i < n; ++i) {
    p.r.push_back(rng.normal());
    p.v.push_back(rng.normal());
    p.done.push_back(i == boundary ? 1 : 0);
  }
  RolloutBatch a = batch_from(p);
  compute_gae(a, 0.99, 0.95);
  for (int i = boundary + 1; i < n; ++i) p.r[i] += 100.0 * rng.normal();
  p.bootstrap = 55.0;
  RolloutBatch b = batch_from(p);
  compute_gae(b, 0.99, 0.95);
  for (int t = 0; t <= boundary; ++t)
    EXPECT_DOUBLE_EQ(a.advantages[t], b.advantages[t]) << t;
}

TEST(GaeTest, BootstrapOnlyMattersOnHorizonCut) {
  Rng rng(34);
  OracleProblem p;
  for (int i = 0; i < 8; ++i) {
    p.r.push_back(rng.normal());
    p.v.push_back(rng.normal());
    p.done.push_back(0);
  }
  p.bootstrap = 1.0;
  RolloutBatch cut1 = batch_from(p);
  compute_gae(cut1, 0.99, 0.95);
  p.bootstrap = 2.0;
  RolloutBatch cut2 = batch_from(p);
  compute_gae(cut2, 0.99, 0.95);
  EXPECT_NE(cut1.advantages[7], cut2.advantages[7]);

  p.done.back() = 1;
  p.bootstrap = 1.0;
  RolloutBatch done1 = batch_from(p);
  compute_gae(done1, 0.99, 0.95);
  p.bootstrap = 2.0;
  RolloutBatch done2 = batch_from(p);
  compute_gae(done2, 0.99, 0.95);
  for (int t = 0; t < 8; ++t) EXPECT_DOUBLE_EQ(done1.advantages[t], done2.advantages[t]);
}

TEST(StandardizeTest, MeanZeroStdOne) {
  Rng rng(35);
  std::vector<double> a(64);
  for (double& v : a) v = 3.0 + 0.3 * rng.normal();
  standardize_advantages(a);
  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= a.size();
  double var = 0.0;
  for (double v : a) var += (v - mean) * (v - mean);
  var /= a.size();
  EXPECT_NEAR(mean, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(var), 1.0, 1e-9);
}

TEST(StandardizeTest, DegenerateAndSingletonCases) {
  std::vector<double> exact(10, 4.0);  // mean is exact -> exact zeros
  standardize_advantages(exact);
  for (double v : exact) EXPECT_DOUBLE_EQ(v, 0.0);
  std::vector<double> constant(10, 4.2);  // mean rounds; result must stay tiny, never amplified
  standardize_advantages(constant);
  for (double v : constant) EXPECT_LT(std::abs(v), 1e-6);
  std::vector<double> one = {7.5};
  standardize_advantages(one);
  EXPECT_DOUBLE_EQ(one[0], 7.5);
}

TEST(RolloutTest, ExactHorizonAndRewardComposition) {
  Rng init(40);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(41);
  auto intrinsic = [](const std::vector<Transition>& steps) {
    IntrinsicBatchRewards out;
    out.r_d.assign(steps.size(), -0.5);
    out.r_c.assign(steps.size(), 0.25);
    return out;
  };
  const double ld = 1e-2, lc = 1e-3;
  RolloutBatch b = collect_rollout(env, policy, intrinsic, ld, lc, 300, rng);
  ASSERT_EQ(b.steps.size(), 300u);
  EXPECT_DOUBLE_EQ(b.lambda_d, ld);
  EXPECT_DOUBLE_EQ(b.lambda_c, lc);
  for (const Transition& tr : b.steps) {
    EXPECT_LE(tr.log_prob, 0.0);
    EXPECT_DOUBLE_EQ(tr.r_d, -0.5);
    EXPECT_DOUBLE_EQ(tr.r_c, 0.25);
    EXPECT_DOUBLE_EQ(tr.r_tilde, tr.r_e + ld * tr.r_d + lc * tr.r_c);
  }
}

TEST(RolloutTest, ZeroWeightsReduceCompositionToExtrinsic) {
  Rng init(42);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(43);
  auto intrinsic = [](const std::vector<Transition>& steps) {
    IntrinsicBatchRewards out;
    out.r_d.assign(steps.size(), -13.0);
    out.r_c.assign(steps.size(), 0.99);
    return out;
  };
  RolloutBatch b = collect_rollout(env, policy, intrinsic, 0.0, 0.0, 128, rng);
  for (const Transition& tr : b.steps) EXPECT_DOUBLE_EQ(tr.r_tilde, tr.r_e);
}

TEST(RolloutTest, DeterministicRerunProducesIdenticalBatch) {
  for (int run = 0; run < 1; ++run) {
    Rng ia(44), ib(44);
    PolicyNet pa(3, ia), pb(3, ib);
    GridEnv ea(EnvId::gridworld14), eb(EnvId::gridworld14);
    Rng ra(45), rb(45);
    RolloutBatch a = collect_rollout(ea, pa, nullptr, 0, 0, 256, ra);
    RolloutBatch b = collect_rollout(eb, pb, nullptr, 0, 0, 256, rb);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      ASSERT_EQ(a.steps[i].action, b.steps[i].action);
      ASSERT_EQ(a.steps[i].done, b.steps[i].done);
      ASSERT_DOUBLE_EQ(a.steps[i].log_prob, b.steps[i].log_prob);
      ASSERT_DOUBLE_EQ(a.steps[i].r_tilde, b.steps[i].r_tilde);
      ASSERT_EQ(0, std::memcmp(a.steps[i].obs.data(), b.steps[i].obs.data(),
                               sizeof(double) * a.steps[i].obs.size()));
    }
    ASSERT_DOUBLE_EQ(a.bootstrap_value, b.bootstrap_value);
  }
}

TEST(RolloutTest, EpisodeGapsRespectEnvironmentCapAndBootstrapMatchesValueHead) {
  Rng init(46);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(47);
  RolloutBatch b = collect_rollout(env, policy, nullptr, 0, 0, 2048, rng);
  int last_done = -1, episodes = 0;
  for (int t = 0; t < 2048; ++t) {
    if (b.steps[t].done) {
      EXPECT_LE(t - last_done, 192);
      last_done = t;
      ++episodes;
    }
  }
  EXPECT_GE(episodes, 5);
  if (!b.steps.back().done) {
    auto out = policy.forward(nullptr, stack({env.observe()}));
    EXPECT_DOUBLE_EQ(b.bootstrap_value, out.value.data()[0]);
  }
}

TEST(RolloutTest, RejectsBadHorizonAndWrongIntrinsicSizes) {
  Rng init(48);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(49);
  EXPECT_THROW(collect_rollout(env, policy, nullptr, 0, 0, 0, rng), std::invalid_argument);
  auto bad = [](const std::vector<Transition>&) {
    IntrinsicBatchRewards out;
    out.r_d.assign(3, 0.0);  // wrong length on purpose
    out.r_c.assign(3, 0.0);
    return out;
  };
  EXPECT_THROW(collect_rollout(env, policy, bad, 0, 0, 8, rng), std::runtime_error);
}

TEST(PpoHyperTest, ValidationRejectsBadValues) {
  PpoHyper hp;
  hp.gamma = 1.0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
  hp = PpoHyper{};
  hp.clip_eps = 0.0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
  hp = PpoHyper{};
  hp.epochs = 0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
  hp = PpoHyper{};
  EXPECT_NO_THROW(hp.validate());
}

// Builds a one-transition minibatch whose importance ratio is exactly `ratio`
// by shifting the recorded behavior log-probability.
Minibatch single_step_minibatch(const PolicyNet& policy, GridEnv& env, double ratio, double adv) {
  Minibatch mb;
  Tensor obs = env.observe();
  mb.obs = stack({obs});
  mb.actions = {2};
  auto out = policy.forward(nullptr, mb.obs);
  mb.logp_old = Tensor::of({1}, {out.log_probs.data()[2] - std::log(ratio)});
  mb.adv = Tensor::of({1}, {adv});
  mb.targets = Tensor::of({1}, {out.value.data()[0]});
  return mb;
}

TEST(PpoTest, ClipArithmeticOnRatioOnePointFive) {
  Rng init(50);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  PpoHyper hp;
  hp.alpha_entropy = 0.0;
  hp.alpha_value = 0.0;
  Minibatch mb = single_step_minibatch(policy, env, 1.5, 1.0);
  UpdateStats stats;
  Tensor loss = ppo_loss(nullptr, policy, mb, hp, &stats);
  EXPECT_NEAR(loss.item(), -1.2, 1e-12);        // min(1.5*1, clip->1.2*1) = 1.2, negated
  EXPECT_NEAR(stats.policy_loss, -1.2, 1e-12);  // surrogate objective itself is +1.2
}

std::vector<double> grad_snapshot(const PolicyNet& net) {
  std::vector<double> flat;
  for (const Tensor& p : net.params()) {
    if (!p.has_grad()) {
      flat.insert(flat.end(), p.size(), 0.0);
    } else {
      flat.insert(flat.end(), p.grad(), p.grad() + p.size());
    }
  }
  return flat;
}

TEST(PpoTest, RatioOneGradientEqualsVanillaPolicyGradient) {
  Rng init(51);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(52);
  RolloutBatch batch = collect_rollout(env, policy, nullptr, 0, 0, 32, rng);
  compute_gae(batch, 0.99, 0.95);
  std::vector<double> adv = batch.advantages;
  standardize_advantages(adv);
  std::vector<int> idx(batch.steps.size());
  std::iota(idx.begin(), idx.end(), 0);
  Minibatch mb = gather_minibatch(batch, idx, adv);
  PpoHyper hp;  // clip 0.2; ratio == 1 sits strictly inside the band

  Graph g1;
  g1.backward(ppo_loss(&g1, policy, mb, hp));
  std::vector<double> ppo_grad = grad_snapshot(policy);
  for (Tensor p : policy.params()) p.ensure_zero_grad();
  Graph g2;
  g2.backward(a2c_loss(&g2, policy, mb, hp));
  std::vector<double> a2c_grad = grad_snapshot(policy);

  ASSERT_EQ(ppo_grad.size(), a2c_grad.size());
  double dot = 0.0, na = 0.0, nb = 0.0, max_diff = 0.0;
  for (std::size_t i = 0; i < ppo_grad.size(); ++i) {
    dot += ppo_grad[i] * a2c_grad[i];
    na += ppo_grad[i] * ppo_grad[i];
    nb += a2c_grad[i] * a2c_grad[i];
    max_diff = std::max(max_diff, std::abs(ppo_grad[i] - a2c_grad[i]));
  }
  EXPECT_LT(max_diff, 1e-12);
  EXPECT_GT(dot / std::sqrt(na * nb), 0.999);
}

TEST(PpoTest, HugeClipSingleEpochMatchesActorCriticDirection) {
  Rng init(53);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(54);
  RolloutBatch batch = collect_rollout(env, policy, nullptr, 0, 0, 64, rng);
  compute_gae(batch, 0.99, 0.95);
  std::vector<double> adv = batch.advantages;
  standardize_advantages(adv);
  std::vector<int> idx(batch.steps.size());
  std::iota(idx.begin(), idx.end(), 0);
  Minibatch mb = gather_minibatch(batch, idx, adv);
  PpoHyper hp;
  hp.clip_eps = 1e9;  // effectively unclipped
  hp.epochs = 1;

  Graph g1;
  g1.backward(ppo_loss(&g1, policy, mb, hp));
  std::vector<double> ppo_grad = grad_snapshot(policy);
  for (Tensor p : policy.params()) p.ensure_zero_grad();
  Graph g2;
  g2.backward(a2c_loss(&g2, policy, mb, hp));
  std::vector<double> a2c_grad = grad_snapshot(policy);

  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < ppo_grad.size(); ++i) {
    dot += ppo_grad[i] * a2c_grad[i];
    na += ppo_grad[i] * ppo_grad[i];
    nb += a2c_grad[i] * a2c_grad[i];
  }
  EXPECT_GT(dot / std::sqrt(na * nb), 0.999);
}

TEST(PpoTest, PositiveAdvantageRaisesProbabilityOfTakenAction) {
  Rng init(55);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(56);
  RolloutBatch batch = collect_rollout(env, policy, nullptr, 0, 0, 1, rng);
  batch.advantages = {1.0};
  batch.value_targets = {batch.steps[0].value};
  const int a = batch.steps[0].action;
  Tensor obs = stack({batch.steps[0].obs});
  const double before = policy.forward(nullptr, obs).probs.data()[a];
  PpoHyper hp;
  hp.alpha_entropy = 0.0;
  hp.alpha_value = 0.0;
  hp.epochs = 1;
  Adam opt(policy.params(), {hp.lr});
  ppo_update(policy, opt, batch, hp, rng);
  const double after = policy.forward(nullptr, obs).probs.data()[a];
  EXPECT_GT(after, before);
}

TEST(PpoTest, ZeroAdvantagesWithZeroCoefficientsLeaveParametersUntouched) {
  Rng init(57);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(58);
  RolloutBatch batch = collect_rollout(env, policy, nullptr, 0, 0, 16, rng);
  batch.advantages.assign(16, 0.0);
  batch.value_targets.assign(16, 0.0);
  PpoHyper hp;
  hp.alpha_entropy = 0.0;
  hp.alpha_value = 0.0;
  std::vector<std::vector<double>> before;
  for (const Tensor& p : policy.params())
    before.emplace_back(p.data(), p.data() + p.size());
  Adam opt(policy.params(), {hp.lr});
  ppo_update(policy, opt, batch, hp, rng);
  a2c_update(policy, opt, batch, hp, rng);
  std::size_t i = 0;
  for (const Tensor& p : policy.params()) {
    EXPECT_EQ(0, std::memcmp(before[i].data(), p.data(), sizeof(double) * p.size()));
    ++i;
  }
}

TEST(PpoTest, NonFiniteLossAbortsWithDiagnostics) {
  Rng init(59);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(60);
  RolloutBatch batch = collect_rollout(env, policy, nullptr, 0, 0, 8, rng);
  compute_gae(batch, 0.99, 0.95);
  policy.named_view().at("policy/actor_fc.w").data()[0] = std::numeric_limits<double>::quiet_NaN();
  PpoHyper hp;
  Adam opt(policy.params(), {hp.lr});
  EXPECT_THROW(ppo_update(policy, opt, batch, hp, rng), std::runtime_error);
}

TEST(PpoTest, RealUpdatesKeepParametersFiniteAndStatsSane) {
  Rng init(61);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(62);
  PpoHyper hp;
  hp.minibatch = 32;
  hp.epochs = 2;
  Adam opt(policy.params(), {hp.lr});
  for (int iter = 0; iter < 3; ++iter) {
    RolloutBatch batch = collect_rollout(env, policy, nullptr, 0, 0, 128, rng);
    compute_gae(batch, hp.gamma, hp.lambda_gae);
    UpdateStats stats = ppo_update(policy, opt, batch, hp, rng);
    EXPECT_EQ(stats.minibatches, 2 * 4);  // 2 epochs x ceil(128/32)
    EXPECT_TRUE(std::isfinite(stats.policy_loss));
    EXPECT_TRUE(std::isfinite(stats.value_loss));
    EXPECT_GE(stats.entropy, 0.0);
    EXPECT_LE(stats.entropy, std::log(3.0) + 1e-9);
    EXPECT_TRUE(std::isfinite(stats.approx_kl));
  }
  for (const Tensor& p : policy.params()) EXPECT_TRUE(p.all_finite());
}

TEST(A2cTest, EntropyTermAloneDrivesProbabilitiesTowardUniform) {
  Rng init(63);
  PolicyNet policy(3, init);
  GridEnv env(EnvId::gridworld14);
  Rng rng(64);
  RolloutBatch batch = collect_rollout(env, policy, nullptr, 0, 0, 4, rng);
  batch.advantages.assign(4, 0.0);
  batch.value_targets.assign(4, 0.0);
  PpoHyper hp;
  hp.alpha_entropy = 1e-2;
  hp.alpha_value = 0.0;
  hp.lr = 1e-2;
  Adam opt(policy.params(), {hp.lr});
  Tensor obs = stack({batch.steps[0].obs});
  auto deviation = [&]() {
    auto out = policy.forward(nullptr, obs);
    double worst = 0.0;
    for (int c = 0; c < 3; ++c)
      worst = std::max(worst, std::abs(out.probs.data()[c] - 1.0 / 3.0));
    return worst;
  };
  const double before = deviation();
  for (int i = 0; i < 400; ++i) a2c_update(policy, opt, batch, hp, rng);
  const double after = deviation();
  EXPECT_LT(after, before);
  EXPECT_LT(after, 0.02);
}

}  // namespace
}  // namespace pgfdc
