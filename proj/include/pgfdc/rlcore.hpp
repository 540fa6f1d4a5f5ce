#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgfdc/adam.hpp"
#include "pgfdc/gridworld.hpp"
#include "pgfdc/models.hpp"
#include "pgfdc/ops.hpp"
#include "pgfdc/rng.hpp"

namespace pgfdc {

// One environment step as stored in a rollout: the observation acted on, the
// action with its behavior log-probability and value estimate, the three
// reward components with their composition, and the successor observation.
struct Transition {
  Tensor obs;        // [3,7,7]
  int action = 0;
  double log_prob = 0.0;  // log pi(a|s) under the behavior policy, <= 0
  double value = 0.0;     // V(s) under the behavior value head
  double r_e = 0.0;       // extrinsic
  double r_d = 0.0;       // demonstration (log-discriminator) term
  double r_c = 0.0;       // curiosity term
  double r_tilde = 0.0;   // r_e + lambda_d * r_d + lambda_c * r_c
  Tensor obs_next;        // [3,7,7]
  bool done = false;
};

struct RolloutBatch {
  std::vector<Transition> steps;
  std::vector<double> advantages;     // filled by compute_gae
  std::vector<double> value_targets;  // advantages + values
  double bootstrap_value = 0.0;       // V(s_T) when the final step is a horizon cut
  double gamma = 0.0;                 // recorded by compute_gae
  double lambda_gae = 0.0;
  double lambda_d = 0.0;  // weights used to compose r_tilde
  double lambda_c = 0.0;
};

struct PpoHyper {
  double gamma = 0.99;
  double lambda_gae = 0.95;
  double clip_eps = 0.2;
  double alpha_entropy = 1e-2;
  double alpha_value = 0.5;
  double lr = 1e-3;
  int epochs = 4;
  int minibatch = 256;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
      throw std::invalid_argument("gamma must lie in (0,1), got " + std::to_string(gamma));
    if (!(clip_eps > 0.0))
      throw std::invalid_argument("clip epsilon must be positive, got " + std::to_string(clip_eps));
    if (!(lambda_gae >= 0.0 && lambda_gae <= 1.0))
      throw std::invalid_argument("lambda must lie in [0,1], got " + std::to_string(lambda_gae));
    if (epochs < 1 || minibatch < 1)
      throw std::invalid_argument("epochs and minibatch size must be at least 1");
  }
};

// In-place standardization to mean 0, std 1. Batches of one are left alone;
// a degenerate (constant) batch maps to all zeros.
inline void standardize_advantages(std::vector<double>& a) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : a) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double denom = std::max(std::sqrt(var), 1e-8);
  for (double& v : a) v = (v - mean) / denom;
}

// GAE(gamma, lambda) over the batch, restarting the recursion at every done
// flag (no bootstrap across episode boundaries). The final step bootstraps
// with batch.bootstrap_value when it is a horizon cut rather than a terminal.
inline void compute_gae(RolloutBatch& batch, double gamma, double lambda) {
  const int n = static_cast<int>(batch.steps.size());
  if (n == 0) throw std::invalid_argument("cannot compute advantages of an empty batch");
  batch.gamma = gamma;
  batch.lambda_gae = lambda;
  batch.advantages.assign(n, 0.0);
  batch.value_targets.assign(n, 0.0);
  double carry = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const Transition& tr = batch.steps[t];
    const double next_value =
        tr.done ? 0.0 : (t + 1 < n ? batch.steps[t + 1].value : batch.bootstrap_value);
    const double nonterminal = tr.done ? 0.0 : 1.0;
    const double delta = tr.r_tilde + gamma * next_value - tr.value;
    carry = delta + gamma * lambda * nonterminal * carry;
    batch.advantages[t] = carry;
    batch.value_targets[t] = carry + tr.value;
  }
}

// Samples an index from one row of a [N,A] probability matrix given a
// uniform draw u in [0,1). Deterministic for fixed u.
inline int sample_from_row(const Tensor& probs, int row, double u) {
  const int cols = probs.dim(static_cast<int>(probs.ndim()) - 1);
  const double* p = probs.data() + static_cast<std::size_t>(row) * cols;
  double acc = 0.0;
  for (int c = 0; c < cols; ++c) {
    acc += p[c];
    if (u < acc) return c;
  }
  return cols - 1;
}

// Batched intrinsic-reward evaluation over a finished rollout. Both vectors
// must come back with one entry per transition.
struct IntrinsicBatchRewards {
  std::vector<double> r_d;
  std::vector<double> r_c;
};
using IntrinsicRewardFn = std::function<IntrinsicBatchRewards(const std::vector<Transition>&)>;

// Runs the policy in the environment for exactly `horizon` steps, resetting
// on episode end, then fills in intrinsic rewards in one batched pass and
// composes r_tilde. The environment keeps its state across calls so episodes
// may span batch boundaries.
inline RolloutBatch collect_rollout(GridEnv& env, const PolicyNet& policy,
                                    const IntrinsicRewardFn& intrinsic, double lambda_d,
                                    double lambda_c, int horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("rollout horizon must be at least 1");
  RolloutBatch batch;
  batch.lambda_d = lambda_d;
  batch.lambda_c = lambda_c;
  batch.steps.reserve(horizon);
  bool last_done = false;
  for (int t = 0; t < horizon; ++t) {
    Transition tr;
    tr.obs = env.observe();
    auto out = policy.forward(nullptr, stack({tr.obs}));
    tr.action = sample_from_row(out.probs, 0, rng.uniform());
    tr.log_prob = out.log_probs.data()[tr.action];
    tr.value = out.value.data()[0];
    auto step = env.step(tr.action);
    tr.r_e = step.reward;
    tr.obs_next = step.obs;
    tr.done = step.done;
    last_done = step.done;
    batch.steps.push_back(std::move(tr));
    if (step.done) env.reset();
  }
  if (!last_done) {
    auto out = policy.forward(nullptr, stack({env.observe()}));
    batch.bootstrap_value = out.value.data()[0];
  }
  IntrinsicBatchRewards extra;
  if (intrinsic) {
    extra = intrinsic(batch.steps);
    if (extra.r_d.size() != batch.steps.size() || extra.r_c.size() != batch.steps.size())
      throw std::runtime_error("intrinsic reward pass returned " + std::to_string(extra.r_d.size()) +
                               "/" + std::to_string(extra.r_c.size()) + " entries for " +
                               std::to_string(batch.steps.size()) + " transitions");
  } else {
    extra.r_d.assign(batch.steps.size(), 0.0);
    extra.r_c.assign(batch.steps.size(), 0.0);
  }
  for (std::size_t i = 0; i < batch.steps.size(); ++i) {
    Transition& tr = batch.steps[i];
    tr.r_d = extra.r_d[i];
    tr.r_c = extra.r_c[i];
    tr.r_tilde = tr.r_e + lambda_d * tr.r_d + lambda_c * tr.r_c;
  }
  return batch;
}

// A gathered minibatch ready for a loss evaluation.
struct Minibatch {
  Tensor obs;  // [m,3,7,7]
  std::vector<int> actions;
  Tensor logp_old;  // [m]
  Tensor adv;       // [m], already standardized
  Tensor targets;   // [m]
};

inline Minibatch gather_minibatch(const RolloutBatch& batch, const std::vector<int>& idx,
                                  const std::vector<double>& adv_std) {
  Minibatch mb;
  const int m = static_cast<int>(idx.size());
  std::vector<Tensor> obs;
  obs.reserve(m);
  mb.actions.resize(m);
  mb.logp_old = Tensor::zeros({m});
  mb.adv = Tensor::zeros({m});
  mb.targets = Tensor::zeros({m});
  for (int i = 0; i < m; ++i) {
    const Transition& tr = batch.steps[idx[i]];
    obs.push_back(tr.obs);
    mb.actions[i] = tr.action;
    mb.logp_old.data()[i] = tr.log_prob;
    mb.adv.data()[i] = adv_std[idx[i]];
    mb.targets.data()[i] = batch.value_targets[idx[i]];
  }
  mb.obs = stack(obs);
  return mb;
}

struct UpdateStats {
  double policy_loss = 0.0;  // negated clipped-surrogate (or A2C) objective
  double value_loss = 0.0;   // mean squared value regression error
  double entropy = 0.0;      // mean policy entropy
  double approx_kl = 0.0;    // mean(logp_old - logp_new)
  int minibatches = 0;

  void finish() {
    if (minibatches == 0) return;
    policy_loss /= minibatches;
    value_loss /= minibatches;
    entropy /= minibatches;
    approx_kl /= minibatches;
  }
};

namespace detail_rl {

// Shared scaffolding of the two update flavors; `clipped` selects the
// PPO-Clip surrogate over the plain advantage-weighted log-probability.
inline Tensor policy_loss_impl(Graph* g, const PolicyNet& net, const Minibatch& mb,
                               const PpoHyper& hp, bool clipped, UpdateStats* stats) {
  auto out = net.forward(g, mb.obs);
  Tensor logp_new = select_columns(g, out.log_probs, mb.actions);
  Tensor objective;
  if (clipped) {
    Tensor ratio = exp_op(g, sub(g, logp_new, mb.logp_old));
    Tensor surr1 = mul(g, ratio, mb.adv);
    Tensor surr2 = mul(g, clamp(g, ratio, 1.0 - hp.clip_eps, 1.0 + hp.clip_eps), mb.adv);
    objective = mean(g, minimum(g, surr1, surr2));
  } else {
    objective = mean(g, mul(g, logp_new, mb.adv));
  }
  Tensor entropy = neg(g, mean(g, row_sum(g, mul(g, out.probs, out.log_probs))));
  Tensor vloss = mse(g, out.value, mb.targets);
  Tensor gain = add(g, add(g, objective, scale(g, entropy, hp.alpha_entropy)),
                    scale(g, vloss, -hp.alpha_value));
  Tensor loss = neg(g, gain);
  if (stats) {
    stats->policy_loss += -objective.item();
    stats->value_loss += vloss.item();
    stats->entropy += entropy.item();
    double kl = 0.0;
    const int m = logp_new.dim(0);
    for (int i = 0; i < m; ++i) kl += mb.logp_old.data()[i] - logp_new.data()[i];
    stats->approx_kl += kl / m;
    stats->minibatches += 1;
  }
  return loss;
}

inline UpdateStats update_impl(PolicyNet& net, Adam& opt, const RolloutBatch& batch,
                               const PpoHyper& hp, Rng& rng, bool clipped, int epochs,
                               const char* who) {
  hp.validate();
  const int n = static_cast<int>(batch.steps.size());
  if (n == 0) throw std::invalid_argument(std::string(who) + ": empty batch");
  if (batch.advantages.size() != batch.steps.size() ||
      batch.value_targets.size() != batch.steps.size())
    throw std::logic_error(std::string(who) + ": advantages not computed for this batch");
  std::vector<double> adv = batch.advantages;
  standardize_advantages(adv);
  UpdateStats stats;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += hp.minibatch) {
      const int m = std::min(hp.minibatch, n - start);
      std::vector<int> idx(order.begin() + start, order.begin() + start + m);
      Minibatch mb = gather_minibatch(batch, idx, adv);
      Graph g;
      UpdateStats local;
      Tensor loss = policy_loss_impl(&g, net, mb, hp, clipped, &local);
      if (!std::isfinite(loss.item()))
        throw std::runtime_error(
            std::string(who) + ": non-finite loss at epoch " + std::to_string(epoch) +
            ", minibatch offset " + std::to_string(start) +
            " (policy=" + std::to_string(local.policy_loss) +
            ", value=" + std::to_string(local.value_loss) +
            ", entropy=" + std::to_string(local.entropy) + ")");
      opt.zero_grad();
      g.backward(loss);
      opt.step();
      stats.policy_loss += local.policy_loss;
      stats.value_loss += local.value_loss;
      stats.entropy += local.entropy;
      stats.approx_kl += local.approx_kl;
      stats.minibatches += 1;
    }
  }
  stats.finish();
  for (const Tensor& p : net.params())
    if (!p.all_finite())
      throw std::runtime_error(std::string(who) + ": parameters became non-finite after update");
  return stats;
}

}  // namespace detail_rl

// Loss builders exposed for direct gradient inspection.
inline Tensor ppo_loss(Graph* g, const PolicyNet& net, const Minibatch& mb, const PpoHyper& hp,
                       UpdateStats* stats = nullptr) {
  return detail_rl::policy_loss_impl(g, net, mb, hp, true, stats);
}
inline Tensor a2c_loss(Graph* g, const PolicyNet& net, const Minibatch& mb, const PpoHyper& hp,
                       UpdateStats* stats = nullptr) {
  return detail_rl::policy_loss_impl(g, net, mb, hp, false, stats);
}

// Multi-epoch clipped-surrogate update over shuffled minibatches.
inline UpdateStats ppo_update(PolicyNet& net, Adam& opt, const RolloutBatch& batch,
                              const PpoHyper& hp, Rng& rng) {
  return detail_rl::update_impl(net, opt, batch, hp, rng, true, hp.epochs, "policy update");
}

// Single-epoch advantage actor-critic update with the same coefficients.
inline UpdateStats a2c_update(PolicyNet& net, Adam& opt, const RolloutBatch& batch,
                              const PpoHyper& hp, Rng& rng) {
  return detail_rl::update_impl(net, opt, batch, hp, rng, false, 1, "actor-critic update");
}

}  // namespace pgfdc
