#pragma once

// Finite-difference cases that push gradients end-to-end through the three
// full networks, including the exact training objectives each one sees.
// Element subsampling keeps each seed cheap; different seeds probe different
// coordinates, so repeated runs accumulate coverage.

#include <vector>

#include "fd_inventory.hpp"
#include "pgfdc/models.hpp"

namespace pgfdc::testutil {

inline std::vector<int> random_actions(int n, int action_count, Rng& rng) {
  std::vector<int> a(n);
  for (int i = 0; i < n; ++i) a[i] = rng.uniform_int(action_count);
  return a;
}

inline std::vector<FdCase> run_models_fd_inventory(std::uint64_t seed) {
  std::vector<FdCase> cases;
  FdOptions opt;
  opt.h = 1e-5;
  opt.max_elems_per_tensor = 12;
  opt.seed = seed * 977 + 11;
  const int kN = 2;

  {  // Actor-critic: log-prob of sampled actions + value regression + entropy bonus.
    Rng rng(seed * 11 + 1);
    PolicyNet net(3, rng);
    Tensor obs = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    std::vector<int> acts = random_actions(kN, 3, rng);
    Tensor v_target = Tensor::randn({kN}, rng, 1.0);
    auto fwd = [&](Graph* g) {
      auto out = net.forward(g, obs);
      Tensor logp = mean(g, select_columns(g, out.log_probs, acts));
      Tensor vloss = mse(g, out.value, v_target);
      Tensor ent = neg(g, mean(g, row_sum(g, mul(g, out.probs, out.log_probs))));
      return add(g, add(g, logp, vloss), scale(g, ent, 0.01));
    };
    cases.push_back({"policy_logp_value_entropy", fd_check(net.params(), fwd, opt)});
  }

  {  // Discriminator: the paired logistic objective it trains on.
    Rng rng(seed * 11 + 2);
    DiscriminatorNet net(5, rng);
    Tensor obs_e = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    Tensor obs_g = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    std::vector<int> act_e = random_actions(kN, 5, rng);
    std::vector<int> act_g = random_actions(kN, 5, rng);
    auto fwd = [&](Graph* g) {
      Tensor d_e = net.forward(g, obs_e, act_e).d;
      Tensor d_g = net.forward(g, obs_g, act_g).d;
      Tensor term_e = mean(g, log_op(g, clamp(g, d_e, 1e-6, 1.0 - 1e-6)));
      Tensor one_minus = add_scalar(g, neg(g, d_g), 1.0);
      Tensor term_g = mean(g, log_op(g, clamp(g, one_minus, 1e-6, 1.0 - 1e-6)));
      return neg(g, add(g, term_e, term_g));
    };
    cases.push_back({"discriminator_logistic_pair", fd_check(net.params(), fwd, opt)});
  }

  {  // Curiosity joint loss, inverse-model-dominant mix.
    Rng rng(seed * 11 + 3);
    CuriosityNets net(3, rng);
    Tensor obs_t = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    Tensor obs_n = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    std::vector<int> acts = random_actions(kN, 3, rng);
    auto fwd = [&](Graph* g) {
      auto out = curiosity_forward(g, net, obs_t, acts, obs_n);
      return add(g, scale(g, out.l_ei, 0.99), scale(g, out.l_f, 0.01));
    };
    cases.push_back({"curiosity_joint_beta_small", fd_check(net.params(), fwd, opt)});
  }

  {  // Curiosity joint loss, forward-model-dominant mix.
    Rng rng(seed * 11 + 4);
    CuriosityNets net(5, rng);
    Tensor obs_t = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    Tensor obs_n = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    std::vector<int> acts = random_actions(kN, 5, rng);
    auto fwd = [&](Graph* g) {
      auto out = curiosity_forward(g, net, obs_t, acts, obs_n);
      return add(g, scale(g, out.l_ei, 0.1), scale(g, out.l_f, 0.9));
    };
    cases.push_back({"curiosity_joint_beta_large", fd_check(net.params(), fwd, opt)});
  }

  {  // Curiosity with the per-class sigmoid inverse head.
    Rng rng(seed * 11 + 5);
    CuriosityNets net(3, rng, CuriosityNets::InverseHead::sigmoid_bce);
    Tensor obs_t = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    Tensor obs_n = Tensor::randn({kN, 3, 7, 7}, rng, 0.5);
    std::vector<int> acts = random_actions(kN, 3, rng);
    auto fwd = [&](Graph* g) {
      auto out = curiosity_forward(g, net, obs_t, acts, obs_n);
      return add(g, scale(g, out.l_ei, 0.99), scale(g, out.l_f, 0.01));
    };
    cases.push_back({"curiosity_sigmoid_head", fd_check(net.params(), fwd, opt)});
  }

  return cases;
}

}  // namespace pgfdc::testutil
