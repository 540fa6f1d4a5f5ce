#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pgfdc/checkpoint.hpp"
#include "pgfdc/init.hpp"
#include "pgfdc/ops.hpp"
#include "pgfdc/rng.hpp"

namespace pgfdc {

namespace nets {

inline Tensor weight(std::vector<int> shape, Rng& rng, double gain) {
  Tensor w = Tensor::zeros(std::move(shape));
  orthogonal_init(w, rng, gain);
  w.set_requires_grad(true);
  return w;
}

inline Tensor bias(int n) {
  Tensor b = Tensor::zeros({n});
  b.set_requires_grad(true);
  return b;
}

inline void check_obs_batch(const Tensor& obs, const char* who) {
  if (obs.ndim() != 4 || obs.dim(1) != 3 || obs.dim(2) != 7 || obs.dim(3) != 7)
    throw std::invalid_argument(std::string(who) + ": expected observations [N,3,7,7], got " +
                                shape_str(obs.shape()));
}

// Registry of named parameters so checkpoint save/load and snapshotting stay
// mechanical. Order of registration fixes the optimizer's parameter order.
class ParamRegistry {
 public:
  Tensor reg(const std::string& name, Tensor t) {
    names_.push_back(name);
    params_.push_back(t);
    return t;
  }
  const std::vector<Tensor>& params() const { return params_; }

  ParamMap named_view() const {
    ParamMap m;
    for (std::size_t i = 0; i < names_.size(); ++i) m[names_[i]] = params_[i];
    return m;
  }

  ParamMap named_clone() const {
    ParamMap m;
    for (std::size_t i = 0; i < names_.size(); ++i) m[names_[i]] = params_[i].clone();
    return m;
  }

  // Copies values in from a map holding at least these names; shape-checked.
  void load(const ParamMap& m) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      auto it = m.find(names_[i]);
      if (it == m.end())
        throw std::runtime_error("checkpoint is missing parameter " + names_[i]);
      if (!(it->second.shape() == params_[i].shape()))
        throw std::runtime_error("checkpoint parameter " + names_[i] + " has shape " +
                                 shape_str(it->second.shape()) + ", expected " +
                                 shape_str(params_[i].shape()));
      params_[i].copy_values_from(it->second);
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
};

}  // namespace nets

// Actor-critic network: three 2x2 convs (16, 32, 64 filters, ReLU, one 2x2
// maxpool after the first), then separate 64-unit tanh branches feeding a
// softmax action head and a scalar value head.
class PolicyNet {
 public:
  PolicyNet(int action_count, Rng& rng) : action_count_(action_count) {
    const double g = relu_gain();
    c1w_ = reg_.reg("policy/conv1.w", nets::weight({16, 3, 2, 2}, rng, g));
    c1b_ = reg_.reg("policy/conv1.b", nets::bias(16));
    c2w_ = reg_.reg("policy/conv2.w", nets::weight({32, 16, 2, 2}, rng, g));
    c2b_ = reg_.reg("policy/conv2.b", nets::bias(32));
    c3w_ = reg_.reg("policy/conv3.w", nets::weight({64, 32, 2, 2}, rng, g));
    c3b_ = reg_.reg("policy/conv3.b", nets::bias(64));
    afw_ = reg_.reg("policy/actor_fc.w", nets::weight({64, 64}, rng, 1.0));
    afb_ = reg_.reg("policy/actor_fc.b", nets::bias(64));
    aow_ = reg_.reg("policy/actor_out.w", nets::weight({64, action_count}, rng, 1.0));
    aob_ = reg_.reg("policy/actor_out.b", nets::bias(action_count));
    vfw_ = reg_.reg("value/critic_fc.w", nets::weight({64, 64}, rng, 1.0));
    vfb_ = reg_.reg("value/critic_fc.b", nets::bias(64));
    vow_ = reg_.reg("value/critic_out.w", nets::weight({64, 1}, rng, 1.0));
    vob_ = reg_.reg("value/critic_out.b", nets::bias(1));
  }

  struct Out {
    Tensor logits;     // [N,A]
    Tensor probs;      // [N,A], rows sum to 1
    Tensor log_probs;  // [N,A]
    Tensor value;      // [N]
  };

  Out forward(Graph* g, const Tensor& obs) const {
    nets::check_obs_batch(obs, "policy");
    Tensor h = relu(g, conv2d(g, obs, c1w_, c1b_));  // 16x6x6
    h = maxpool2x2(g, h);                            // 16x3x3
    h = relu(g, conv2d(g, h, c2w_, c2b_));           // 32x2x2
    h = relu(g, conv2d(g, h, c3w_, c3b_));           // 64x1x1
    Tensor f = flatten(g, h);                        // [N,64]
    Out out;
    Tensor a = tanh_op(g, dense(g, f, afw_, afb_));
    out.logits = dense(g, a, aow_, aob_);
    out.probs = softmax(g, out.logits);
    out.log_probs = log_softmax(g, out.logits);
    Tensor v = tanh_op(g, dense(g, f, vfw_, vfb_));
    out.value = reshape(g, dense(g, v, vow_, vob_), {obs.dim(0)});
    return out;
  }

  int action_count() const { return action_count_; }
  const std::vector<Tensor>& params() const { return reg_.params(); }
  ParamMap named_view() const { return reg_.named_view(); }
  ParamMap named_clone() const { return reg_.named_clone(); }
  void load(const ParamMap& m) { reg_.load(m); }

 private:
  int action_count_;
  nets::ParamRegistry reg_;
  Tensor c1w_, c1b_, c2w_, c2b_, c3w_, c3b_;
  Tensor afw_, afb_, aow_, aob_, vfw_, vfb_, vow_, vob_;
};

// State-action discriminator: an action branch (one-hot -> 16 -> 8, ReLU)
// and a state branch (two conv+pool stages -> 16 -> 4, ReLU) joined by a
// small ReLU layer into a single sigmoid output.
class DiscriminatorNet {
 public:
  DiscriminatorNet(int action_count, Rng& rng) : action_count_(action_count) {
    const double g = relu_gain();
    aw1_ = reg_.reg("discriminator/act_fc1.w", nets::weight({action_count, 16}, rng, g));
    ab1_ = reg_.reg("discriminator/act_fc1.b", nets::bias(16));
    aw2_ = reg_.reg("discriminator/act_fc2.w", nets::weight({16, 8}, rng, g));
    ab2_ = reg_.reg("discriminator/act_fc2.b", nets::bias(8));
    c1w_ = reg_.reg("discriminator/conv1.w", nets::weight({16, 3, 2, 2}, rng, g));
    c1b_ = reg_.reg("discriminator/conv1.b", nets::bias(16));
    c2w_ = reg_.reg("discriminator/conv2.w", nets::weight({32, 16, 2, 2}, rng, g));
    c2b_ = reg_.reg("discriminator/conv2.b", nets::bias(32));
    sw1_ = reg_.reg("discriminator/state_fc1.w", nets::weight({32, 16}, rng, g));
    sb1_ = reg_.reg("discriminator/state_fc1.b", nets::bias(16));
    sw2_ = reg_.reg("discriminator/state_fc2.w", nets::weight({16, 4}, rng, g));
    sb2_ = reg_.reg("discriminator/state_fc2.b", nets::bias(4));
    jw_ = reg_.reg("discriminator/joint_fc.w", nets::weight({12, 4}, rng, g));
    jb_ = reg_.reg("discriminator/joint_fc.b", nets::bias(4));
    ow_ = reg_.reg("discriminator/out.w", nets::weight({4, 1}, rng, 1.0));
    ob_ = reg_.reg("discriminator/out.b", nets::bias(1));
  }

  struct Out {
    Tensor logit;  // [N]
    Tensor d;      // [N], sigmoid(logit), in (0,1)
  };

  Out forward(Graph* g, const Tensor& obs, const std::vector<int>& actions) const {
    nets::check_obs_batch(obs, "discriminator");
    if (static_cast<int>(actions.size()) != obs.dim(0))
      throw std::invalid_argument("discriminator: " + std::to_string(actions.size()) +
                                  " actions for " + std::to_string(obs.dim(0)) + " observations");
    Tensor a = relu(g, dense(g, one_hot(actions, action_count_), aw1_, ab1_));
    a = relu(g, dense(g, a, aw2_, ab2_));                // [N,8]
    Tensor h = maxpool2x2(g, relu(g, conv2d(g, obs, c1w_, c1b_)));  // 16x3x3
    h = maxpool2x2(g, relu(g, conv2d(g, h, c2w_, c2b_)));           // 32x1x1
    Tensor s = relu(g, dense(g, flatten(g, h), sw1_, sb1_));
    s = relu(g, dense(g, s, sw2_, sb2_));                // [N,4]
    Tensor z = relu(g, dense(g, concat_cols(g, a, s), jw_, jb_));
    Out out;
    out.logit = reshape(g, dense(g, z, ow_, ob_), {obs.dim(0)});
    out.d = sigmoid(g, out.logit);
    return out;
  }

  int action_count() const { return action_count_; }
  const std::vector<Tensor>& params() const { return reg_.params(); }
  ParamMap named_view() const { return reg_.named_view(); }
  ParamMap named_clone() const { return reg_.named_clone(); }
  void load(const ParamMap& m) { reg_.load(m); }

 private:
  int action_count_;
  nets::ParamRegistry reg_;
  Tensor aw1_, ab1_, aw2_, ab2_, c1w_, c1b_, c2w_, c2b_;
  Tensor sw1_, sb1_, sw2_, sb2_, jw_, jb_, ow_, ob_;
};

// Curiosity triple. The encoder maps an observation to a 32-dim feature via
// four 3x3 ELU convs (valid, valid, valid, then padded so 1x1 survives) and a
// linear projection. The inverse model predicts the action between two
// feature vectors; the forward model predicts the next feature from feature
// plus one-hot action.
class CuriosityNets {
 public:
  // Inverse-model head: softmax with cross-entropy (default), or literal
  // per-class sigmoid scored by binary cross-entropy.
  enum class InverseHead { softmax_ce, sigmoid_bce };

  CuriosityNets(int action_count, Rng& rng, InverseHead head = InverseHead::softmax_ce)
      : action_count_(action_count), head_(head) {
    const double g = relu_gain();
    e1w_ = reg_.reg("curiosity/enc_conv1.w", nets::weight({16, 3, 3, 3}, rng, 1.0));
    e1b_ = reg_.reg("curiosity/enc_conv1.b", nets::bias(16));
    e2w_ = reg_.reg("curiosity/enc_conv2.w", nets::weight({16, 16, 3, 3}, rng, 1.0));
    e2b_ = reg_.reg("curiosity/enc_conv2.b", nets::bias(16));
    e3w_ = reg_.reg("curiosity/enc_conv3.w", nets::weight({16, 16, 3, 3}, rng, 1.0));
    e3b_ = reg_.reg("curiosity/enc_conv3.b", nets::bias(16));
    e4w_ = reg_.reg("curiosity/enc_conv4.w", nets::weight({16, 16, 3, 3}, rng, 1.0));
    e4b_ = reg_.reg("curiosity/enc_conv4.b", nets::bias(16));
    epw_ = reg_.reg("curiosity/enc_proj.w", nets::weight({16, 32}, rng, 1.0));
    epb_ = reg_.reg("curiosity/enc_proj.b", nets::bias(32));
    iw1_ = reg_.reg("curiosity/inv_fc.w", nets::weight({64, 64}, rng, g));
    ib1_ = reg_.reg("curiosity/inv_fc.b", nets::bias(64));
    iw2_ = reg_.reg("curiosity/inv_out.w", nets::weight({64, action_count}, rng, 1.0));
    ib2_ = reg_.reg("curiosity/inv_out.b", nets::bias(action_count));
    fw1_ = reg_.reg("curiosity/fwd_fc.w", nets::weight({32 + action_count, 128}, rng, g));
    fb1_ = reg_.reg("curiosity/fwd_fc.b", nets::bias(128));
    fw2_ = reg_.reg("curiosity/fwd_out.w", nets::weight({128, 32}, rng, 1.0));
    fb2_ = reg_.reg("curiosity/fwd_out.b", nets::bias(32));
  }

  // obs [N,3,7,7] -> features [N,32]
  Tensor features(Graph* g, const Tensor& obs) const {
    nets::check_obs_batch(obs, "curiosity encoder");
    Tensor h = elu(g, conv2d(g, obs, e1w_, e1b_));      // 16x5x5
    h = elu(g, conv2d(g, h, e2w_, e2b_));               // 16x3x3
    h = elu(g, conv2d(g, h, e3w_, e3b_));               // 16x1x1
    h = elu(g, conv2d(g, h, e4w_, e4b_, 1));            // 16x1x1 (padded)
    return dense(g, flatten(g, h), epw_, epb_);         // [N,32]
  }

  // (F(s_t), F(s_{t+1})) -> action logits [N,A]
  Tensor inverse_logits(Graph* g, const Tensor& f_t, const Tensor& f_next) const {
    Tensor z = relu(g, dense(g, concat_cols(g, f_t, f_next), iw1_, ib1_));
    return dense(g, z, iw2_, ib2_);
  }

  // (F(s_t), a_t) -> predicted next feature [N,32]
  Tensor forward_pred(Graph* g, const Tensor& f_t, const std::vector<int>& actions) const {
    if (static_cast<int>(actions.size()) != f_t.dim(0))
      throw std::invalid_argument("curiosity forward model: " + std::to_string(actions.size()) +
                                  " actions for " + std::to_string(f_t.dim(0)) + " features");
    Tensor z = concat_cols(g, f_t, one_hot(actions, action_count_));
    z = relu(g, dense(g, z, fw1_, fb1_));
    return dense(g, z, fw2_, fb2_);
  }

  int action_count() const { return action_count_; }
  InverseHead inverse_head() const { return head_; }
  const std::vector<Tensor>& params() const { return reg_.params(); }
  ParamMap named_view() const { return reg_.named_view(); }
  ParamMap named_clone() const { return reg_.named_clone(); }
  void load(const ParamMap& m) { reg_.load(m); }

 private:
  int action_count_;
  InverseHead head_;
  nets::ParamRegistry reg_;
  Tensor e1w_, e1b_, e2w_, e2b_, e3w_, e3b_, e4w_, e4b_, epw_, epb_;
  Tensor iw1_, ib1_, iw2_, ib2_, fw1_, fb1_, fw2_, fb2_;
};

// One full curiosity pass over a batch of transitions.
struct CuriosityForward {
  Tensor probs;      // [N,A] predicted-action distribution (per-class sigmoid when that head is chosen)
  Tensor f_next;     // [N,32] encoded next observation
  Tensor f_pred;     // [N,32] forward-model prediction
  Tensor l_f_rows;   // [N] half squared feature-prediction error per transition
  Tensor l_f;        // [] batch mean of l_f_rows
  Tensor l_ei;       // [] inverse-model loss (cross-entropy, or BCE for the sigmoid head)
};

inline CuriosityForward curiosity_forward(Graph* g, const CuriosityNets& nets, const Tensor& obs_t,
                                          const std::vector<int>& actions, const Tensor& obs_next) {
  for (int a : actions)
    if (a < 0 || a >= nets.action_count())
      throw std::invalid_argument("curiosity: action index " + std::to_string(a) +
                                  " out of range [0," + std::to_string(nets.action_count()) + ")");
  CuriosityForward out;
  Tensor f_t = nets.features(g, obs_t);
  out.f_next = nets.features(g, obs_next);
  Tensor logits = nets.inverse_logits(g, f_t, out.f_next);
  if (nets.inverse_head() == CuriosityNets::InverseHead::softmax_ce) {
    out.probs = softmax(g, logits);
    out.l_ei = cross_entropy_logits(g, logits, actions);
  } else {
    out.probs = sigmoid(g, logits);
    // Multi-label binary cross-entropy against the one-hot action, averaged
    // over classes then over the batch.
    Tensor ls_pos = log_sigmoid(g, logits);        // log sigma(z)
    Tensor ls_neg = log_sigmoid(g, neg(g, logits));  // log (1 - sigma(z))
    Tensor pos = select_columns(g, ls_pos, actions);           // [N]
    Tensor neg_sum = row_sum(g, ls_neg);                       // [N]
    Tensor neg_hit = select_columns(g, ls_neg, actions);       // [N]
    Tensor total = add(g, pos, sub(g, neg_sum, neg_hit));      // [N]
    out.l_ei = scale(g, mean(g, total), -1.0 / nets.action_count());
  }
  out.f_pred = nets.forward_pred(g, f_t, actions);
  out.l_f_rows = row_half_sq_dist(g, out.f_pred, out.f_next);
  out.l_f = mean(g, out.l_f_rows);
  return out;
}

}  // namespace pgfdc
