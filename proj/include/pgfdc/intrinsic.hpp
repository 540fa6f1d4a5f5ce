#pragma once

#include <cmath>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgfdc/adam.hpp"
#include "pgfdc/gridworld.hpp"
#include "pgfdc/models.hpp"
#include "pgfdc/occupancy.hpp"
#include "pgfdc/ops.hpp"
#include "pgfdc/rng.hpp"

namespace pgfdc {

// A state-action pair labeled by origin: demonstrations carry 1, policy
// rollouts carry 0.
struct LabeledPair {
  Tensor obs;  // [3,7,7]
  int action = 0;
  int label = 0;
};

struct RewardWeights {
  double lambda_d = 0.0;
  double lambda_c = 0.0;
  double beta = 1e-2;   // curiosity loss mix
  double eps_d = 1e-6;  // discriminator clamp before the log

  static RewardWeights defaults_for(EnvId id) {
    RewardWeights w;
    if (id == EnvId::gridworld14) {
      w.lambda_d = 1e-2;
      w.lambda_c = 1e-3;
    } else {
      w.lambda_d = 1e-3;
      w.lambda_c = 1e-4;
    }
    return w;
  }

  void validate() const {
    if (lambda_d < 0.0 || lambda_c < 0.0)
      throw std::invalid_argument("reward weights must be nonnegative");
    if (!(beta > 0.0 && beta < 1.0))
      throw std::invalid_argument("curiosity mix must lie strictly inside (0,1), got " +
                                  std::to_string(beta));
    if (!(eps_d > 0.0 && eps_d < 0.5))
      throw std::invalid_argument("discriminator clamp must lie in (0,0.5)");
  }
};

inline double compose_reward(double r_e, double r_d, double r_c, const RewardWeights& w) {
  return r_e + w.lambda_d * r_d + w.lambda_c * r_c;
}

// Bounded FIFO ring of generated transitions with uniform sampling. One
// writer and any number of sampling readers may run concurrently; tuples are
// immutable once stored, so handed-out copies stay consistent.
struct ReplayTuple {
  Tensor obs;  // s_t
  int action = 0;
  Tensor obs_next;  // s_{t+1}
};

class ReplayBufferG {
 public:
  explicit ReplayBufferG(std::size_t capacity = 50000) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  void push(ReplayTuple t) {
    std::lock_guard<std::mutex> lock(mu_);
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ring_.size();
  }
  std::size_t capacity() const { return capacity_; }

  // Oldest-first logical indexing.
  ReplayTuple at(std::size_t i) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (i >= ring_.size()) throw std::out_of_range("replay index out of range");
    return ring_[(head_ + i) % ring_.size()];
  }

  // Uniform with replacement over current contents.
  std::vector<ReplayTuple> sample(int n, Rng& rng) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (ring_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
    std::vector<ReplayTuple> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(ring_[rng.uniform_int(static_cast<int>(ring_.size()))]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of the oldest element once full
  std::vector<ReplayTuple> ring_;
  mutable std::mutex mu_;
};

namespace detail_intrinsic {
constexpr int kEvalChunk = 256;
}

// r_d = log(clamp(D(s,a), eps, 1-eps)); always <= 0 and finite.
inline std::vector<double> demonstration_rewards(const DiscriminatorNet& disc,
                                                 const std::vector<Tensor>& obs,
                                                 const std::vector<int>& actions,
                                                 double eps_d = 1e-6) {
  if (obs.size() != actions.size())
    throw std::invalid_argument("demonstration reward: observation/action count mismatch");
  std::vector<double> out(obs.size());
  for (std::size_t start = 0; start < obs.size(); start += detail_intrinsic::kEvalChunk) {
    const std::size_t m = std::min<std::size_t>(detail_intrinsic::kEvalChunk, obs.size() - start);
    std::vector<Tensor> chunk(obs.begin() + start, obs.begin() + start + m);
    std::vector<int> acts(actions.begin() + start, actions.begin() + start + m);
    auto scored = disc.forward(nullptr, stack(chunk), acts);
    for (std::size_t i = 0; i < m; ++i) {
      const double d = std::min(std::max(scored.d.data()[i], eps_d), 1.0 - eps_d);
      out[start + i] = std::log(d);
    }
  }
  return out;
}

inline double demonstration_reward(const DiscriminatorNet& disc, const Tensor& obs, int action,
                                   double eps_d = 1e-6) {
  return demonstration_rewards(disc, {obs}, {action}, eps_d)[0];
}

// The bounded transform (e^z - 1)/(e^z + 1) applied to the forward loss;
// maps [0, inf) onto [0, 1), monotonically. Once e^z overflows the double
// range the value saturates to 1 instead of degenerating to inf/inf.
inline double curiosity_transform(double l_f) {
  const double em = std::expm1(l_f);
  if (!std::isfinite(em)) return 1.0;
  return em / (em + 2.0);
}

inline std::vector<double> curiosity_rewards(const CuriosityNets& nets,
                                             const std::vector<Tensor>& obs,
                                             const std::vector<int>& actions,
                                             const std::vector<Tensor>& obs_next) {
  if (obs.size() != actions.size() || obs.size() != obs_next.size())
    throw std::invalid_argument("curiosity reward: batch component sizes differ");
  std::vector<double> out(obs.size());
  for (std::size_t start = 0; start < obs.size(); start += detail_intrinsic::kEvalChunk) {
    const std::size_t m = std::min<std::size_t>(detail_intrinsic::kEvalChunk, obs.size() - start);
    std::vector<Tensor> o(obs.begin() + start, obs.begin() + start + m);
    std::vector<Tensor> on(obs_next.begin() + start, obs_next.begin() + start + m);
    std::vector<int> acts(actions.begin() + start, actions.begin() + start + m);
    auto fwd = curiosity_forward(nullptr, nets, stack(o), acts, stack(on));
    for (std::size_t i = 0; i < m; ++i) out[start + i] = curiosity_transform(fwd.l_f_rows.data()[i]);
  }
  return out;
}

inline double curiosity_reward(const CuriosityNets& nets, const Tensor& obs, int action,
                               const Tensor& obs_next) {
  return curiosity_rewards(nets, {obs}, {action}, {obs_next})[0];
}

// Which algebraic form of the discriminator objective to ascend. The
// standard form is the default; the literal form replaces the generated-side
// term log(1-D) with (1 - log D).
enum class DiscObjectiveForm { standard, literal };

// The discriminator's training objective on one expert/generated batch pair.
inline Tensor discriminator_objective(Graph* g, const DiscriminatorNet& disc,
                                      const std::vector<LabeledPair>& expert,
                                      const std::vector<LabeledPair>& generated, double eps_d,
                                      DiscObjectiveForm form) {
  std::vector<Tensor> eo, go_;
  std::vector<int> ea, ga;
  for (const auto& pair : expert) {
    eo.push_back(pair.obs);
    ea.push_back(pair.action);
  }
  for (const auto& pair : generated) {
    go_.push_back(pair.obs);
    ga.push_back(pair.action);
  }
  Tensor d_e = disc.forward(g, stack(eo), ea).d;
  Tensor d_g = disc.forward(g, stack(go_), ga).d;
  Tensor term_e = mean(g, log_op(g, clamp(g, d_e, eps_d, 1.0 - eps_d)));
  Tensor term_g;
  if (form == DiscObjectiveForm::standard) {
    term_g = mean(g, log_op(g, clamp(g, add_scalar(g, neg(g, d_g), 1.0), eps_d, 1.0 - eps_d)));
  } else {
    term_g = mean(g, add_scalar(g, neg(g, log_op(g, clamp(g, d_g, eps_d, 1.0 - eps_d))), 1.0));
  }
  return add(g, term_e, term_g);
}

// `steps` ascent steps on the given batches; returns the objective value seen
// at each step (before that step's parameter change).
inline std::vector<double> update_discriminator(DiscriminatorNet& disc, Adam& opt,
                                                const std::vector<LabeledPair>& expert,
                                                const std::vector<LabeledPair>& generated,
                                                int steps, double eps_d = 1e-6,
                                                DiscObjectiveForm form = DiscObjectiveForm::standard) {
  if (expert.empty() || generated.empty())
    throw std::invalid_argument("discriminator update needs nonempty expert and generated batches");
  if (steps < 1) throw std::invalid_argument("discriminator update needs at least one step");
  std::vector<double> curve;
  curve.reserve(steps);
  for (int s = 0; s < steps; ++s) {
    Graph g;
    Tensor objective = discriminator_objective(&g, disc, expert, generated, eps_d, form);
    const double value = objective.item();
    if (!std::isfinite(value))
      throw std::runtime_error("discriminator objective became non-finite at step " +
                               std::to_string(s));
    curve.push_back(value);
    Tensor loss = neg(&g, objective);
    opt.zero_grad();
    g.backward(loss);
    opt.step();
    for (const Tensor& p : disc.params())
      if (!p.all_finite())
        throw std::runtime_error("discriminator parameters became non-finite at step " +
                                 std::to_string(s));
  }
  return curve;
}

// The joint curiosity loss (1-beta) * L_ei + beta * L_f over one batch.
inline Tensor curiosity_loss(Graph* g, const CuriosityNets& nets,
                             const std::vector<ReplayTuple>& batch, double beta,
                             double* l_ei_out = nullptr, double* l_f_out = nullptr) {
  if (batch.empty()) throw std::invalid_argument("curiosity update needs a nonempty batch");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("curiosity mix must lie in [0,1], got " + std::to_string(beta));
  std::vector<Tensor> obs, obs_next;
  std::vector<int> actions;
  for (const auto& t : batch) {
    obs.push_back(t.obs);
    actions.push_back(t.action);
    obs_next.push_back(t.obs_next);
  }
  auto fwd = curiosity_forward(g, nets, stack(obs), actions, stack(obs_next));
  if (l_ei_out) *l_ei_out = fwd.l_ei.item();
  if (l_f_out) *l_f_out = fwd.l_f.item();
  return add(g, scale(g, fwd.l_ei, 1.0 - beta), scale(g, fwd.l_f, beta));
}

struct CuriosityCurves {
  std::vector<double> l_ei;
  std::vector<double> l_f;
};

// `steps` joint descent steps on the given batch; curves hold the loss
// components observed at each step.
inline CuriosityCurves update_curiosity(CuriosityNets& nets, Adam& opt,
                                        const std::vector<ReplayTuple>& batch, int steps,
                                        double beta = 1e-2) {
  if (steps < 1) throw std::invalid_argument("curiosity update needs at least one step");
  CuriosityCurves curves;
  for (int s = 0; s < steps; ++s) {
    Graph g;
    double l_ei = 0.0, l_f = 0.0;
    Tensor loss = curiosity_loss(&g, nets, batch, beta, &l_ei, &l_f);
    if (!std::isfinite(loss.item()))
      throw std::runtime_error("curiosity loss became non-finite at step " + std::to_string(s) +
                               " (inverse=" + std::to_string(l_ei) +
                               ", forward=" + std::to_string(l_f) + ")");
    curves.l_ei.push_back(l_ei);
    curves.l_f.push_back(l_f);
    opt.zero_grad();
    g.backward(loss);
    opt.step();
    for (const Tensor& p : nets.params())
      if (!p.all_finite())
        throw std::runtime_error("curiosity parameters became non-finite at step " +
                                 std::to_string(s));
  }
  return curves;
}

// Lower-bound divergence estimate read off a discriminator objective value.
inline double js_estimate_from_objective(double objective) {
  return 0.5 * objective + std::log(2.0);
}

}  // namespace pgfdc
