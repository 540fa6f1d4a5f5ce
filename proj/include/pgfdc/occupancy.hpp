#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgfdc {

// Small deterministic tabular MDP: next[s*A + a] is the successor state and
// p0 the initial-state distribution. Used only for oracle verification.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<int> next;
  std::vector<double> p0;

  void validate() const {
    if (n_states < 1 || n_actions < 1)
      throw std::invalid_argument("tabular MDP needs at least one state and action");
    if (static_cast<int>(next.size()) != n_states * n_actions)
      throw std::invalid_argument("transition table has " + std::to_string(next.size()) +
                                  " entries, expected " + std::to_string(n_states * n_actions));
    for (int s : next)
      if (s < 0 || s >= n_states)
        throw std::invalid_argument("transition target " + std::to_string(s) + " out of range");
    if (static_cast<int>(p0.size()) != n_states)
      throw std::invalid_argument("initial distribution size mismatch");
    double sum = 0.0;
    for (double v : p0) {
      if (v < 0.0) throw std::invalid_argument("initial distribution has negative mass");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("initial distribution sums to " + std::to_string(sum));
  }
};

// Discounted state-action visitation mass rho(s,a) = sum_t gamma^t P(s_t=s) pi(a|s).
struct OccupancyTable {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.0;
  std::vector<double> rho;  // indexed s*A + a

  double total() const {
    double t = 0.0;
    for (double v : rho) t += v;
    return t;
  }

  std::vector<double> normalized() const {
    const double t = total();
    if (t <= 0.0) throw std::logic_error("occupancy table has no mass");
    std::vector<double> out(rho);
    for (double& v : out) v /= t;
    return out;
  }
};

// Dynamic-programming occupancy measure, truncated once gamma^t < 1e-12 (or
// at `horizon` steps when that is given and smaller). The policy table holds
// stochastic rows pi(a|s), length n_states * n_actions.
inline OccupancyTable occupancy_oracle(const TabularMdp& mdp, const std::vector<double>& policy,
                                       double gamma, int horizon = -1) {
  mdp.validate();
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("discount must lie in (0,1), got " + std::to_string(gamma));
  if (static_cast<int>(policy.size()) != mdp.n_states * mdp.n_actions)
    throw std::invalid_argument("policy table size mismatch");
  for (int s = 0; s < mdp.n_states; ++s) {
    double row = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double p = policy[s * mdp.n_actions + a];
      if (p < 0.0)
        throw std::invalid_argument("policy has negative probability at state " +
                                    std::to_string(s));
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-9)
      throw std::invalid_argument("policy row " + std::to_string(s) + " sums to " +
                                  std::to_string(row) + ", not 1");
  }

  OccupancyTable table;
  table.n_states = mdp.n_states;
  table.n_actions = mdp.n_actions;
  table.gamma = gamma;
  table.rho.assign(mdp.n_states * mdp.n_actions, 0.0);

  std::vector<double> dist = mdp.p0;
  std::vector<double> next_dist(mdp.n_states, 0.0);
  double discount = 1.0;
  for (int t = 0; discount >= 1e-12 && (horizon < 0 || t < horizon); ++t) {
    std::fill(next_dist.begin(), next_dist.end(), 0.0);
    for (int s = 0; s < mdp.n_states; ++s) {
      if (dist[s] == 0.0) continue;
      for (int a = 0; a < mdp.n_actions; ++a) {
        const double mass = dist[s] * policy[s * mdp.n_actions + a];
        table.rho[s * mdp.n_actions + a] += discount * mass;
        next_dist[mdp.next[s * mdp.n_actions + a]] += mass;
      }
    }
    dist.swap(next_dist);
    discount *= gamma;
  }
  return table;
}

// Exact Jensen-Shannon divergence (natural log) between two probability
// distributions over the same support; lies in [0, log 2].
inline double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("distributions have different support sizes");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("distribution has negative mass");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw std::invalid_argument("inputs must be normalized (sums " + std::to_string(sp) + ", " +
                                std::to_string(sq) + ")");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
  }
  return js;
}

}  // namespace pgfdc
