#pragma once

#include "psgld/core/cost_model.hpp"
#include "psgld/core/distributions.hpp"
#include "psgld/core/random.hpp"
#include "psgld/forward/learners.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

namespace psgld {

struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // P[s][a][s'], row-major
  std::vector<double> cost;        // C[s][a]
  double discount = 0.9;
  std::vector<double> rho0;

  double P(int s, int a, int sp) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + sp];
  }
  double& P(int s, int a, int sp) {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + sp];
  }
  double C(int s, int a) const { return cost[static_cast<std::size_t>(s) * n_actions + a]; }
  double& C(int s, int a) { return cost[static_cast<std::size_t>(s) * n_actions + a]; }

  int policy_dim() const { return (n_actions - 1) * n_states; }

  double max_cost() const {
    double c = 0.0;
    for (double v : cost) c = std::max(c, v);
    return c;
  }

  void validate() const {
    require(n_states >= 1, "mdp: states must be >= 1");
    require(n_actions >= 2, "mdp: actions must be >= 2");
    require(discount >= 0.0 && discount < 1.0, "mdp: discount must lie in [0, 1)");
    require(transition.size() == static_cast<std::size_t>(n_states) * n_actions * n_states,
            "mdp: transition table has the wrong size");
    require(cost.size() == static_cast<std::size_t>(n_states) * n_actions, "mdp: cost table has the wrong size");
    require(rho0.size() == static_cast<std::size_t>(n_states), "mdp: rho0 has the wrong size");
    double r = 0.0;
    for (double v : rho0) {
      require(v >= 0.0, "mdp: rho0 entries must be >= 0");
      r += v;
    }
    require(std::abs(r - 1.0) <= 1e-9, "mdp: rho0 must sum to 1");
    for (double v : cost) require(v >= 0.0 && std::isfinite(v), "mdp: costs must be finite and >= 0");
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        double t = 0.0;
        for (int sp = 0; sp < n_states; ++sp) {
          require(P(s, a, sp) >= 0.0, "mdp: negative transition probability");
          t += P(s, a, sp);
        }
        if (std::abs(t - 1.0) > 1e-9) {
          throw Error("mdp: transition row (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                      ") does not sum to 1");
        }
      }
    }
  }
};

// Text format, one directive per line, '#' starts a comment:
//   states <S>
//   actions <A>
//   discount <γ>
//   rho0 <p_0> ... <p_{S-1}>
//   transition <s> <a> <P(s'=0)> ... <P(s'=S-1)>   (one line per (s, a))
//   cost <s> <C(s,0)> ... <C(s,A-1)>                (one line per s)
inline TabularMdp parse_mdp(std::istream& is) {
  TabularMdp m;
  std::string line;
  int lineno = 0;
  std::vector<bool> seen_t, seen_c;
  auto fail = [&](const std::string& msg) {
    throw Error("mdp file line " + std::to_string(lineno) + ": " + msg);
  };
  auto sized = [&] {
    if (m.n_states < 1 || m.n_actions < 1) fail("states and actions must be declared first");
    if (m.transition.empty()) {
      m.transition.assign(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
      m.cost.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
      seen_t.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, false);
      seen_c.assign(static_cast<std::size_t>(m.n_states), false);
    }
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto read_int = [&] {
      long long v;
      if (!(ls >> v)) fail("expected an integer after '" + key + "'");
      return v;
    };
    auto read_reals = [&](std::size_t n) {
      std::vector<double> v(n);
      for (auto& x : v)
        if (!(ls >> x)) fail("expected " + std::to_string(n) + " numbers after '" + key + "'");
      std::string extra;
      if (ls >> extra) fail("trailing tokens after '" + key + "'");
      return v;
    };
    if (key == "states") {
      m.n_states = static_cast<int>(read_int());
    } else if (key == "actions") {
      m.n_actions = static_cast<int>(read_int());
    } else if (key == "discount") {
      m.discount = read_reals(1)[0];
    } else if (key == "rho0") {
      sized();
      m.rho0 = read_reals(static_cast<std::size_t>(m.n_states));
    } else if (key == "transition") {
      sized();
      const auto s = read_int(), a = read_int();
      if (s < 0 || s >= m.n_states || a < 0 || a >= m.n_actions) fail("state/action index out of range");
      const auto row = read_reals(static_cast<std::size_t>(m.n_states));
      for (int sp = 0; sp < m.n_states; ++sp) m.P(static_cast<int>(s), static_cast<int>(a), sp) = row[static_cast<std::size_t>(sp)];
      seen_t[static_cast<std::size_t>(s * m.n_actions + a)] = true;
    } else if (key == "cost") {
      sized();
      const auto s = read_int();
      if (s < 0 || s >= m.n_states) fail("state index out of range");
      const auto row = read_reals(static_cast<std::size_t>(m.n_actions));
      for (int a = 0; a < m.n_actions; ++a) m.C(static_cast<int>(s), a) = row[static_cast<std::size_t>(a)];
      seen_c[static_cast<std::size_t>(s)] = true;
    } else {
      fail("unknown directive '" + key + "'");
    }
  }
  sized();
  for (bool b : seen_t)
    if (!b) throw Error("mdp file: missing transition rows");
  for (bool b : seen_c)
    if (!b) throw Error("mdp file: missing cost rows");
  m.validate();
  return m;
}

inline TabularMdp load_mdp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open mdp file: " + path);
  return parse_mdp(f);
}

// The committed two-state, two-action test MDP (data/two_state.mdp).
inline TabularMdp default_test_mdp() {
  TabularMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.discount = 0.9;
  m.rho0 = {0.6, 0.4};
  m.transition = {0.9, 0.1, 0.2, 0.8,    // s=0: a=0, a=1
                  0.7, 0.3, 0.05, 0.95};  // s=1: a=0, a=1
  m.cost = {1.0, 0.4, 0.2, 1.5};
  return m;
}

// ---- trigonometric policy ----------------------------------------------

// Angles for state s occupy theta[s·(A−1) .. s·(A−1)+A−2]. Action j (0-based
// here, j = 0 is the all-sines action): p(a_0) = Π sin²θ_i, and for j ≥ 1 with
// q = A−1−j, p(a_j) = Π_{i<q} sin²θ_i · cos²θ_q.
inline Eigen::VectorXd policy_probs(const ParamVector& theta, int s, int n_actions) {
  const int d = n_actions - 1;
  Eigen::VectorXd p(n_actions);
  double prefix = 1.0;  // Π_{i<q} sin²θ_i
  for (int q = 0; q < d; ++q) {
    const double t = theta[s * d + q];
    const double c = std::cos(t), sn = std::sin(t);
    p[n_actions - 1 - q] = prefix * c * c;
    prefix *= sn * sn;
  }
  p[0] = prefix;
  return p;
}

// ∂p(a|s)/∂θ restricted to the A−1 angles of state s; rows are actions.
inline Eigen::MatrixXd policy_prob_jacobian(const ParamVector& theta, int s, int n_actions) {
  const int d = n_actions - 1;
  Eigen::VectorXd sn(d), cs(d);
  for (int i = 0; i < d; ++i) {
    sn[i] = std::sin(theta[s * d + i]);
    cs[i] = std::cos(theta[s * d + i]);
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n_actions, d);
  for (int j = 0; j < n_actions; ++j) {
    const int q = j == 0 ? d : n_actions - 1 - j;  // q = d marks the all-sines action
    for (int i = 0; i < d && i <= q; ++i) {
      double v = 1.0;
      for (int r = 0; r < q && r < d; ++r) v *= (r == i) ? 2.0 * sn[r] * cs[r] : sn[r] * sn[r];
      if (q < d) v *= (i == q) ? -2.0 * sn[q] * cs[q] : cs[q] * cs[q];
      J(j, i) = v;
    }
  }
  return J;
}

// ∇_θ log π(a|s; θ) over the full parameter vector (zero outside state s).
inline ParamVector policy_score(const ParamVector& theta, int s, int a, int n_actions) {
  const int d = n_actions - 1;
  ParamVector g = ParamVector::Zero(theta.size());
  const double p = policy_probs(theta, s, n_actions)[a];
  if (p <= 0.0) throw Error("policy_score: action has zero probability");
  const Eigen::MatrixXd J = policy_prob_jacobian(theta, s, n_actions);
  g.segment(s * d, d) = J.row(a).transpose() / p;
  return g;
}

enum class Regularizer { L2, NegEntropy };

inline Regularizer parse_regularizer(const std::string& s) {
  if (s == "l2") return Regularizer::L2;
  if (s == "entropy") return Regularizer::NegEntropy;
  throw Error("unknown regularizer '" + s + "' (expected l2 or entropy)");
}

inline double regularizer_value(const ParamVector& theta, Regularizer reg, int n_states, int n_actions) {
  if (reg == Regularizer::L2) return theta.squaredNorm();
  double f = 0.0;
  for (int s = 0; s < n_states; ++s) {
    const Eigen::VectorXd p = policy_probs(theta, s, n_actions);
    for (int a = 0; a < n_actions; ++a)
      if (p[a] > 0.0) f += p[a] * std::log(p[a]);
  }
  return f;
}

inline ParamVector regularizer_grad(const ParamVector& theta, Regularizer reg, int n_states, int n_actions) {
  if (reg == Regularizer::L2) return 2.0 * theta;
  const int d = n_actions - 1;
  ParamVector g = ParamVector::Zero(theta.size());
  for (int s = 0; s < n_states; ++s) {
    const Eigen::VectorXd p = policy_probs(theta, s, n_actions);
    const Eigen::MatrixXd J = policy_prob_jacobian(theta, s, n_actions);
    for (int a = 0; a < n_actions; ++a) {
      if (p[a] < 1e-300) continue;  // p log p → 0 with vanishing slope
      g.segment(s * d, d) += (std::log(p[a]) + 1.0) * J.row(a).transpose();
    }
  }
  return g;
}

// Lipschitz bound of the regularizer on the angle box [0, π]^d.
inline double regularizer_lipschitz_bound(Regularizer reg, int n_states, int n_actions) {
  const double d = static_cast<double>((n_actions - 1) * n_states);
  if (reg == Regularizer::L2) return 2.0 * kPi * std::sqrt(d);
  return 2.0 * n_actions * std::sqrt(d);
}

// ---- costs ----------------------------------------------------------------

inline Eigen::MatrixXd policy_transition(const TabularMdp& m, const ParamVector& theta) {
  Eigen::MatrixXd Pp = Eigen::MatrixXd::Zero(m.n_states, m.n_states);
  for (int s = 0; s < m.n_states; ++s) {
    const Eigen::VectorXd p = policy_probs(theta, s, m.n_actions);
    for (int a = 0; a < m.n_actions; ++a)
      for (int sp = 0; sp < m.n_states; ++sp) Pp(s, sp) += p[a] * m.P(s, a, sp);
  }
  return Pp;
}

inline Eigen::VectorXd policy_cost(const TabularMdp& m, const ParamVector& theta) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m.n_states);
  for (int s = 0; s < m.n_states; ++s) {
    const Eigen::VectorXd p = policy_probs(theta, s, m.n_actions);
    for (int a = 0; a < m.n_actions; ++a) c[s] += p[a] * m.C(s, a);
  }
  return c;
}

inline Eigen::VectorXd rho0_vector(const TabularMdp& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.rho0.data(), m.n_states);
}

// ρ₀ᵀ(I − γP_π)^{-1}c_π + λ f(θ)
inline double exact_cost(const TabularMdp& m, const ParamVector& theta, double lambda, Regularizer reg) {
  require(m.discount < 1.0, "exact_cost: discount must be < 1");
  const Eigen::MatrixXd A =
      Eigen::MatrixXd::Identity(m.n_states, m.n_states) - m.discount * policy_transition(m, theta);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (!(std::abs(lu.determinant()) > 0.0)) throw Error("exact_cost: singular linear system");
  const Eigen::VectorXd v = lu.solve(policy_cost(m, theta));
  return rho0_vector(m).dot(v) + lambda * regularizer_value(theta, reg, m.n_states, m.n_actions);
}

// Σ_{t<H} γ^t ρ_tᵀ c_π + λ f(θ), the same horizon REINFORCE sees.
inline double exact_cost_truncated(const TabularMdp& m, const ParamVector& theta, double lambda,
                                   Regularizer reg, int horizon) {
  const Eigen::MatrixXd Pp = policy_transition(m, theta);
  const Eigen::VectorXd c = policy_cost(m, theta);
  Eigen::RowVectorXd rho = rho0_vector(m).transpose();
  double j = 0.0, g = 1.0;
  for (int t = 0; t < horizon; ++t) {
    j += g * rho.dot(c);
    rho = rho * Pp;
    g *= m.discount;
  }
  return j + lambda * regularizer_value(theta, reg, m.n_states, m.n_actions);
}

// Bound on the infinite-horizon remainder: c_max γ^{H}/(1−γ) (the first
// omitted step is t = H).
inline double truncation_tail_bound(const TabularMdp& m, int horizon) {
  return m.max_cost() * std::pow(m.discount, horizon) / (1.0 - m.discount);
}

// ---- sampling ---------------------------------------------------------------

struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> costs;
};

inline int sample_categorical(const double* p, int n, RandomSource& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // Round-off fallback: last index with positive mass.
  for (int i = n - 1; i >= 0; --i)
    if (p[i] > 0.0) return i;
  return n - 1;
}

inline Trajectory sample_trajectory(const TabularMdp& m, const ParamVector& theta, int horizon,
                                    RandomSource& rng) {
  Trajectory tr;
  int s = sample_categorical(m.rho0.data(), m.n_states, rng);
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd p = policy_probs(theta, s, m.n_actions);
    const int a = sample_categorical(p.data(), m.n_actions, rng);
    tr.states.push_back(s);
    tr.actions.push_back(a);
    tr.costs.push_back(m.C(s, a));
    s = sample_categorical(&m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states],
                           m.n_states, rng);
  }
  return tr;
}

// Σ_t γ^t ∇log π(a_t|s_t) G_t + λ∇f, G_t = Σ_{k≥t} γ^{k−t} c_k (costs, not
// rewards: the forward learner descends J).
inline ParamVector reinforce_gradient(const TabularMdp& m, const ParamVector& theta, double lambda,
                                      Regularizer reg, int horizon, RandomSource& rng) {
  require(horizon >= 1, "reinforce_gradient: horizon must be >= 1");
  const Trajectory tr = sample_trajectory(m, theta, horizon, rng);
  std::vector<double> G(static_cast<std::size_t>(horizon));
  double acc = 0.0;
  for (int t = horizon - 1; t >= 0; --t) {
    acc = tr.costs[static_cast<std::size_t>(t)] + m.discount * acc;
    G[static_cast<std::size_t>(t)] = acc;
  }
  ParamVector g = lambda * regularizer_grad(theta, reg, m.n_states, m.n_actions);
  double disc = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const double w = disc * G[static_cast<std::size_t>(t)];
    if (w != 0.0) g += w * policy_score(theta, tr.states[static_cast<std::size_t>(t)], tr.actions[static_cast<std::size_t>(t)], m.n_actions);
    disc *= m.discount;
  }
  return g;
}

inline void project_to_angle_box(ParamVector& theta) {
  theta = theta.cwiseMax(0.0).cwiseMin(kPi);
}

// CostModel view of the regularized MDP: value is the horizon-truncated exact
// cost, grad its central finite difference, noisy_grad one REINFORCE draw.
inline CostModel mdp_cost(const TabularMdp& m, double lambda, Regularizer reg, int horizon,
                          StructuralInput constants = {}) {
  m.validate();
  CostModel c;
  c.name = "mdp";
  c.dim = m.policy_dim();
  c.value = [=](const ParamVector& t) { return exact_cost_truncated(m, t, lambda, reg, horizon); };
  c.grad = [=](const ParamVector& t) -> ParamVector {
    ParamVector g(t.size());
    const double h = 1e-5 * (1.0 + t.norm());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      ParamVector tp = t, tm = t;
      tp[i] += h;
      tm[i] -= h;
      g[i] = (exact_cost_truncated(m, tp, lambda, reg, horizon) - exact_cost_truncated(m, tm, lambda, reg, horizon)) / (2 * h);
    }
    return g;
  };
  c.noisy_grad = [=](const ParamVector& t, RandomSource& rng) {
    return reinforce_gradient(m, t, lambda, reg, horizon, rng);
  };
  constants.dim = c.dim;
  c.constants = constants;
  return c;
}

struct ReinforceConfig {
  double eta = 0.05;
  double c_opt = 0.05;
  std::int64_t max_iters = 1000;
  double lambda = 0.1;
  Regularizer reg = Regularizer::L2;
  int horizon = 30;
  ScaledDistribution dist;  // restart law before restriction to the box
};

// Restart draws are π_{0,γ} centred on the middle of the angle box and
// rejected until they land inside it.
inline std::function<ParamVector(RandomSource&)> angle_box_sampler(ScaledDistribution dist) {
  return [dist](RandomSource& rng) -> ParamVector {
    for (int tries = 0; tries < 1000000; ++tries) {
      ParamVector x = dist.sample(rng).array() + 0.5 * kPi;
      if ((x.array() >= 0.0).all() && (x.array() <= kPi).all()) return x;
    }
    throw Error("angle_box_sampler: rejection sampling failed");
  };
}

inline std::unique_ptr<ForwardStream> make_reinforce_stream(const TabularMdp& m, const ReinforceConfig& rc,
                                                            RandomSource rng,
                                                            std::optional<ParamVector> initial = std::nullopt) {
  require(rc.dist.dim() == m.policy_dim(), "run_reinforce_forward: sampling distribution dimension mismatch");
  SgdConfig cfg;
  cfg.eta = rc.eta;
  cfg.c_opt = rc.c_opt;
  cfg.max_iters = rc.max_iters;
  cfg.dist = rc.dist;
  cfg.initial_theta = std::move(initial);
  cfg.sampler = angle_box_sampler(rc.dist);
  cfg.project = project_to_angle_box;
  return std::make_unique<ReinitSgdStream>(mdp_cost(m, rc.lambda, rc.reg, rc.horizon), cfg, std::move(rng));
}

inline std::vector<GradientEvent> run_reinforce_forward(const TabularMdp& m, const ReinforceConfig& rc,
                                                        const RandomSource& rng,
                                                        std::optional<ParamVector> initial = std::nullopt) {
  auto s = make_reinforce_stream(m, rc, rng, std::move(initial));
  return collect(*s);
}

}  // namespace psgld
