#include "psgld/forward/monitor.hpp"
#include "psgld/mdp/mdp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace psgld;

#ifndef PSGLD_DATA_DIR
#define PSGLD_DATA_DIR "data"
#endif

namespace {

ParamVector random_angles(int d, RandomSource& rng) {
  ParamVector t(d);
  for (int i = 0; i < d; ++i) t[i] = kPi * rng.uniform();
  return t;
}

TabularMdp permuted(const TabularMdp& m, const std::vector<int>& perm) {
  TabularMdp q = m;
  for (int s = 0; s < m.n_states; ++s) {
    q.rho0[perm[s]] = m.rho0[s];
    for (int a = 0; a < m.n_actions; ++a) {
      q.C(perm[s], a) = m.C(s, a);
      for (int sp = 0; sp < m.n_states; ++sp) q.P(perm[s], a, perm[sp]) = m.P(s, a, sp);
    }
  }
  return q;
}

}  // namespace

TEST(PolicyProbs, TwoActionExamples) {
  const Eigen::VectorXd p = policy_probs(make_vector({kPi / 4}), 0, 2);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
  const Eigen::VectorXd q = policy_probs(make_vector({0.0}), 0, 2);
  EXPECT_EQ(q[0], 0.0);
  EXPECT_EQ(q[1], 1.0);
}

TEST(PolicyProbs, ThreeActionDisplay) {
  const Eigen::VectorXd p = policy_probs(make_vector({kPi / 2, kPi / 2}), 0, 3);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
  EXPECT_NEAR(p[2], 0.0, 1e-15);
  const double t1 = 0.4, t2 = 1.1;
  const Eigen::VectorXd r = policy_probs(make_vector({t1, t2}), 0, 3);
  const double s1 = std::sin(t1), c1 = std::cos(t1), s2 = std::sin(t2), c2 = std::cos(t2);
  EXPECT_NEAR(r[0], s1 * s1 * s2 * s2, 1e-15);
  EXPECT_NEAR(r[1], s1 * s1 * c2 * c2, 1e-15);
  EXPECT_NEAR(r[2], c1 * c1, 1e-15);
}

TEST(PolicyProbs, SimplexForManyDraws) {
  RandomSource rng(1, 0);
  for (int A : {2, 3, 4}) {
    for (int i = 0; i < 1000; ++i) {
      const ParamVector t = random_angles(2 * (A - 1), rng);
      for (int s = 0; s < 2; ++s) {
        const Eigen::VectorXd p = policy_probs(t, s, A);
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        EXPECT_GE(p.minCoeff(), 0.0);
      }
    }
  }
}

TEST(PolicyScore, MatchesFiniteDifferencesOfLogProbs) {
  RandomSource rng(2, 0);
  for (int A : {2, 3, 4}) {
    for (int trial = 0; trial < 50; ++trial) {
      ParamVector t = random_angles(2 * (A - 1), rng);
      t = t.cwiseMax(0.2).cwiseMin(kPi - 0.2);  // keep away from zero-mass edges
      for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < A; ++a) {
          const ParamVector g = policy_score(t, s, a, A);
          for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double h = 1e-6;
            ParamVector tp = t, tm = t;
            tp[i] += h;
            tm[i] -= h;
            const double fd = (std::log(policy_probs(tp, s, A)[a]) - std::log(policy_probs(tm, s, A)[a])) / (2 * h);
            EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "A=" << A << " s=" << s << " a=" << a;
          }
        }
      }
    }
  }
}

TEST(PolicyScore, ClosedFormForTwoActions) {
  const double t = 0.7;
  EXPECT_NEAR(policy_score(make_vector({t}), 0, 0, 2)[0], 2.0 / std::tan(t), 1e-12);
  EXPECT_NEAR(policy_score(make_vector({t}), 0, 1, 2)[0], -2.0 * std::tan(t), 1e-12);
}

TEST(ExactCost, UniformCostGeometricSeries) {
  TabularMdp m = default_test_mdp();
  for (auto& c : m.cost) c = 0.7;
  RandomSource rng(3, 0);
  for (int i = 0; i < 10; ++i) {
    const ParamVector t = random_angles(2, rng);
    EXPECT_NEAR(exact_cost(m, t, 0.0, Regularizer::L2), 0.7 / (1 - 0.9), 1e-12);
  }
}

TEST(ExactCost, ZeroCostZeroLambda) {
  TabularMdp m = default_test_mdp();
  for (auto& c : m.cost) c = 0.0;
  EXPECT_EQ(exact_cost(m, make_vector({0.3, 1.2}), 0.0, Regularizer::L2), 0.0);
}

TEST(ExactCost, MatchesMonteCarloRollouts) {
  const TabularMdp m = default_test_mdp();
  const ParamVector t = make_vector({0.8, 2.1});
  const double J = exact_cost(m, t, 0.0, Regularizer::L2);
  const int horizon = 300;  // 0.9^300 tail is ~1e-13
  RandomSource rng(4, 0);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const Trajectory tr = sample_trajectory(m, t, horizon, rng);
    double v = 0, g = 1;
    for (double c : tr.costs) {
      v += g * c;
      g *= m.discount;
    }
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, J, 3 * se);
  EXPECT_LT(truncation_tail_bound(m, horizon), 1e-10);
}

TEST(ExactCost, TruncationConvergesToInfiniteHorizon) {
  const TabularMdp m = default_test_mdp();
  const ParamVector t = make_vector({1.0, 0.5});
  for (int H : {10, 30, 100}) {
    const double gap = exact_cost(m, t, 0.1, Regularizer::L2) - exact_cost_truncated(m, t, 0.1, Regularizer::L2, H);
    EXPECT_GE(gap, 0.0);
    EXPECT_LE(gap, truncation_tail_bound(m, H) + 1e-12);
  }
}

TEST(ExactCost, InvariantUnderStateRelabeling) {
  TabularMdp m;
  m.n_states = 3;
  m.n_actions = 2;
  m.discount = 0.8;
  m.rho0 = {0.2, 0.5, 0.3};
  m.transition = {0.1, 0.6, 0.3, 0.5, 0.25, 0.25, 0.3, 0.3, 0.4, 0.0, 0.9, 0.1, 0.7, 0.2, 0.1, 0.05, 0.05, 0.9};
  m.cost = {1.0, 0.3, 0.5, 2.0, 0.1, 0.9};
  m.validate();
  const std::vector<int> perm = {2, 0, 1};
  const TabularMdp q = permuted(m, perm);
  q.validate();
  const ParamVector t = make_vector({0.3, 1.9, 2.6});
  ParamVector tq(3);
  for (int s = 0; s < 3; ++s) tq[perm[s]] = t[s];
  for (auto reg : {Regularizer::L2, Regularizer::NegEntropy}) {
    EXPECT_NEAR(exact_cost(m, t, 0.2, reg), exact_cost(q, tq, 0.2, reg), 1e-12);
  }
}

TEST(Regularizer, GradientsMatchFiniteDifferences) {
  RandomSource rng(5, 0);
  for (int A : {2, 3}) {
    for (auto reg : {Regularizer::L2, Regularizer::NegEntropy}) {
      for (int trial = 0; trial < 20; ++trial) {
        const ParamVector t = random_angles(2 * (A - 1), rng).cwiseMax(0.1).cwiseMin(kPi - 0.1);
        const ParamVector g = regularizer_grad(t, reg, 2, A);
        for (Eigen::Index i = 0; i < t.size(); ++i) {
          const double h = 1e-6;
          ParamVector tp = t, tm = t;
          tp[i] += h;
          tm[i] -= h;
          const double fd = (regularizer_value(tp, reg, 2, A) - regularizer_value(tm, reg, 2, A)) / (2 * h);
          EXPECT_NEAR(g[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }
}

TEST(Regularizer, EntropySlopesWithinLipschitzBound) {
  for (int A : {2, 3, 4}) {
    const double bound = regularizer_lipschitz_bound(Regularizer::NegEntropy, 2, A);
    RandomSource rng(6, A);
    double worst = 0;
    for (int i = 0; i < 2000; ++i) {
      const ParamVector t = random_angles(2 * (A - 1), rng);
      const ParamVector u = rng.normal_vector(t.size()).normalized();
      const double h = 1e-4;
      ParamVector tp = (t + h * u).cwiseMax(0.0).cwiseMin(kPi), tm = (t - h * u).cwiseMax(0.0).cwiseMin(kPi);
      const double dist = (tp - tm).norm();
      if (dist == 0) continue;
      const double slope = std::abs(regularizer_value(tp, Regularizer::NegEntropy, 2, A) -
                                    regularizer_value(tm, Regularizer::NegEntropy, 2, A)) / dist;
      worst = std::max(worst, slope);
    }
    EXPECT_LE(worst, bound) << "A=" << A;
  }
}

TEST(Reinforce, ZeroCostReturnsRegularizerGradient) {
  TabularMdp m = default_test_mdp();
  for (auto& c : m.cost) c = 0.0;
  RandomSource rng(7, 0);
  const ParamVector t = make_vector({0.4, 2.0});
  for (int i = 0; i < 20; ++i) {
    const ParamVector g = reinforce_gradient(m, t, 0.1, Regularizer::L2, 30, rng);
    EXPECT_TRUE(g == ParamVector(0.1 * 2.0 * t));
  }
}

TEST(Reinforce, DeterministicChainIsSeedIndependent) {
  // Point-mass transitions; at θ = π/2 every state picks action 0 surely and
  // its score 2cot(π/2) vanishes, so only λ∇f remains.
  TabularMdp m = default_test_mdp();
  m.transition = {0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0};
  const ParamVector t = make_vector({kPi / 2, kPi / 2});
  const ParamVector expected = 0.1 * 2.0 * t;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomSource rng(seed, 0);
    const ParamVector g = reinforce_gradient(m, t, 0.1, Regularizer::L2, 30, rng);
    EXPECT_NEAR((g - expected).norm(), 0.0, 1e-12);
  }
}

TEST(Reinforce, MeanMatchesTruncatedCostGradient) {
  const TabularMdp m = default_test_mdp();
  const ParamVector t = make_vector({1.0, 2.0});
  const int H = 30;
  const CostModel c = mdp_cost(m, 0.1, Regularizer::L2, H);
  const ParamVector fd = c.grad(t);
  RandomSource rng(8, 0);
  const int n = 10000;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2), s2 = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) {
    const ParamVector g = reinforce_gradient(m, t, 0.1, Regularizer::L2, H, rng);
    s += g;
    s2 += g.cwiseProduct(g);
  }
  for (int j = 0; j < 2; ++j) {
    const double mean = s[j] / n, se = std::sqrt((s2[j] / n - mean * mean) / n);
    EXPECT_NEAR(mean, fd[j], 3 * se) << j;
  }
}

TEST(MdpFile, CommittedFileMatchesBuiltin) {
  const TabularMdp f = load_mdp(std::string(PSGLD_DATA_DIR) + "/two_state.mdp");
  const TabularMdp b = default_test_mdp();
  EXPECT_EQ(f.n_states, b.n_states);
  EXPECT_EQ(f.n_actions, b.n_actions);
  EXPECT_EQ(f.discount, b.discount);
  EXPECT_EQ(f.rho0, b.rho0);
  EXPECT_EQ(f.transition, b.transition);
  EXPECT_EQ(f.cost, b.cost);
}

TEST(MdpFile, RejectsMalformedInput) {
  auto parse = [](const std::string& s) {
    std::istringstream is(s);
    return parse_mdp(is);
  };
  EXPECT_THROW(parse("states 1\nactions 2\nrho0 1\ntransition 0 0 1\ncost 0 1 1\n"), Error);  // missing row
  EXPECT_THROW(parse("states 1\nactions 2\nrho0 1\ntransition 0 0 1\ntransition 0 1 0.5\ncost 0 1 1\n"), Error);
  EXPECT_THROW(parse("states 1\nactions 2\nbogus 3\n"), Error);
  EXPECT_NO_THROW(parse("states 1\nactions 2\nrho0 1\ntransition 0 0 1\ntransition 0 1 1\ncost 0 1 1 # ok\n"));
}

TEST(ReinforceForward, ZeroCostContractsGeometrically) {
  TabularMdp m = default_test_mdp();
  for (auto& c : m.cost) c = 0.0;
  ReinforceConfig rc;
  rc.eta = 0.1;
  rc.lambda = 0.5;
  rc.c_opt = 1e-3;
  rc.max_iters = 50;
  rc.dist = ScaledDistribution(gaussian_base(2, 0.25), 1.0);
  const auto ev = run_reinforce_forward(m, rc, RandomSource(9, 0), make_vector({1.0, 2.0}));
  for (int k = 0; k < 20; ++k) {
    EXPECT_NEAR(ev[k].theta[0], std::pow(0.9, k), 1e-12);
    EXPECT_NEAR(ev[k].theta[1], 2.0 * std::pow(0.9, k), 1e-12);
  }
}

TEST(ReinforceForward, PassesGradientFloorAndSeedsDiffer) {
  const TabularMdp m = default_test_mdp();
  ReinforceConfig rc;
  rc.max_iters = 300;
  rc.dist = ScaledDistribution(gaussian_base(2, 0.25), 1.0);
  const auto a = run_reinforce_forward(m, rc, RandomSource(10, 0));
  const auto b = run_reinforce_forward(m, rc, RandomSource(10, 1));
  EXPECT_TRUE(monitor_assumptions(a, rc.c_opt).pass_grad_floor);
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) differ |= a[i].theta != b[i].theta;
  EXPECT_TRUE(differ);
  for (const auto& e : a) {
    EXPECT_GE(e.theta.minCoeff(), 0.0);
    EXPECT_LE(e.theta.maxCoeff(), kPi);
  }
}
