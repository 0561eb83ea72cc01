#include "psgld/forward/learners.hpp"
#include "psgld/reconstruct/reconstruct.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace psgld;

namespace {

SgdConfig sgd_cfg(std::int64_t iters) {
  SgdConfig c;
  c.eta = 0.1;
  c.c_opt = 0.05;
  c.max_iters = iters;
  c.dist = ScaledDistribution(gaussian_base(1, 0.25), 1.0);
  return c;
}

ReconstructConfig recon_cfg(std::int64_t T, std::int64_t k_hat) {
  ReconstructConfig c;
  c.T = T;
  c.k_hat = k_hat;
  c.theta_box = cube_box(1, -2.0, 2.0);
  c.psgld.epsilon = 0.01;
  c.psgld.beta = 2.0;
  c.psgld.delta = 0.3;
  c.psgld.dist = ScaledDistribution(gaussian_base(1, 3.0), 0.3);
  return c;
}

}  // namespace

TEST(Box, Basics) {
  const Box b = cube_box(2, -1.0, 1.0);
  EXPECT_DOUBLE_EQ(b.volume(), 4.0);
  EXPECT_TRUE(b.contains(make_vector({1.0, -1.0})));
  EXPECT_FALSE(b.contains(make_vector({1.0001, 0.0})));
  const Box big = b.inflate(1.0);
  EXPECT_EQ(big, cube_box(2, -2.0, 2.0));
}

TEST(Sampling, SingleStreamMatchesRunPsgld) {
  auto cfg = recon_cfg(1, 300);
  cfg.theta_box = cube_box(1, -1e9, 1e9);
  const auto factory = reinit_sgd_factory(quadratic_cost(1), sgd_cfg(1000), 11);
  const RandomSource rng(5, 1);
  const auto S = run_sequential_sampling(factory, cfg, rng);
  ASSERT_EQ(S.samples.size(), 1u);
  auto fwd = factory(0);
  RandomSource r = rng.derive(0);
  const auto st = run_psgld(*fwd, cfg.psgld, cfg.k_hat, r);
  EXPECT_EQ(S.samples[0][0], st.alpha[0]);
}

TEST(Sampling, DegenerateBoxGivesNoSamples) {
  auto cfg = recon_cfg(20, 100);
  cfg.theta_box = cube_box(1, 0.25, 0.25);
  const auto S = run_sequential_sampling(reinit_sgd_factory(quadratic_cost(1), sgd_cfg(500), 3), cfg, RandomSource(3, 1));
  EXPECT_EQ(S.samples.size(), 0u);
  EXPECT_EQ(S.T_attempted, 20);
  EXPECT_THROW(kde_estimate(S, 0.5, gaussian_kernel(1)), Error);
}

TEST(Sampling, DeterministicAcrossThreadCounts) {
  auto cfg = recon_cfg(40, 200);
  const auto f = reinit_sgd_factory(quadratic_cost(1), sgd_cfg(500), 9);
  const auto a = run_sequential_sampling(f, cfg, RandomSource(9, 1));
  cfg.threads = 4;
  const auto b = run_sequential_sampling(f, cfg, RandomSource(9, 1));
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i][0], b.samples[i][0]);
  EXPECT_EQ(a.stream_ids, b.stream_ids);
}

TEST(Sampling, LagOneAutocorrelationSmall) {
  auto cfg = recon_cfg(400, 300);
  cfg.theta_box = cube_box(1, -1e9, 1e9);
  const auto S = run_sequential_sampling(reinit_sgd_factory(quadratic_cost(1), sgd_cfg(1000), 21), cfg,
                                         RandomSource(21, 1));
  std::vector<double> x;
  for (const auto& s : S.samples) x.push_back(s[0]);
  EXPECT_LT(std::abs(lag1_autocorrelation(x)), 3.0 / std::sqrt(400.0));
}

TEST(Sampling, SharedModeHonorsReinitBarrier) {
  auto cfg = recon_cfg(5, 20);
  cfg.mode = ForwardMode::Shared;
  // Forward with frequent restarts: the tiny c_opt floor is hit after a few steps.
  SgdConfig s = sgd_cfg(100000);
  s.c_opt = 0.3;
  s.eta = 0.2;
  const auto S = run_sequential_sampling(reinit_sgd_factory(quadratic_cost(1), s, 4), cfg, RandomSource(4, 1));
  EXPECT_EQ(S.all_final.size(), 5u);
  EXPECT_GE(S.discarded_events, 0);
}

TEST(Sampling, ExhaustionReportsCompletedStreams) {
  auto cfg = recon_cfg(3, 50);
  // Independent mode: stream forward has only 30 events.
  try {
    run_sequential_sampling(reinit_sgd_factory(quadratic_cost(1), sgd_cfg(30), 2), cfg, RandomSource(2, 1));
    FAIL() << "expected exhaustion";
  } catch (const StreamExhausted& e) {
    EXPECT_EQ(e.consumed(), 0);
    EXPECT_NE(std::string(e.what()).find("0 of 3 streams completed"), std::string::npos);
  }
  cfg.mode = ForwardMode::Shared;
  SgdConfig s = sgd_cfg(120);
  s.c_opt = 0.3;
  s.eta = 0.2;
  EXPECT_THROW(run_sequential_sampling(reinit_sgd_factory(quadratic_cost(1), s, 2), cfg, RandomSource(2, 1)),
               StreamExhausted);
}

TEST(Bandwidth, Schedule) {
  EXPECT_DOUBLE_EQ(bandwidth_schedule(16), 0.5);
  EXPECT_DOUBLE_EQ(bandwidth_schedule(1), 1.0);
  double prev = 2.0;
  for (int T = 1; T <= 10000; ++T) {
    const double b = bandwidth_schedule(T);
    EXPECT_LT(b, prev);
    prev = b;
  }
  EXPECT_THROW(bandwidth_schedule(0), Error);
}

TEST(Kde, SingleSampleAtOrigin) {
  const auto k = kde_estimate({make_vector({0.0})}, 1.0, 1, gaussian_kernel(1));
  EXPECT_NEAR(k(make_vector({0.0})), 1.0 / std::sqrt(2.0 * kPi), 1e-15);
  EXPECT_NEAR(k(make_vector({0.0})), 0.39894, 1e-5);
}

TEST(Kde, EffectiveBandwidth) {
  std::vector<ParamVector> s(7, make_vector({0.1}));
  const auto k = kde_estimate(s, 0.4, 28, gaussian_kernel(1));
  EXPECT_DOUBLE_EQ(k.b_S, 0.4 * 2.0);
  EXPECT_NEAR(k.b_S * std::sqrt(7.0 / 28.0), 0.4, 1e-15);
}

TEST(Kde, MassInsideBox) {
  RandomSource r(1, 0);
  std::vector<ParamVector> s;
  for (int i = 0; i < 50; ++i) s.push_back(make_vector({0.3 * r.normal()}));
  const auto k = kde_estimate(s, 0.2, 50, gaussian_kernel(1));
  const double small = integrate_grid(density_on_grid(k, cube_box(1, -0.5, 0.5).grid(401)));
  const double big = integrate_grid(density_on_grid(k, cube_box(1, -4.0, 4.0).grid(2001)));
  EXPECT_LT(small, 1.0);
  EXPECT_LE(big, 1.0 + 1e-9);
  EXPECT_NEAR(big, 1.0, 1e-3);
}

TEST(Kde, TwoDimensionalMass) {
  std::vector<ParamVector> s{make_vector({0.0, 0.0}), make_vector({0.5, -0.2})};
  const auto k = kde_estimate(s, 0.25, 2, gaussian_kernel(2));
  EXPECT_NEAR(integrate_grid(density_on_grid(k, cube_box(2, -3.0, 3.0).grid(241))), 1.0, 1e-6);
}

TEST(Kde, TranslationEquivariance) {
  std::vector<ParamVector> s{make_vector({0.0}), make_vector({0.75}), make_vector({-0.5})};
  std::vector<ParamVector> t;
  const double c = 0.5;
  for (auto v : s) t.push_back(v.array() + c);
  const auto ks = kde_estimate(s, 0.3, 3, gaussian_kernel(1));
  const auto kt = kde_estimate(t, 0.3, 3, gaussian_kernel(1));
  for (double x = -2; x <= 2; x += 0.25) EXPECT_NEAR(ks(make_vector({x})), kt(make_vector({x + c})), 1e-15);
}

TEST(CostFromDensity, ConstantDensity) {
  GridFunction d{cube_box(1, -1, 1).grid(11), std::vector<double>(11, 0.25)};
  const auto e = cost_from_density(d, 2.0, 1e-12);
  for (double v : e.cost.values) EXPECT_DOUBLE_EQ(v, -std::log(0.25) / 2.0);
  EXPECT_EQ(e.clamped_points, 0u);
}

TEST(CostFromDensity, GibbsRecoversQuadratic) {
  const double beta = 2.0;
  const GridSpec g = cube_box(1, -2, 2).grid(201);
  const auto d = evaluate_on_grid(g, [&](const ParamVector& x) {
    return std::sqrt(beta / (2 * kPi)) * std::exp(-0.5 * beta * x[0] * x[0]);
  });
  const auto e = cost_from_density(d, beta, 1e-12);
  const double shift = e.cost.values[100];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.point(i)[0];
    EXPECT_NEAR(e.cost.values[i] - shift, 0.5 * x * x, 1e-12);
  }
  const auto al = alignment_normalize(e, quadratic_cost(1), AlignMode::Min);
  EXPECT_LT(al.l1_error, 1e-12);
}

TEST(CostFromDensity, FloorCaps) {
  GridFunction d{cube_box(1, -1, 1).grid(3), {1e-30, 0.5, 0.0}};
  const auto e = cost_from_density(d, 1.0, 1e-3);
  EXPECT_DOUBLE_EQ(e.cost.values[0], -std::log(1e-3));
  EXPECT_DOUBLE_EQ(e.cost.values[2], -std::log(1e-3));
  EXPECT_EQ(e.clamped_points, 2u);
  EXPECT_THROW(cost_from_density(d, 1.0, 0.0), Error);
}

TEST(Domains, InflateAndXi) {
  const auto d = construct_domains(cube_box(1, -1, 1), 1.0, 0.01, 0.9);
  EXPECT_EQ(d.outer, cube_box(1, -2, 2));
  EXPECT_NEAR(d.xi_bound, 0.7921, 1e-15);
  EXPECT_DOUBLE_EQ(construct_domains(cube_box(1, -1, 1), 0.5, 0.0, 0.7).xi_bound, 0.49);
  try {
    construct_domains(cube_box(1, -1, 1), 0.05, 0.01, 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sqrt(rho/alpha)"), std::string::npos);
  }
}

TEST(Alignment, ShiftAndScale) {
  const GridSpec g = cube_box(1, -2, 2).grid(201);
  const CostModel J = quadratic_cost(1);
  CostEstimate e;
  e.cost = evaluate_on_grid(g, [&](const ParamVector& x) { return J.value(x) + 7.0; });
  EXPECT_NEAR(alignment_normalize(e, J, AlignMode::Min).l1_error, 0.0, 1e-12);
  EXPECT_NEAR(alignment_normalize(e, J, AlignMode::ModeMatch).l1_error, 0.0, 1e-12);
  e.cost = evaluate_on_grid(g, [&](const ParamVector& x) { return 2.0 * J.value(x); });
  // ∫_{-2}^{2} x²/2 dx = 8/3
  EXPECT_NEAR(alignment_normalize(e, J, AlignMode::Min).l1_error, 8.0 / 3.0, 1e-3);
}

TEST(Serialization, SamplesRoundTripAndGrid) {
  std::vector<ParamVector> s{make_vector({0.1, -2.5}), make_vector({1.0 / 3.0, 7e-12})};
  std::stringstream ss;
  write_samples_csv(ss, s, 2);
  EXPECT_EQ(ss.str().substr(0, 8), "x_0,x_1\n");
  const auto back = read_samples_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1][0], 1.0 / 3.0);
  EXPECT_EQ(back[0][1], -2.5);
  std::stringstream gs;
  write_grid_csv(gs, GridFunction{cube_box(1, 0, 1).grid(2), {3.0, 4.0}}, "density");
  EXPECT_EQ(gs.str(), "x_0,density\n0,3\n1,4\n");
}
