#include "psgld/metrics/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace psgld;

namespace {

// Exact W2 between equal-size uniform clouds by enumerating all couplings
// that are permutations (optimal for uniform weights).
double brute_force_w2(const SampleCloud& a, const SampleCloud& b) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[perm[i]]).squaredNorm();
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / a.size());
}

SampleCloud cloud1(std::initializer_list<double> v) {
  SampleCloud c;
  for (double x : v) c.push_back(make_vector({x}));
  return c;
}

}  // namespace

TEST(W1dExact, Examples) {
  EXPECT_EQ(w2_1d_exact(cloud1({0, 1}), cloud1({0, 1})), 0.0);
  EXPECT_NEAR(w2_1d_exact(cloud1({0, 2}), cloud1({1, 3})), 1.0, 1e-15);
  EXPECT_NEAR(w2_1d_exact(cloud1({0}), cloud1({-2.5})), 2.5, 1e-15);
  EXPECT_THROW(w2_1d_exact(SampleCloud{}, cloud1({1})), Error);
}

TEST(W1dExact, MatchesPermutationBruteForce) {
  RandomSource rng(1, 0);
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 1 + static_cast<int>(rng.uniform_index(6));
    SampleCloud a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(rng.normal_vector(1));
      b.push_back(2.0 * rng.normal_vector(1) + make_vector({0.5}));
    }
    EXPECT_NEAR(w2_1d_exact(a, b), brute_force_w2(a, b), 1e-12);
  }
}

TEST(W1dExact, MetricAxioms) {
  RandomSource rng(2, 0);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<double> a(20), b(20), c(20);
    for (auto* v : {&a, &b, &c})
      for (auto& x : *v) x = rng.normal() * (1 + inst % 3);
    EXPECT_EQ(w2_1d_exact(a, a), 0.0);
    EXPECT_DOUBLE_EQ(w2_1d_exact(a, b), w2_1d_exact(b, a));
    EXPECT_LE(w2_1d_exact(a, c), w2_1d_exact(a, b) + w2_1d_exact(b, c) + 1e-12);
  }
}

TEST(W1dExact, UnequalSizesUseQuantileResampling) {
  // Same law, very different counts: distance should be small.
  RandomSource rng(3, 0);
  std::vector<double> a(5000), b(700);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  EXPECT_LT(w2_1d_exact(a, b), 0.1);
  // Resampling a uniform grid of 10 points to 5 keeps every other midpoint.
  std::vector<double> g(10);
  std::iota(g.begin(), g.end(), 0.0);
  EXPECT_NEAR(w2_1d_exact(g, {1, 3, 5, 7, 9}), 0.0, 1e-15);
}

TEST(WSliced, IdenticalAndOrderInvariant) {
  RandomSource gen(4, 0);
  SampleCloud a;
  for (int i = 0; i < 30; ++i) a.push_back(gen.normal_vector(2));
  RandomSource r1(5, 0), r2(5, 0);
  EXPECT_EQ(w2_sliced(a, a, 64, r1), 0.0);
  SampleCloud b = a, c = a;
  for (auto& p : b) p += make_vector({0.3, 0.1});
  c = b;
  std::reverse(c.begin(), c.end());
  RandomSource r3(6, 0), r4(6, 0);
  EXPECT_DOUBLE_EQ(w2_sliced(a, b, 64, r3), w2_sliced(a, c, 64, r4));
}

TEST(WSliced, TranslationAgainstExactAssignment) {
  // For a pure translation t every projected coupling is the shift, so
  // sliced² = E⟨u,t⟩² = ‖t‖²/N, while the exact W2 equals ‖t‖.
  RandomSource gen(7, 0);
  SampleCloud a;
  for (int i = 0; i < 4; ++i) a.push_back(gen.normal_vector(2));
  const ParamVector t = make_vector({0.6, -0.8});
  SampleCloud b = a;
  for (auto& p : b) p += t;
  EXPECT_NEAR(brute_force_w2(a, b), 1.0, 1e-12);
  RandomSource rng(8, 0);
  const double s = w2_sliced(a, b, 4000, rng);
  EXPECT_LE(s, brute_force_w2(a, b) + 1e-12);
  EXPECT_NEAR(s, 1.0 / std::sqrt(2.0), 0.03);
  EXPECT_THROW(w2_sliced(cloud1({1}), cloud1({2}), 4, rng), Error);
}

TEST(WGaussian, OracleValues) {
  EXPECT_EQ(w2_gaussian_1d(0, std::sqrt(0.5), 0, std::sqrt(0.5)), 0.0);
  EXPECT_NEAR(w2_gaussian_1d(0, 1, 1, 1), 1.0, 1e-15);
  EXPECT_NEAR(w2_gaussian_1d(0, 1, 0, 2), 1.0, 1e-15);
  EXPECT_THROW(w2_gaussian_1d(0, -1, 0, 1), Error);
}

TEST(WGaussian, QuantileReferenceConverges) {
  RandomSource rng(9, 0);
  std::vector<double> a(20000);
  for (auto& x : a) x = std::sqrt(0.5) * rng.normal();
  EXPECT_LT(w2_to_gaussian_quantiles(a, 0, std::sqrt(0.5)), 0.03);
  for (auto& x : a) x += 1.0;
  EXPECT_NEAR(w2_to_gaussian_quantiles(a, 0, std::sqrt(0.5)), 1.0, 0.03);
}

TEST(L1Grid, Examples) {
  GridSpec g{make_vector({-2.0}), make_vector({2.0}), 201};
  const GridFunction f = evaluate_on_grid(g, [](const ParamVector& x) { return x[0] * x[0]; });
  EXPECT_EQ(l1_grid_error(f, f), 0.0);
  GridFunction h = f;
  for (auto& v : h.values) v += 0.3;
  EXPECT_NEAR(l1_grid_error(f, h), 4 * 0.3, 1e-12);
  GridSpec s{make_vector({0.0}), make_vector({kPi}), 2001};
  const GridFunction sn = evaluate_on_grid(s, [](const ParamVector& x) { return std::sin(x[0]); });
  const GridFunction zero = evaluate_on_grid(s, [](const ParamVector&) { return 0.0; });
  EXPECT_NEAR(l1_grid_error(sn, zero), 2.0, 1e-5);
  GridSpec other{make_vector({-2.0}), make_vector({2.0}), 101};
  EXPECT_THROW(l1_grid_error(f, evaluate_on_grid(other, [](const ParamVector&) { return 0.0; })), Error);
}

TEST(L1Grid, NormProperties) {
  GridSpec g{make_vector({-1.0, 0.0}), make_vector({1.0, 2.0}), 21};
  RandomSource rng(10, 0);
  auto rand_fn = [&] {
    GridFunction f{g, std::vector<double>(g.size())};
    for (auto& v : f.values) v = rng.normal();
    return f;
  };
  const GridFunction a = rand_fn(), b = rand_fn(), c = rand_fn();
  GridFunction a3 = a, b3 = b;
  for (auto& v : a3.values) v *= 3;
  for (auto& v : b3.values) v *= 3;
  EXPECT_GT(l1_grid_error(a, b), 0.0);
  EXPECT_NEAR(l1_grid_error(a3, b3), 3 * l1_grid_error(a, b), 1e-12);
  EXPECT_LE(l1_grid_error(a, c), l1_grid_error(a, b) + l1_grid_error(b, c) + 1e-12);
  // 2-D constant difference integrates to area × |c|.
  GridFunction d = a;
  for (auto& v : d.values) v -= 0.5;
  EXPECT_NEAR(l1_grid_error(a, d), 4 * 0.5, 1e-12);
}

TEST(Moments, Examples) {
  const MomentReport r = moment_report(cloud1({-1, 1}));
  EXPECT_EQ(r.mean[0], 0.0);
  EXPECT_EQ(r.covariance(0, 0), 2.0);
  const MomentReport c = moment_report(cloud1({0.7, 0.7, 0.7}));
  EXPECT_EQ(c.covariance(0, 0), 0.0);
  EXPECT_THROW(moment_report(cloud1({1})), Error);
}

TEST(Moments, GaussianVarianceWithinStandardErrors) {
  RandomSource rng(11, 0);
  SampleCloud c;
  for (int i = 0; i < 100000; ++i) c.push_back(std::sqrt(0.5) * rng.normal_vector(1));
  const MomentReport r = moment_report(c);
  EXPECT_NEAR(r.covariance(0, 0), 0.5, 3 * r.se_variance[0]);
  EXPECT_NEAR(r.fourth_central[0], 3 * 0.25, 0.03);
  EXPECT_NEAR(r.mean[0], 0.0, 3 * r.se_mean[0]);
}

TEST(Autocorrelation, IidNearZeroAndTrendPositive) {
  RandomSource rng(12, 0);
  std::vector<double> x(2000), y(2000);
  for (auto& v : x) v = rng.normal();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);
  EXPECT_LT(std::abs(lag1_autocorrelation(x)), 3 / std::sqrt(2000.0));
  EXPECT_GT(lag1_autocorrelation(y), 0.99);
}
