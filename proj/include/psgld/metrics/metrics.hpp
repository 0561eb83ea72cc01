#pragma once

#include "psgld/core/random.hpp"
#include "psgld/core/types.hpp"
#include "psgld/metrics/grid.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace psgld {

using SampleCloud = std::vector<ParamVector>;

inline std::vector<double> coordinate(const SampleCloud& c, int axis = 0) {
  std::vector<double> v;
  v.reserve(c.size());
  for (const auto& p : c) v.push_back(p[axis]);
  return v;
}

namespace detail {
// Empirical quantiles of sorted `v` at the m midpoints (i + ½)/m.
inline std::vector<double> resample_quantiles(const std::vector<double>& sorted, std::size_t m) {
  std::vector<double> out(m);
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = std::min(n - 1, static_cast<std::size_t>((2 * i + 1) * n / (2 * m)));
    out[i] = sorted[j];
  }
  return out;
}
}  // namespace detail

// Exact W2 between two 1-D empirical measures (sorted coupling). Unequal
// sizes are reduced to the smaller one by quantile resampling.
inline double w2_1d_exact(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error("w2_1d_exact: empty cloud");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() > b.size()) a = detail::resample_quantiles(a, b.size());
  if (b.size() > a.size()) b = detail::resample_quantiles(b, a.size());
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(static_cast<double>(s / a.size()));
}

inline double w2_1d_exact(const SampleCloud& a, const SampleCloud& b) {
  if (a.empty() || b.empty()) throw Error("w2_1d_exact: empty cloud");
  require(a.front().size() == 1 && b.front().size() == 1, "w2_1d_exact: clouds must be one-dimensional");
  return w2_1d_exact(coordinate(a), coordinate(b));
}

// Sliced W2: root mean of squared 1-D distances over random unit directions.
inline double w2_sliced(const SampleCloud& a, const SampleCloud& b, int n_proj, RandomSource& rng) {
  if (a.empty() || b.empty()) throw Error("w2_sliced: empty cloud");
  const Eigen::Index n = a.front().size();
  require(n >= 2 && b.front().size() == n, "w2_sliced: clouds must share a dimension >= 2");
  require(n_proj >= 1, "w2_sliced: n_proj must be >= 1");
  double acc = 0.0;
  std::vector<double> pa(a.size()), pb(b.size());
  for (int k = 0; k < n_proj; ++k) {
    ParamVector u = rng.normal_vector(n);
    u.normalize();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = u.dot(a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = u.dot(b[i]);
    const double d = w2_1d_exact(pa, pb);
    acc += d * d;
  }
  return std::sqrt(acc / n_proj);
}

inline double w2_gaussian_1d(double m1, double s1, double m2, double s2) {
  require(s1 >= 0.0 && s2 >= 0.0, "w2_gaussian_1d: standard deviations must be >= 0");
  return std::sqrt((m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2));
}

// W2 between a 1-D sample and N(mean, sd²), using the Gaussian quantiles at
// (i + ½)/n as the reference measure.
inline double w2_to_gaussian_quantiles(std::vector<double> a, double mean, double sd) {
  if (a.empty()) throw Error("w2_to_gaussian_quantiles: empty cloud");
  std::sort(a.begin(), a.end());
  const boost::math::normal_distribution<double> nd(mean, sd);
  long double s = 0.0L;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double q = boost::math::quantile(nd, (i + 0.5) / static_cast<double>(n));
    s += static_cast<long double>(a[i] - q) * (a[i] - q);
  }
  return std::sqrt(static_cast<double>(s / n));
}

// Trapezoid ∫_Θ |f − g|.
inline double l1_grid_error(const GridFunction& f, const GridFunction& g) {
  if (!(f.grid == g.grid) || f.values.size() != g.values.size()) throw Error("l1_grid_error: grid mismatch");
  const auto w = trapezoid_weights(f.grid);
  long double s = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) s += static_cast<long double>(w[i]) * std::abs(f.values[i] - g.values[i]);
  return static_cast<double>(s);
}

struct MomentReport {
  std::size_t n = 0;
  ParamVector mean;
  Eigen::MatrixXd covariance;  // unbiased
  ParamVector fourth_central;  // per coordinate, biased plug-in
  ParamVector se_mean;         // √(var/n)
  ParamVector se_variance;     // √((μ₄ − σ⁴)/n)
};

inline MomentReport moment_report(const SampleCloud& cloud) {
  if (cloud.size() < 2) throw Error("moment_report: need at least two points");
  const Eigen::Index d = cloud.front().size();
  const double n = static_cast<double>(cloud.size());
  MomentReport r;
  r.n = cloud.size();
  r.mean = ParamVector::Zero(d);
  for (const auto& p : cloud) r.mean += p;
  r.mean /= n;
  // Second pass removes the rounding error of the first mean (exact zero
  // spread for constant clouds).
  ParamVector corr = ParamVector::Zero(d);
  for (const auto& p : cloud) corr += p - r.mean;
  r.mean += corr / n;
  r.covariance = Eigen::MatrixXd::Zero(d, d);
  r.fourth_central = ParamVector::Zero(d);
  for (const auto& p : cloud) {
    const ParamVector c = p - r.mean;
    r.covariance += c * c.transpose();
    r.fourth_central += c.array().pow(4).matrix();
  }
  r.covariance /= (n - 1.0);
  r.fourth_central /= n;
  r.se_mean.resize(d);
  r.se_variance.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double v = r.covariance(i, i);
    r.se_mean[i] = std::sqrt(v / n);
    r.se_variance[i] = std::sqrt(std::max(0.0, r.fourth_central[i] - v * v) / n);
  }
  return r;
}

// Lag-1 autocorrelation of an ordered sequence.
inline double lag1_autocorrelation(const std::vector<double>& x) {
  require(x.size() >= 3, "lag1_autocorrelation: need at least three values");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    if (i + 1 < x.size()) num += (x[i] - mean) * (x[i + 1] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace psgld
