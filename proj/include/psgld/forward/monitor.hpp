#pragma once

#include "psgld/forward/events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace psgld {

struct AssumptionReport {
  double min_grad_norm = 0.0;
  double min_cond_var_estimate = 0.0;
  double max_sq_norm_estimate = 0.0;
  bool pass_grad_floor = false;      // i
  bool pass_cond_variance = false;   // ii
  bool pass_second_moment = false;   // iii
  bool pass_initial_draw = false;    // iv
  std::size_t events_used = 0;
};

struct MonitorOptions {
  double M_theta = std::numeric_limits<double>::infinity();
  double variance_floor = 1e-8;  // b₂
  int n_bins = 10;
};

namespace detail {
// Trace of the residual covariance of y regressed on [1, x], i.e. the part of
// the gradient not explained by a local linear function of the previous
// iterate.
inline double residual_variance(const std::vector<const ParamVector*>& xs,
                                const std::vector<const ParamVector*>& ys) {
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index p = xs.front()->size() + 1;
  const Eigen::Index q = ys.front()->size();
  if (n <= p + 1) return std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd X(n, p), Y(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X.row(i).tail(p - 1) = xs[static_cast<std::size_t>(i)]->transpose();
    Y.row(i) = ys[static_cast<std::size_t>(i)]->transpose();
  }
  const Eigen::MatrixXd coef = X.colPivHouseholderQr().solve(Y);
  const double rss = (Y - X * coef).squaredNorm();
  return rss / static_cast<double>(n - p);
}
}  // namespace detail

// Empirical check of the forward-process conditions. The terminal event is
// excluded from the gradient floor because its gradient never drives a step.
inline AssumptionReport monitor_assumptions(const std::vector<GradientEvent>& events, double c_opt,
                                            const MonitorOptions& opt = {}) {
  AssumptionReport rep;
  const bool any_step = std::any_of(events.begin(), events.end(), [](const auto& e) { return !e.terminal; });
  if (!any_step) throw Error("monitor_assumptions: need at least one non-terminal event");

  rep.min_grad_norm = std::numeric_limits<double>::infinity();
  double sq = 0.0;
  for (const auto& e : events) {
    sq += e.theta.squaredNorm();
    if (e.terminal) continue;
    rep.min_grad_norm = std::min(rep.min_grad_norm, e.noisy_grad.norm());
    ++rep.events_used;
  }
  rep.max_sq_norm_estimate = sq / static_cast<double>(events.size());
  rep.pass_grad_floor = rep.min_grad_norm >= c_opt;
  rep.pass_second_moment = rep.max_sq_norm_estimate <= opt.M_theta;
  rep.pass_initial_draw = events.front().reinit;

  // Conditional variance: pairs (θ_{k-1}, ∇̂J(θ_k)) over SGD continuations,
  // grouped into equal-count bins along the first coordinate of θ_{k-1}.
  std::vector<std::size_t> pairs;
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (!events[i].reinit) pairs.push_back(i);
  }
  std::sort(pairs.begin(), pairs.end(), [&](std::size_t a, std::size_t b) {
    return events[a - 1].theta[0] < events[b - 1].theta[0];
  });
  const std::size_t bins = static_cast<std::size_t>(std::max(1, opt.n_bins));
  double min_var = std::numeric_limits<double>::infinity();
  bool any_bin = false;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = pairs.size() * b / bins, hi = pairs.size() * (b + 1) / bins;
    std::vector<const ParamVector*> xs, ys;
    for (std::size_t j = lo; j < hi; ++j) {
      xs.push_back(&events[pairs[j] - 1].theta);
      ys.push_back(&events[pairs[j]].noisy_grad);
    }
    if (xs.empty()) continue;
    const double v = detail::residual_variance(xs, ys);
    if (std::isnan(v)) continue;
    min_var = std::min(min_var, v);
    any_bin = true;
  }
  rep.min_cond_var_estimate = any_bin ? min_var : std::numeric_limits<double>::quiet_NaN();
  rep.pass_cond_variance = any_bin && min_var >= opt.variance_floor;
  return rep;
}

}  // namespace psgld
