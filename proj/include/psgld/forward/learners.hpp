#pragma once

#include "psgld/core/cost_model.hpp"
#include "psgld/core/distributions.hpp"
#include "psgld/core/random.hpp"
#include "psgld/forward/events.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

namespace psgld {

inline constexpr double kDivergenceNorm = 1e6;

struct SgdConfig {
  double eta = 0.1;
  double c_opt = 0.05;
  std::int64_t max_iters = 1000;
  ScaledDistribution dist;
  std::optional<ParamVector> initial_theta;
  std::int64_t max_redraws = 1000000;
  // Optional overrides: a custom restart sampler (e.g. restricted to a box)
  // and a projection applied after every step.
  std::function<ParamVector(RandomSource&)> sampler;
  std::function<void(ParamVector&)> project;

  double gamma() const { return dist.gamma(); }
};

// Step size range η ∈ (0, 1 ∧ m/(4 L_∇J²)).
inline double sgd_eta_upper(const StructuralInput& sc) {
  return std::min(1.0, sc.m / (4.0 * sc.L_gradJ * sc.L_gradJ));
}

inline void validate_sgd_config(const SgdConfig& cfg, const StructuralInput& sc) {
  const double hi = sgd_eta_upper(sc);
  if (!(cfg.eta > 0.0 && cfg.eta < hi)) {
    std::ostringstream os;
    os << "eta = " << cfg.eta << " violates η ∈ (0, 1 ∧ m/(4L_∇J²)) = (0, " << hi << ")";
    throw Error(os.str());
  }
  require(cfg.c_opt > 0.0, "c_opt must be > 0");
  require(cfg.max_iters >= 0, "max_iters must be >= 0");
  require(cfg.max_redraws >= 1, "max_redraws must be >= 1");
}

namespace detail {
inline void guard_divergence(const ParamVector& x, std::int64_t k, const char* who) {
  if (!x.allFinite() || x.norm() > kDivergenceNorm) {
    std::ostringstream os;
    os << who << ": iterate diverged at k=" << k << " (step size too large?)";
    throw DivergenceError(os.str());
  }
}
}  // namespace detail

// Re-initializing SGD. Each index k carries one emitted θ_k; when the noisy
// gradient at θ_k falls below c_opt, θ_k is redrawn from π_{0,γ} (same k,
// reinit=true) before anything is emitted. Event 0 always starts a run and is
// flagged reinit. At k = max_iters the terminal event is emitted and the
// stream ends; its gradient is evaluated but not thresholded.
class ReinitSgdStream : public ForwardStream {
 public:
  ReinitSgdStream(CostModel cost, SgdConfig cfg, RandomSource rng)
      : cost_(std::move(cost)), cfg_(std::move(cfg)), rng_(std::move(rng)) {
    require(cfg_.eta > 0.0, "run_reinit_sgd: eta must be > 0");
    require(cfg_.c_opt > 0.0, "run_reinit_sgd: c_opt must be > 0");
    theta_ = cfg_.initial_theta ? *cfg_.initial_theta : draw();
    require(theta_.size() == cost_.dim, "run_reinit_sgd: dimension mismatch");
  }

  std::optional<GradientEvent> next() override {
    if (done_) return std::nullopt;
    GradientEvent e;
    e.k = k_;
    if (k_ >= cfg_.max_iters) {
      e.theta = theta_;
      e.noisy_grad = cost_.noisy_grad(theta_, rng_);
      e.reinit = reinit_;
      e.terminal = true;
      done_ = true;
      return e;
    }
    ParamVector g = cost_.noisy_grad(theta_, rng_);
    std::int64_t redraws = 0;
    while (g.norm() < cfg_.c_opt) {
      if (++redraws > cfg_.max_redraws) {
        throw Error("run_reinit_sgd: no draw from the sampling distribution reached c_opt after " +
                    std::to_string(cfg_.max_redraws) + " attempts");
      }
      theta_ = draw();
      reinit_ = true;
      g = cost_.noisy_grad(theta_, rng_);
    }
    e.theta = theta_;
    e.noisy_grad = g;
    e.reinit = reinit_;
    theta_ = theta_ - cfg_.eta * g;
    if (cfg_.project) cfg_.project(theta_);
    reinit_ = false;
    ++k_;
    detail::guard_divergence(theta_, k_, "run_reinit_sgd");
    return e;
  }

 private:
  ParamVector draw() { return cfg_.sampler ? cfg_.sampler(rng_) : cfg_.dist.sample(rng_); }

  CostModel cost_;
  SgdConfig cfg_;
  RandomSource rng_;
  ParamVector theta_;
  std::int64_t k_ = 0;
  bool reinit_ = true;
  bool done_ = false;
};

inline std::vector<GradientEvent> run_reinit_sgd(const CostModel& cost, const SgdConfig& cfg,
                                                 const RandomSource& rng) {
  ReinitSgdStream s(cost, cfg, rng);
  return collect(s);
}

// Classical SGLD forward learner α_{k+1} = α_k − η∇̂J(α_k) + √(2η/β)·w_k.
// The injected noise comes from a derived sub-stream, so β = ∞ gives exactly
// the plain SGD path of the same seed.
// Factory giving stream i its own re-initializing SGD learner seeded from (master_seed, i).
inline ForwardFactory reinit_sgd_factory(CostModel cost, SgdConfig cfg, std::uint64_t master_seed) {
  return [cost = std::move(cost), cfg = std::move(cfg), master_seed](std::uint64_t i) -> std::unique_ptr<ForwardStream> {
    return std::make_unique<ReinitSgdStream>(cost, cfg, RandomSource(master_seed, i).derive(0xF0F0));
  };
}

class SgldStream : public ForwardStream {
 public:
  SgldStream(CostModel cost, double eta, double beta, ScaledDistribution dist,
             std::int64_t max_iters, RandomSource rng)
      : cost_(std::move(cost)),
        eta_(eta),
        beta_(beta),
        max_iters_(max_iters),
        rng_(rng),
        noise_rng_(rng.derive(0x5317)) {
    require(eta > 0.0, "run_sgld_forward: eta must be > 0");
    require(beta > 0.0, "run_sgld_forward: beta must be > 0");
    alpha_ = dist.sample(rng_);
  }

  std::optional<GradientEvent> next() override {
    if (done_) return std::nullopt;
    GradientEvent e;
    e.k = k_;
    e.theta = alpha_;
    e.noisy_grad = cost_.noisy_grad(alpha_, rng_);
    if (k_ >= max_iters_) {
      e.terminal = true;
      done_ = true;
      return e;
    }
    alpha_ = alpha_ - eta_ * e.noisy_grad;
    if (std::isfinite(beta_)) alpha_ += std::sqrt(2.0 * eta_ / beta_) * noise_rng_.normal_vector(alpha_.size());
    ++k_;
    detail::guard_divergence(alpha_, k_, "run_sgld_forward");
    return e;
  }

 private:
  CostModel cost_;
  double eta_;
  double beta_;
  std::int64_t max_iters_;
  RandomSource rng_;
  RandomSource noise_rng_;
  ParamVector alpha_;
  std::int64_t k_ = 0;
  bool done_ = false;
};

inline std::vector<GradientEvent> run_sgld_forward(const CostModel& cost, double eta, double beta,
                                                   const ScaledDistribution& dist,
                                                   std::int64_t max_iters, const RandomSource& rng) {
  SgldStream s(cost, eta, beta, dist, max_iters, rng);
  return collect(s);
}

// Workers processed one after another. The first event of every later worker
// is a restart (reinit); only the last worker's final event stays terminal.
class FederatedStream : public ForwardStream {
 public:
  explicit FederatedStream(std::vector<std::unique_ptr<ForwardStream>> workers)
      : workers_(std::move(workers)) {
    if (workers_.empty()) throw Error("federated_sequentialize: empty worker list");
  }

  std::optional<GradientEvent> next() override {
    while (current_ < workers_.size()) {
      auto e = workers_[current_]->next();
      if (!e) {
        ++current_;
        first_ = true;
        continue;
      }
      const bool last_worker = current_ + 1 == workers_.size();
      if (first_ && current_ > 0) e->reinit = true;
      first_ = false;
      if (!last_worker) e->terminal = false;
      e->k = k_++;
      return e;
    }
    return std::nullopt;
  }

 private:
  std::vector<std::unique_ptr<ForwardStream>> workers_;
  std::size_t current_ = 0;
  bool first_ = true;
  std::int64_t k_ = 0;
};

inline std::vector<GradientEvent> federated_sequentialize(
    std::vector<std::vector<GradientEvent>> worker_streams) {
  std::vector<std::unique_ptr<ForwardStream>> w;
  for (auto& s : worker_streams) w.push_back(std::make_unique<ReplayStream>(std::move(s)));
  FederatedStream f(std::move(w));
  return collect(f);
}

}  // namespace psgld
