#pragma once

#include "psgld/core/cost_model.hpp"
#include "psgld/core/distributions.hpp"
#include "psgld/core/kernel.hpp"
#include "psgld/core/random.hpp"
#include "psgld/forward/events.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace psgld {

struct PsgldConfig {
  double epsilon = 0.01;
  double beta = 2.0;
  double delta = 0.3;  // kernel scale Δ
  ScaledDistribution dist;
  SmoothingKernel kernel = gaussian_kernel(1);
};

struct PsgldState {
  ParamVector alpha;
  std::int64_t k = 0;
};

// Upper end of the admissible ε range: 1 ∧ √(1/249)/L_∇J.
inline double psgld_epsilon_upper(const StructuralInput& sc) {
  return std::min(1.0, std::sqrt(1.0 / 249.0) / sc.L_gradJ);
}

// Lower end of the admissible β range: 1/(4L_∇J²) ∨ √(2π+4)/(m√L_∇J).
inline double psgld_beta_lower(const StructuralInput& sc) {
  return std::max(1.0 / (4.0 * sc.L_gradJ * sc.L_gradJ),
                  std::sqrt(2.0 * kPi + 4.0) / (sc.m * std::sqrt(sc.L_gradJ)));
}

// Human-readable list of violated step/temperature conditions (empty if none).
inline std::vector<std::string> psgld_feasibility(const PsgldConfig& cfg, const StructuralInput& sc) {
  std::vector<std::string> out;
  const double eh = psgld_epsilon_upper(sc);
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < eh)) {
    std::ostringstream os;
    os << "epsilon = " << cfg.epsilon << " violates ε ∈ (0, 1 ∧ √(1/249)/L_∇J) = (0, " << eh << ")";
    out.push_back(os.str());
  }
  const double bl = psgld_beta_lower(sc);
  if (!(cfg.beta >= bl)) {
    std::ostringstream os;
    os << "beta = " << cfg.beta << " violates β ≥ 1/(4L_∇J²) ∨ √(2π+4)/(m√L_∇J) = " << bl;
    out.push_back(os.str());
  }
  return out;
}

inline void validate_psgld_config(const PsgldConfig& cfg) {
  require(cfg.epsilon > 0.0 && std::isfinite(cfg.epsilon), "psgld: epsilon must be > 0");
  require(cfg.beta > 0.0 && std::isfinite(cfg.beta), "psgld: beta must be > 0");
  require(cfg.delta > 0.0 && std::isfinite(cfg.delta), "psgld: kernel delta must be > 0");
  require(cfg.dist.dim() == cfg.kernel.dim, "psgld: kernel and sampling distribution dimensions differ");
}

inline PsgldState psgld_init(const PsgldConfig& cfg, RandomSource& rng) {
  validate_psgld_config(cfg);
  return {cfg.dist.sample(rng), 0};
}

// −ε[K_Δ(θ−α)(β/2)∇̂J(θ) − ∇π_{0,γ}(α)]·π_{0,γ}(α)
inline ParamVector psgld_drift(const ParamVector& alpha, const GradientEvent& ev, const PsgldConfig& cfg) {
  const double w = kernel_eval_scaled(cfg.kernel, cfg.delta, ev.theta - alpha);
  const double p = cfg.dist.density(alpha);
  ParamVector bracket = -cfg.dist.grad_density(alpha);
  // Skip the gradient entirely when the kernel weight underflows, so the
  // update cannot depend on ∇̂J in that case (not even through 0·inf).
  if (w != 0.0) bracket += (w * 0.5 * cfg.beta) * ev.noisy_grad;
  return (-cfg.epsilon * p) * bracket;
}

// One update with the Gaussian increment w supplied by the caller.
inline PsgldState psgld_step_with_noise(const PsgldState& s, const GradientEvent& ev, const PsgldConfig& cfg,
                                        const ParamVector& w) {
  if (ev.terminal) throw Error("psgld_step: terminal events carry no step");
  const double p = cfg.dist.density(s.alpha);
  PsgldState out;
  out.alpha = s.alpha + psgld_drift(s.alpha, ev, cfg) + (std::sqrt(cfg.epsilon) * p) * w;
  out.k = s.k + 1;
  if (!out.alpha.allFinite() || out.alpha.norm() > 1e6) {
    throw DivergenceError("psgld_step: non-finite or runaway iterate at k=" + std::to_string(out.k));
  }
  return out;
}

inline PsgldState psgld_step(const PsgldState& s, const GradientEvent& ev, const PsgldConfig& cfg,
                             RandomSource& rng) {
  return psgld_step_with_noise(s, ev, cfg, rng.normal_vector(s.alpha.size()));
}

using TraceSink = std::function<void(const PsgldState&)>;

// Runs k_hat updates from a fresh α₀, one forward event per update
// (restart-flagged events included).
inline PsgldState run_psgld(ForwardStream& forward, const PsgldConfig& cfg, std::int64_t k_hat,
                            RandomSource& rng, const TraceSink& trace = {}) {
  require(k_hat >= 0, "run_psgld: k_hat must be >= 0");
  PsgldState s = psgld_init(cfg, rng);
  if (trace) trace(s);
  for (std::int64_t i = 0; i < k_hat; ++i) {
    auto ev = forward.next();
    if (!ev || ev->terminal) {
      throw StreamExhausted("run_psgld: forward stream exhausted after " + std::to_string(i) +
                                " events (needed " + std::to_string(k_hat) + ")",
                            i);
    }
    s = psgld_step(s, *ev, cfg, rng);
    if (trace) trace(s);
  }
  return s;
}

inline void write_trace_header(std::ostream& os, int dim) {
  os << "k";
  for (int i = 0; i < dim; ++i) os << ",alpha_" << i;
  os << '\n';
}

inline void write_trace_row(std::ostream& os, const PsgldState& s) {
  os << s.k;
  for (Eigen::Index i = 0; i < s.alpha.size(); ++i) os << ',' << format_double(s.alpha[i]);
  os << '\n';
}

}  // namespace psgld
