#pragma once

#include "psgld/core/random.hpp"
#include "psgld/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace psgld {

// Lipschitz, smoothness and dissipativity constants of a cost, plus noise
// variance bound. User supplied; shipped costs fill them analytically.
struct StructuralInput {
  double L_J = 1.0;
  double L_gradJ = 1.0;
  double m = 1.0;
  double b = 0.0;
  double A = 0.0;  // |J(0)|
  double B = 0.0;  // ‖∇J(0)‖
  double zeta = 0.0;
  int dim = 1;

  void validate() const {
    require(L_J > 0.0, "structural constants: L_J must be > 0");
    require(L_gradJ > 0.0, "structural constants: L_gradJ must be > 0");
    require(m > 0.0, "structural constants: m must be > 0");
    require(b >= 0.0, "structural constants: b must be >= 0");
    require(zeta >= 0.0, "structural constants: zeta must be >= 0");
    require(dim >= 1, "structural constants: dim must be >= 1");
  }
};

struct CostModel {
  std::string name;
  int dim = 1;
  std::function<double(const ParamVector&)> value;
  std::function<ParamVector(const ParamVector&)> grad;
  std::function<ParamVector(const ParamVector&, RandomSource&)> noisy_grad;
  StructuralInput constants;
};

namespace detail {
inline std::function<ParamVector(const ParamVector&, RandomSource&)> additive_noise(
    std::function<ParamVector(const ParamVector&)> grad, double noise_sd) {
  if (noise_sd == 0.0) return [grad](const ParamVector& x, RandomSource&) { return grad(x); };
  return [grad, noise_sd](const ParamVector& x, RandomSource& rng) -> ParamVector {
    ParamVector g = grad(x);
    return g + noise_sd * rng.normal_vector(g.size());
  };
}
}  // namespace detail

// J(x) = (c/2)‖x‖². Lipschitz constant is taken on the ball of `radius`.
inline CostModel quadratic_cost(int dim, double curvature = 1.0, double noise_sd = 0.0,
                                double radius = 2.0) {
  require(dim >= 1, "quadratic_cost: dim must be >= 1");
  require(curvature > 0.0, "quadratic_cost: curvature must be > 0");
  require(noise_sd >= 0.0, "quadratic_cost: noise_sd must be >= 0");
  CostModel c;
  c.name = "quadratic";
  c.dim = dim;
  c.value = [curvature](const ParamVector& x) { return 0.5 * curvature * x.squaredNorm(); };
  c.grad = [curvature](const ParamVector& x) -> ParamVector { return curvature * x; };
  c.noisy_grad = detail::additive_noise(c.grad, noise_sd);
  c.constants = {curvature * radius, curvature, curvature, 0.0, 0.0, 0.0,
                 dim * noise_sd * noise_sd, dim};
  return c;
}

// J(x) = Σ (x_i² − 1)²/4, minima at x_i = ±1. Constants on the cube [-R, R]^N;
// ⟨x,∇J⟩ = Σ x_i⁴ − x_i² ≥ ‖x‖² − N gives (m, b) = (1, N).
inline CostModel double_well_cost(int dim, double noise_sd = 0.0, double radius = 2.0) {
  require(dim >= 1, "double_well_cost: dim must be >= 1");
  require(radius >= 1.0, "double_well_cost: radius must be >= 1");
  CostModel c;
  c.name = "double_well";
  c.dim = dim;
  c.value = [](const ParamVector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += 0.25 * (x[i] * x[i] - 1.0) * (x[i] * x[i] - 1.0);
    return s;
  };
  c.grad = [](const ParamVector& x) -> ParamVector {
    return x.array() * (x.array().square() - 1.0);
  };
  c.noisy_grad = detail::additive_noise(c.grad, noise_sd);
  const double R = radius;
  c.constants = {std::sqrt(static_cast<double>(dim)) * (R * R * R - R), 3.0 * R * R - 1.0, 1.0,
                 static_cast<double>(dim), 0.25 * dim, 0.0, dim * noise_sd * noise_sd, dim};
  return c;
}

struct SampleLoss {
  std::function<double(const ParamVector& w, const ParamVector& z)> value;
  std::function<ParamVector(const ParamVector& w, const ParamVector& z)> grad;
};

// f(w, z) = ‖w − z‖²/2, location estimation.
inline SampleLoss squared_error_loss() {
  return {[](const ParamVector& w, const ParamVector& z) { return 0.5 * (w - z).squaredNorm(); },
          [](const ParamVector& w, const ParamVector& z) -> ParamVector { return w - z; }};
}

// f(w, (x, y)) = (wᵀx − y)²/2 with z = [x; y].
inline SampleLoss least_squares_loss() {
  return {[](const ParamVector& w, const ParamVector& z) {
            const double r = w.dot(z.head(w.size())) - z[w.size()];
            return 0.5 * r * r;
          },
          [](const ParamVector& w, const ParamVector& z) -> ParamVector {
            const double r = w.dot(z.head(w.size())) - z[w.size()];
            return r * z.head(w.size());
          }};
}

// F(w) = (1/n)Σ f(w, z_i) + reg·‖w‖² + shift. noisy_grad averages a minibatch
// drawn uniformly with replacement; batch_size 0 means the full data set.
inline CostModel erm_cost(std::vector<ParamVector> samples, SampleLoss loss, double reg, int dim,
                          std::size_t batch_size, StructuralInput constants, double shift = 0.0) {
  if (samples.empty()) throw Error("erm_cost: empty dataset");
  require(reg >= 0.0, "erm_cost: reg must be >= 0");
  auto data = std::make_shared<const std::vector<ParamVector>>(std::move(samples));
  const std::size_t n = data->size();
  CostModel c;
  c.name = "erm";
  c.dim = dim;
  c.value = [data, loss, reg, shift, n](const ParamVector& w) {
    double s = 0.0;
    for (const auto& z : *data) s += loss.value(w, z);
    return s / static_cast<double>(n) + reg * w.squaredNorm() + shift;
  };
  c.grad = [data, loss, reg, n](const ParamVector& w) -> ParamVector {
    ParamVector g = ParamVector::Zero(w.size());
    for (const auto& z : *data) g += loss.grad(w, z);
    return g / static_cast<double>(n) + 2.0 * reg * w;
  };
  const std::size_t batch = (batch_size == 0 || batch_size > n) ? n : batch_size;
  auto full = c.grad;
  if (batch == n && batch_size == 0) {
    c.noisy_grad = [full](const ParamVector& w, RandomSource&) { return full(w); };
  } else {
    c.noisy_grad = [data, loss, reg, batch, n](const ParamVector& w, RandomSource& rng) -> ParamVector {
      ParamVector g = ParamVector::Zero(w.size());
      for (std::size_t j = 0; j < batch; ++j) g += loss.grad(w, (*data)[rng.uniform_index(n)]);
      return g / static_cast<double>(batch) + 2.0 * reg * w;
    };
  }
  constants.dim = dim;
  c.constants = constants;
  return c;
}

struct LogTerm {
  std::function<double(const ParamVector&)> value;
  std::function<ParamVector(const ParamVector&)> grad;
};

// log N(θ; mean·1, var·I)
inline LogTerm gaussian_log_prior(double mean, double var) {
  require(var > 0.0, "gaussian_log_prior: var must be > 0");
  return {[=](const ParamVector& t) {
            const double n = static_cast<double>(t.size());
            return -0.5 * (t.array() - mean).square().sum() / var - 0.5 * n * std::log(2.0 * kPi * var);
          },
          [=](const ParamVector& t) -> ParamVector { return -(t.array() - mean).matrix() / var; }};
}

// log N(x; θ, var·I) viewed as a function of θ.
inline LogTerm gaussian_log_likelihood(ParamVector x, double var) {
  require(var > 0.0, "gaussian_log_likelihood: var must be > 0");
  return {[=](const ParamVector& t) {
            const double n = static_cast<double>(t.size());
            return -0.5 * (x - t).squaredNorm() / var - 0.5 * n * std::log(2.0 * kPi * var);
          },
          [=](const ParamVector& t) -> ParamVector { return (x - t) / var; }};
}

// J(θ) = −log p(θ) − Σ log p(x_i|θ) + shift. With batch_size > 0 the noisy
// gradient rescales a uniform minibatch of likelihood terms by n/|batch|.
inline CostModel bayes_cost(LogTerm log_prior, std::vector<LogTerm> log_likelihoods, int dim,
                            StructuralInput constants, double shift = 0.0,
                            std::size_t batch_size = 0) {
  auto lik = std::make_shared<const std::vector<LogTerm>>(std::move(log_likelihoods));
  CostModel c;
  c.name = "bayes";
  c.dim = dim;
  c.value = [log_prior, lik, shift](const ParamVector& t) {
    double s = -log_prior.value(t);
    for (const auto& l : *lik) s -= l.value(t);
    const double v = s + shift;
    if (!std::isfinite(v)) throw Error("bayes_cost: non-finite evaluation");
    return v;
  };
  c.grad = [log_prior, lik](const ParamVector& t) -> ParamVector {
    ParamVector g = -log_prior.grad(t);
    for (const auto& l : *lik) g -= l.grad(t);
    return g;
  };
  const std::size_t n = lik->size();
  if (batch_size == 0 || batch_size >= n || n == 0) {
    auto full = c.grad;
    c.noisy_grad = [full](const ParamVector& t, RandomSource&) { return full(t); };
  } else {
    c.noisy_grad = [log_prior, lik, batch_size, n](const ParamVector& t, RandomSource& rng) -> ParamVector {
      ParamVector g = ParamVector::Zero(t.size());
      for (std::size_t j = 0; j < batch_size; ++j) g -= (*lik)[rng.uniform_index(n)].grad(t);
      g *= static_cast<double>(n) / static_cast<double>(batch_size);
      return g - log_prior.grad(t);
    };
  }
  constants.dim = dim;
  c.constants = constants;
  return c;
}

// Largest relative error between grad and central differences of value,
// step 1e-5·(1 + ‖x‖). Relative to max(1, ‖∇J‖∞).
inline double gradient_check(const CostModel& cost, const ParamVector& x) {
  const double h = 1e-5 * (1.0 + x.norm());
  const ParamVector g = cost.grad(x);
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    ParamVector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (cost.value(xp) - cost.value(xm)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / scale);
  }
  return worst;
}

struct DissipativityReport {
  bool pass = false;
  double worst_margin = 0.0;  // min over the grid of ⟨x,∇J⟩ − m‖x‖² + b
  ParamVector worst_point;
};

// Grid evaluation of ⟨x, ∇J(x)⟩ ≥ m‖x‖² − b on the cube [lo, hi]^N.
inline DissipativityReport dissipativity_check(const CostModel& cost, double m, double b, double lo,
                                               double hi, int per_axis = 41) {
  require(per_axis >= 2 && hi > lo, "dissipativity_check: bad grid");
  DissipativityReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const int n = cost.dim;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  ParamVector x(n);
  const double h = (hi - lo) / (per_axis - 1);
  for (;;) {
    for (int d = 0; d < n; ++d) x[d] = lo + h * idx[static_cast<std::size_t>(d)];
    const double margin = x.dot(cost.grad(x)) - m * x.squaredNorm() + b;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_point = x;
    }
    int d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == per_axis) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) break;
  }
  rep.pass = rep.worst_margin >= -1e-12;
  return rep;
}

}  // namespace psgld
