#pragma once

#include "psgld/core/random.hpp"
#include "psgld/core/types.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>

namespace psgld {

// Base density π₀. Radially symmetric instances also expose their profile
// r ↦ π₀(r·e) and its derivative so constants can be found by line search.
struct BaseDistribution {
  std::string name;
  int dim = 1;
  std::function<double(const ParamVector&)> density;
  std::function<ParamVector(const ParamVector&)> grad_density;
  std::function<double(const ParamVector&)> log_density;
  std::function<ParamVector(RandomSource&)> sample;
  double sup_density = 0.0;
  std::function<double(double)> radial_profile;
  std::function<double(double)> radial_derivative;
  std::optional<double> gaussian_sigma2;  // set for the shipped Gaussian
};

inline BaseDistribution gaussian_base(int dim, double sigma2 = 0.25) {
  require(dim >= 1, "gaussian_base: dim must be >= 1");
  require(sigma2 > 0.0 && std::isfinite(sigma2), "gaussian_base: sigma2 must be positive");
  const double norm = std::pow(2.0 * kPi * sigma2, -0.5 * dim);
  const double log_norm = -0.5 * dim * std::log(2.0 * kPi * sigma2);
  const double sd = std::sqrt(sigma2);
  BaseDistribution d;
  d.name = "gaussian";
  d.dim = dim;
  d.density = [=](const ParamVector& x) { return norm * std::exp(-0.5 * x.squaredNorm() / sigma2); };
  d.log_density = [=](const ParamVector& x) { return log_norm - 0.5 * x.squaredNorm() / sigma2; };
  d.grad_density = [=](const ParamVector& x) -> ParamVector {
    return (-norm * std::exp(-0.5 * x.squaredNorm() / sigma2) / sigma2) * x;
  };
  d.sample = [=](RandomSource& rng) -> ParamVector { return sd * rng.normal_vector(dim); };
  d.sup_density = norm;
  d.radial_profile = [=](double r) { return norm * std::exp(-0.5 * r * r / sigma2); };
  d.radial_derivative = [=](double r) { return -norm * r / sigma2 * std::exp(-0.5 * r * r / sigma2); };
  d.gaussian_sigma2 = sigma2;
  return d;
}

// π_{0,γ}(x) = π₀(x/γ) / ∫π₀(y/γ)dy. For a normalized π₀ the normalizer is γ^N
// by change of variables.
class ScaledDistribution {
 public:
  ScaledDistribution() : ScaledDistribution(gaussian_base(1), 1.0) {}
  ScaledDistribution(BaseDistribution base, double gamma) : base_(std::move(base)), gamma_(gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error("ScaledDistribution: gamma must be > 0");
    normalizer_ = std::pow(gamma_, base_.dim);
  }

  const BaseDistribution& base() const { return base_; }
  double gamma() const { return gamma_; }
  double normalizer() const { return normalizer_; }
  int dim() const { return base_.dim; }

  double density(const ParamVector& x) const {
    require_finite(x, "scaled_density");
    return base_.density(x / gamma_) / normalizer_;
  }

  ParamVector grad_density(const ParamVector& x) const {
    require_finite(x, "scaled_grad_density");
    return base_.grad_density(x / gamma_) / (normalizer_ * gamma_);
  }

  double log_density(const ParamVector& x) const {
    return base_.log_density(x / gamma_) - std::log(normalizer_);
  }

  double sup_density() const { return base_.sup_density / normalizer_; }

  ParamVector sample(RandomSource& rng) const { return gamma_ * base_.sample(rng); }

  // Distribution of γ'·Y for the same base; lets theory code work at γ = 1.
  ScaledDistribution rescaled(double gamma) const { return ScaledDistribution(base_, gamma); }

 private:
  BaseDistribution base_;
  double gamma_;
  double normalizer_ = 1.0;
};

inline double scaled_density(const ScaledDistribution& dist, const ParamVector& x) {
  return dist.density(x);
}

}  // namespace psgld
