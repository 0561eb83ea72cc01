#pragma once

#include "psgld/core/quadrature.hpp"
#include "psgld/core/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace psgld {

struct SmoothingKernel {
  std::string name;
  int dim = 1;
  std::function<double(const ParamVector&)> eval;
  double sup_value = 0.0;
  // K along a ray; strictly decreasing for kernels that support inversion.
  std::function<double(double)> radial_profile;
};

inline SmoothingKernel gaussian_kernel(int dim) {
  require(dim >= 1, "gaussian_kernel: dim must be >= 1");
  const double norm = std::pow(2.0 * kPi, -0.5 * dim);
  SmoothingKernel k;
  k.name = "gaussian";
  k.dim = dim;
  k.eval = [norm](const ParamVector& u) { return norm * std::exp(-0.5 * u.squaredNorm()); };
  k.sup_value = norm;
  k.radial_profile = [norm](double r) { return norm * std::exp(-0.5 * r * r); };
  return k;
}

// Δ^{-N} K(u/Δ)
inline double kernel_eval_scaled(const SmoothingKernel& k, double delta, const ParamVector& u) {
  if (!(delta > 0.0)) throw Error("kernel_eval_scaled: delta must be > 0");
  return std::pow(delta, -k.dim) * k.eval(u / delta);
}

struct KernelCheckReport {
  bool nonnegative = false;
  bool symmetric = false;
  bool integrates_to_one = false;
  bool sup_finite = false;
  bool second_moment_finite = false;
  double integral = 0.0;
  double second_moment = 0.0;
  double max_asymmetry = 0.0;
  double min_value = 0.0;
  bool all_pass() const {
    return nonnegative && symmetric && integrates_to_one && sup_finite && second_moment_finite;
  }
};

// Numerical check of the kernel conditions on the cube [-radius, radius]^N.
// Mass outside the cube is assumed negligible, which holds for any kernel
// with a finite second moment once radius is a few multiples of its scale.
inline KernelCheckReport kernel_spec_check(const SmoothingKernel& k, double radius = 12.0) {
  require(k.dim >= 1 && k.dim <= 3, "kernel_spec_check: supports N <= 3");
  const int panels = k.dim == 1 ? 24 : (k.dim == 2 ? 12 : 6);
  KernelCheckReport rep;

  rep.integral = quadrature::integrate_cube(k.eval, k.dim, -radius, radius, panels);
  rep.second_moment = quadrature::integrate_cube(
      [&](const ParamVector& u) { return u.squaredNorm() * k.eval(u); }, k.dim, -radius, radius,
      panels);
  rep.integrates_to_one = std::abs(rep.integral - 1.0) <= 1e-6;
  rep.second_moment_finite = std::isfinite(rep.second_moment);

  // Grid probe for sign, symmetry and sup.
  const int per_axis = k.dim == 1 ? 401 : (k.dim == 2 ? 81 : 25);
  const double h = 2.0 * radius / (per_axis - 1);
  double min_v = std::numeric_limits<double>::infinity();
  double max_v = 0.0;
  double asym = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(k.dim), 0);
  ParamVector u(k.dim);
  for (;;) {
    for (int d = 0; d < k.dim; ++d) u[d] = -radius + h * idx[static_cast<std::size_t>(d)];
    const double v = k.eval(u);
    const double vm = k.eval(-u);
    min_v = std::min(min_v, v);
    max_v = std::max(max_v, std::abs(v));
    asym = std::max(asym, std::abs(v - vm) / std::max(1.0, std::abs(v)));
    int d = 0;
    while (d < k.dim && ++idx[static_cast<std::size_t>(d)] == per_axis) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == k.dim) break;
  }
  rep.min_value = min_v;
  rep.max_asymmetry = asym;
  rep.nonnegative = min_v >= 0.0;
  rep.symmetric = asym <= 1e-12;
  rep.sup_finite = std::isfinite(max_v) && std::isfinite(k.sup_value);
  return rep;
}

}  // namespace psgld
