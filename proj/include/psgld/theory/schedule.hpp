#pragma once

#include "psgld/core/kernel.hpp"
#include "psgld/theory/constants.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>

namespace psgld {

struct Schedule {
  double delta = 0.0;
  double epsilon = 0.0;
  std::uint64_t k = 0;
  double kernel_delta = 0.0;  // Δ
  double gamma = 0.0;
  bool kernel_delta_feasible = false;  // false when the Δ constraint has no admissible radius
};

// Largest admissible δ: exp(−1/(β c_LS)).
inline double delta_max(double beta, double c_LS) {
  require(beta > 0 && c_LS > 0, "delta_max: beta and c_LS must be > 0");
  return std::exp(-1.0 / (beta * c_LS));
}

inline double schedule_epsilon(double delta) {
  const double r = delta / std::log(1.0 / delta);
  return std::min(1.0, r * r);
}

namespace detail {

// Verifies the radial profile is non-increasing on [0, radius].
inline void require_monotone_profile(const SmoothingKernel& k, double radius) {
  require(static_cast<bool>(k.radial_profile), "schedule: kernel has no radial profile");
  double prev = k.radial_profile(0.0);
  for (int i = 1; i <= 4000; ++i) {
    const double v = k.radial_profile(radius * i / 4000);
    if (v > prev * (1.0 + 1e-14)) throw Error("schedule: kernel radial profile is not monotone; cannot invert");
    prev = v;
  }
}

// r ≥ 0 with f(r) = level for a non-increasing f; empty if level > f(0).
inline std::optional<double> invert_decreasing(const std::function<double(double)>& f, double level) {
  if (!(level > 0.0)) throw Error("schedule: kernel inversion needs a positive level");
  if (level > f(0.0)) return std::nullopt;
  double hi = 1.0;
  while (f(hi) > level) {
    hi *= 2.0;
    if (hi > 1e300) return std::nullopt;
  }
  double lo = 0.0;
  for (int it = 0; it < 2000 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

struct KernelDeltaResult {
  double delta = 0.0;
  bool feasible = false;
};

// Δ ≤ inf_{x ∈ [ε, K̂_ε]} K^{-1}(K̂₁√(2π)e^{x²/2}/(2ε)) / K^{-2}(x ε^{2N}),
// with K̂_ε = sup K_ε. Inverses act on the scalar radial profile. When the
// numerator level exceeds sup K no radius exists; Δ is then reported as 0
// and flagged infeasible.
inline KernelDeltaResult kernel_delta_from_epsilon(double epsilon, const SmoothingKernel& kernel, int grid = 2001) {
  require(epsilon > 0.0 && epsilon <= 1.0, "kernel_delta: epsilon must be in (0, 1]");
  detail::require_monotone_profile(kernel, 20.0);
  const int N = kernel.dim;
  const double K1 = kernel.sup_value;
  const double K_eps = std::pow(epsilon, -N) * K1;
  const auto prof = kernel.radial_profile;
  const auto prof2 = [&](double r) { return prof(r) * prof(r); };
  KernelDeltaResult res;
  res.feasible = true;
  double best = std::numeric_limits<double>::infinity();
  const double lo = std::log(epsilon), hi = std::log(std::max(K_eps, epsilon));
  for (int i = 0; i < grid; ++i) {
    const double x = std::exp(grid == 1 ? lo : lo + (hi - lo) * i / (grid - 1));
    const double num_level = K1 * std::sqrt(2.0 * kPi) / (2.0 * epsilon) * std::exp(0.5 * x * x);
    const auto num = std::isfinite(num_level) ? detail::invert_decreasing(prof, num_level) : std::nullopt;
    const auto den = detail::invert_decreasing(prof2, x * std::pow(epsilon, 2 * N));
    if (!num || !den) {
      res.feasible = false;
      continue;
    }
    if (*den > 0.0) best = std::min(best, *num / *den);
  }
  res.delta = res.feasible && std::isfinite(best) ? best : 0.0;
  return res;
}

// ε, k, γ, Δ from the target accuracy δ. Invariants are re-checked before returning.
inline Schedule schedule_from_delta(double delta, const StructuralConstants& sc, double c_LS,
                                    const SmoothingKernel& kernel) {
  require(sc.beta > 0.0 && c_LS > 0.0, "schedule_from_delta: beta and c_LS must be > 0");
  const double dmax = delta_max(sc.beta, c_LS);
  if (!(delta > 0.0 && delta <= dmax && delta < 1.0)) {
    std::ostringstream os;
    os << "schedule_from_delta: delta = " << delta << " outside (0, exp(-1/(beta c_LS))] = (0, " << dmax << "]";
    throw Error(os.str());
  }
  Schedule s;
  s.delta = delta;
  s.epsilon = schedule_epsilon(delta);
  const double target = sc.beta * c_LS * std::log(1.0 / delta);
  const double kd = std::ceil(target / s.epsilon);
  if (!(kd < 1.8e19)) throw Error("schedule_from_delta: iteration count overflows 64 bits");
  s.k = static_cast<std::uint64_t>(kd);
  s.gamma = std::pow(s.epsilon, 1.5);
  const auto kd_res = kernel_delta_from_epsilon(s.epsilon, kernel);
  s.kernel_delta = kd_res.delta;
  s.kernel_delta_feasible = kd_res.feasible;

  const double band = std::pow(delta / std::log(1.0 / delta), 2);
  if (!(s.epsilon <= 1.0 && s.epsilon <= band * (1.0 + 1e-15)))
    throw Error("schedule_from_delta: internal check failed (epsilon band)");
  const double ke = static_cast<double>(s.k) * s.epsilon;
  if (!(ke + 1e-12 * target >= target && ke - target <= s.epsilon * (1.0 + 1e-9)))
    throw Error("schedule_from_delta: internal check failed (k * epsilon)");
  if (!(s.gamma >= s.epsilon * s.epsilon && s.gamma <= std::pow(s.epsilon, 1.5)))
    throw Error("schedule_from_delta: internal check failed (gamma band)");
  return s;
}

}  // namespace psgld
