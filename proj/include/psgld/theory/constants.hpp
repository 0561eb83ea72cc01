#pragma once

#include "psgld/core/cost_model.hpp"
#include "psgld/core/distributions.hpp"
#include "psgld/core/kernel.hpp"
#include "psgld/core/quadrature.hpp"

#include <boost/math/tools/minima.hpp>

#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

namespace psgld {

// Everything the bound formulas consume.
struct StructuralConstants {
  StructuralInput in;
  double c_opt = 0.05;
  double mu_sgd_hat = 1.0;  // user-supplied lower bound on the SGD gradient variance
  double M_theta = 0.0;
  double kappa0 = 0.0;
  double I = 0.0;
  double I_prime = 0.0;
  int N = 1;
  double beta = 2.0;
  double C_universal = 1.0;
  double gamma = 1.0;      // sampling scale entering sup π_{0,γ}
  double pi_bar0 = 1.0;    // sup π₀
  double tail_radius = 0;  // M of the Lyapunov drift bound
  double pi_bar_gamma() const { return pi_bar0 / std::pow(gamma, N); }
};

struct BoundConstants {
  double C0 = 0, C1 = 0, C2 = 0, C3 = 0, C4 = 0, C5 = 0;
  double C6 = std::numeric_limits<double>::quiet_NaN();
  double kappa = 0, gamma_lyap = 0;
  double poincare_inv = 0, c_LS = 0;
  double log_poincare_inv = 0, log_c_LS = 0;
};

// log ∫ exp(‖x‖²) dπ₀ for π₀ = N(0, σ²I): −(N/2)log(1 − 2σ²).
inline double compute_kappa0(const BaseDistribution& base) {
  if (base.gaussian_sigma2) {
    const double s2 = *base.gaussian_sigma2;
    if (!(s2 < 0.5)) throw Error("compute_kappa0: sigma2 >= 1/2 makes the exponential moment infinite");
    return -0.5 * base.dim * std::log1p(-2.0 * s2);
  }
  require(base.dim == 1, "compute_kappa0: quadrature path supports N = 1 only");
  const double v = quadrature::integrate_1d(
      [&](double x) { return std::exp(x * x + base.log_density(make_vector({x}))); }, -INFINITY, INFINITY, 1e-13);
  if (!std::isfinite(v)) throw Error("compute_kappa0: exponential moment diverges");
  return std::log(v);
}

// The same quantity by 1-D quadrature; an independent check of the closed form.
inline double kappa0_by_quadrature(const BaseDistribution& base) {
  require(base.dim == 1, "kappa0_by_quadrature: N = 1 only");
  return std::log(quadrature::integrate_1d(
      [&](double x) { return std::exp(x * x + base.log_density(make_vector({x}))); }, -INFINITY, INFINITY, 1e-13));
}

namespace detail {
// Maximum of a nonnegative function on [0, r_max] via grid bracketing + Brent.
inline std::pair<double, double> radial_max(const std::function<double(double)>& f, double r_max) {
  const int n = 4000;
  int best = 0;
  double best_v = -1.0;
  for (int i = 0; i <= n; ++i) {
    const double v = f(r_max * i / n);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  const double lo = r_max * std::max(0, best - 1) / n, hi = r_max * std::min(n, best + 1) / n;
  const auto res = boost::math::tools::brent_find_minima([&](double r) { return -f(r); }, lo, hi, 52);
  return {res.first, -res.second};
}

inline double radial_extent(const BaseDistribution& base) {
  // Radius beyond which the profile is below 1e-300 of its peak.
  double r = 1.0;
  while (base.radial_profile(r) > 1e-300 * base.sup_density && r < 1e6) r *= 2.0;
  return r;
}
}  // namespace detail

// I = sup |⟨x, ∇π₀(x)⟩| and I′ = sup |⟨x, π₀(x)∇π₀(x)⟩| by radial line search.
inline std::pair<double, double> compute_I_constants(const BaseDistribution& base) {
  require(static_cast<bool>(base.radial_profile) && static_cast<bool>(base.radial_derivative),
          "compute_I_constants: base distribution must be radially symmetric");
  const double r_max = detail::radial_extent(base);
  const auto I = detail::radial_max([&](double r) { return r * std::abs(base.radial_derivative(r)); }, r_max);
  const auto Ip = detail::radial_max(
      [&](double r) { return r * base.radial_profile(r) * std::abs(base.radial_derivative(r)); }, r_max);
  return {I.second, Ip.second};
}

// M_θ = κ₀ + 2(1 ∨ 1/m)(b + 2B²)
inline double compute_M_theta(double kappa0, double m, double b, double B) {
  require(m > 0.0, "compute_M_theta: m must be > 0");
  return kappa0 + 2.0 * std::max(1.0, 1.0 / m) * (b + 2.0 * B * B);
}

inline double compute_M_theta(const StructuralConstants& sc) {
  return compute_M_theta(sc.kappa0, sc.in.m, sc.in.b, sc.in.B);
}

// Smallest M with π_{0,γ}(x) < 2/((βm)²‖x‖²) for every ‖x‖ > M.
inline double compute_tail_radius(const ScaledDistribution& dist, double beta, double m) {
  const BaseDistribution& base = dist.base();
  require(static_cast<bool>(base.radial_profile), "compute_tail_radius: radially symmetric base required");
  const double c = 2.0 / ((beta * m) * (beta * m));
  const double g = dist.gamma();
  const double norm = dist.normalizer();
  auto excess = [&](double r) { return r * r * base.radial_profile(r / g) / norm - c; };
  const double r_max = g * detail::radial_extent(base);
  const int n = 20000;
  int last = -1;
  for (int i = 1; i <= n; ++i)
    if (excess(r_max * i / n) >= 0.0) last = i;
  if (last < 0) return 0.0;
  double lo = r_max * last / n, hi = r_max * (last + 1) / n;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) >= 0.0 ? lo : hi) = mid;
  }
  return hi;
}

// Fills κ₀, I, I′, M_θ, sup π₀ and the tail radius from the base law.
inline StructuralConstants make_structural_constants(const StructuralInput& in, const BaseDistribution& base,
                                                     double beta, double c_opt, double mu_sgd_hat,
                                                     double gamma = 1.0, double C_universal = 1.0) {
  in.validate();
  require(beta > 0.0, "structural constants: beta must be > 0");
  require(c_opt > 0.0, "structural constants: c_opt must be > 0");
  require(mu_sgd_hat > 0.0, "structural constants: mu_sgd_hat must be > 0");
  StructuralConstants sc;
  sc.in = in;
  sc.N = in.dim;
  sc.beta = beta;
  sc.c_opt = c_opt;
  sc.mu_sgd_hat = mu_sgd_hat;
  sc.gamma = gamma;
  sc.C_universal = C_universal;
  sc.kappa0 = compute_kappa0(base);
  std::tie(sc.I, sc.I_prime) = compute_I_constants(base);
  sc.M_theta = compute_M_theta(sc);
  sc.pi_bar0 = base.sup_density;
  sc.tail_radius = compute_tail_radius(ScaledDistribution(base, gamma), beta, in.m);
  return sc;
}

// Inputs specific to the reconstruction bound.
struct ReconstructionInputs {
  double x = 1.0;        // free concentration variable
  double T = 1000;       // number of streams
  double b_T = 0.0;      // bandwidth
  double T1 = 1.0;       // upper bound of J on Θ
  double theta_size = 1; // |Θ|
  double K1 = 0, K2 = 1, K4 = 1;  // kernel sup, L¹ mass, second moment
};

inline ReconstructionInputs gaussian_kde_constants(ReconstructionInputs r, int N) {
  r.K1 = std::pow(2.0 * kPi, -0.5 * N);
  r.K2 = 1.0;
  r.K4 = N;
  return r;
}

// 𝒦₃ = βL_∇J + β²L_J²
inline double kde_K3(const StructuralConstants& sc) {
  return sc.beta * sc.in.L_gradJ + sc.beta * sc.beta * sc.in.L_J * sc.in.L_J;
}

// β_{x,T} = x/(√T b) + 𝒦₂/((2π)^N √T b) + ½𝒦₃𝒦₄ b^{2/N}
inline double beta_xT(const StructuralConstants& sc, const ReconstructionInputs& r) {
  const double sT = std::sqrt(r.T);
  return r.x / (sT * r.b_T) + r.K2 / (std::pow(2.0 * kPi, sc.N) * sT * r.b_T) +
         0.5 * kde_K3(sc) * r.K4 * std::pow(r.b_T, 2.0 / sc.N);
}

// C6 = (𝒦₁/b_T + β_{x,T}) ∨ 1/(exp(−βT₁)|Θ|)
inline double compute_C6(const StructuralConstants& sc, const ReconstructionInputs& r) {
  require(r.b_T > 0.0 && r.T >= 1.0 && r.theta_size > 0.0, "compute_C6: need b_T > 0, T >= 1, |Θ| > 0");
  return std::max(r.K1 / r.b_T + beta_xT(sc, r), std::exp(sc.beta * r.T1) / r.theta_size);
}

// C0…C5 (and C6 when reconstruction inputs are given); C1 depends on the
// step size ε in use.
inline BoundConstants compute_C_constants(const StructuralConstants& sc, double epsilon,
                                          const ReconstructionInputs* recon = nullptr) {
  const auto& in = sc.in;
  require(in.L_gradJ > 0 && in.L_J > 0 && in.m > 0 && sc.beta > 0 && sc.c_opt > 0 && sc.mu_sgd_hat > 0,
          "compute_C_constants: L_J, L_gradJ, m, beta, c_opt, mu_sgd_hat must be > 0");
  require(in.b >= 0 && in.zeta >= 0 && sc.M_theta >= 0 && sc.kappa0 >= 0 && epsilon > 0,
          "compute_C_constants: b, zeta, M_theta, kappa0 must be >= 0 and epsilon > 0");
  const double L2 = in.L_gradJ * in.L_gradJ, beta = sc.beta, N = sc.N;
  BoundConstants c;
  c.C0 = 3.0 * L2 * (sc.M_theta + 2.0 * in.B * in.B * sc.M_theta) + in.B * in.B + in.zeta;
  c.C1 = sc.kappa0 + (beta * in.b + N) * 2.0 * epsilon + 2.0 * sc.I_prime;
  c.C2 = beta * L2 * (72.0 * c.C0 + 6.0 * std::sqrt(c.C0) + 18.0 + std::sqrt(2.0));
  c.C3 = std::log(sc.pi_bar_gamma()) + 0.5 * N * std::log(3.0 * kPi / (in.m * beta)) +
         0.5 * beta * in.b * std::log(3.0) +
         beta * (in.L_gradJ / 3.0 * sc.kappa0 + in.B * std::sqrt(sc.kappa0) + in.A);
  c.C5 = (1.0 / sc.c_opt) / sc.mu_sgd_hat + 1.0 / (sc.c_opt * sc.c_opt);
  c.C4 = 6.0 * std::sqrt(12.0 * c.C0 + 3.0) + 3.0 * std::sqrt(2.0) +
         4.0 * std::sqrt(1.5 + c.C1) *
             (std::sqrt(2.0 * beta * c.C5 * L2 * c.C2) + 2.0 * std::sqrt(2.0 * beta * c.C5 * (in.L_J * in.L_J + in.zeta)));
  if (recon) c.C6 = compute_C6(sc, *recon);
  return c;
}

namespace detail {
inline double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -INFINITY) return -INFINITY;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace detail

// κ, γ of the Lyapunov condition, the Poincaré bound 1/λ and c_LS.
// Evaluated in log space; a result beyond double range raises an error that
// names the offending exponent.
inline BoundConstants compute_log_sobolev(const StructuralConstants& sc, BoundConstants c = {}) {
  const auto& in = sc.in;
  require(in.L_gradJ > 0 && in.m > 0 && sc.beta > 0 && sc.C_universal > 0,
          "compute_log_sobolev: L_gradJ, m, beta, C_universal must be > 0");
  const double beta = sc.beta, m = in.m, N = sc.N, L = in.L_gradJ;
  const double bm = beta * m;
  c.kappa = (0.5 * bm * N + bm * sc.I) + 0.5 * (beta * beta * m * in.b + std::pow(bm * sc.tail_radius, 2));
  c.gamma_lyap = 0.5 * (bm * bm + (1.0 - 1.0 / (sc.pi_bar0 * sc.pi_bar0 + 1.0)));
  const double exponent = beta * ((L + in.B) * c.kappa / c.gamma_lyap + in.A + in.B);
  const double log_pref = std::log(4.0 * sc.C_universal * c.kappa * c.kappa / c.gamma_lyap);
  c.log_poincare_inv = -std::log(2.0 * c.kappa) + detail::log_add_exp(0.0, log_pref + exponent);
  const double pbg = sc.pi_bar_gamma();
  const double head = 2.0 * beta * L / c.gamma_lyap + 2.0 / (beta * L);
  const double inner = (2.0 * beta * L / c.gamma_lyap) *
                           (c.kappa + c.gamma_lyap * (sc.kappa0 + ((beta * in.b + N) * pbg + 2.0 * sc.I) / (m * beta * pbg))) +
                       2.0;
  c.log_c_LS = detail::log_add_exp(std::log(head), std::log(inner) + c.log_poincare_inv);
  if (!(c.log_c_LS < std::log(DBL_MAX))) {
    std::ostringstream os;
    os << "compute_log_sobolev: c_LS overflows double precision (exponent β((L_∇J+B)κ/γ + A + B) = " << exponent
       << ", log c_LS = " << c.log_c_LS << ")";
    throw Error(os.str());
  }
  c.poincare_inv = std::exp(c.log_poincare_inv);
  c.c_LS = std::exp(c.log_c_LS);
  return c;
}

}  // namespace psgld
