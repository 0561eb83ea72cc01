#pragma once

#include "psgld/theory/constants.hpp"

#include <cmath>
#include <sstream>

namespace psgld {

// δ[C4 + √(2 c_LS C3)] + δ√(10 c_LS N log(1/δ)). A negative C3 is clamped to 0.
inline double wasserstein_bound(double delta, const BoundConstants& c, double c_LS, int N) {
  require(delta > 0.0, "wasserstein_bound: delta must be > 0");
  require(delta < 1.0, "wasserstein_bound: delta must be < 1");
  require(c_LS > 0.0 && N >= 1, "wasserstein_bound: c_LS > 0 and N >= 1 required");
  return delta * (c.C4 + std::sqrt(2.0 * c_LS * std::max(c.C3, 0.0))) +
         delta * std::sqrt(10.0 * c_LS * N * std::log(1.0 / delta));
}

// (α − ρ/margin²)², at most 1.
inline double xi_lower_bound(double alpha, double rho, double margin) {
  require(alpha > 0.0 && alpha <= 1.0, "xi_lower_bound: alpha must be in (0, 1]");
  require(rho >= 0.0, "xi_lower_bound: rho must be >= 0");
  require(margin > 0.0 && margin > std::sqrt(rho / alpha), "xi_lower_bound: margin must exceed sqrt(rho/alpha)");
  const double v = alpha - rho / (margin * margin);
  return std::min(1.0, v * v);
}

// Lipschitz constant of log on [exp(−βT₁), ∞).
inline double log_lipschitz_constant(double beta, double T1) { return std::exp(beta * T1); }

struct ReconstructionBoundArgs {
  ReconstructionInputs r;  // x, T, b_T, T₁, |Θ|, 𝒦₁, 𝒦₂, 𝒦₄
  double y = 1.0;
  double rho = 0.0;
  double xi = 1.0;
  double L = 1.0;
  double P_Theta = 1.0;
};

struct ReconstructionBound {
  double phi = 0.0;
  double psi = 0.0;
  double tail = 1.0;
  double C6 = 0.0;
  bool vacuous = false;  // a probability factor is non-positive; tail reported as 1
};

inline ReconstructionBound reconstruction_bound(const ReconstructionBoundArgs& a, const StructuralConstants& sc) {
  const auto& r = a.r;
  require(r.T >= 1.0 && r.b_T > 0.0 && r.theta_size > 0.0, "reconstruction_bound: need T >= 1, b_T > 0, |Θ| > 0");
  require(a.xi > 0.0 && a.xi <= 1.0, "reconstruction_bound: xi must be in (0, 1]");
  require(a.P_Theta > 0.0 && a.y >= 0.0 && a.rho >= 0.0 && a.L > 0.0,
          "reconstruction_bound: need P_Theta > 0, y >= 0, rho >= 0, L > 0");
  ReconstructionBound out;
  out.C6 = compute_C6(sc, r);
  const double sq_xi = std::sqrt(a.xi);
  const double threshold = a.rho * std::sqrt(2.0 * out.C6) / (sq_xi * r.theta_size);
  if (r.x < threshold) {
    std::ostringstream os;
    os << "reconstruction_bound: x = " << r.x << " violates x > rho sqrt(2 C6)/(sqrt(xi)|Theta|) = " << threshold;
    throw Error(os.str());
  }
  const double N = sc.N, sT = std::sqrt(r.T);
  out.phi = 2.0 * a.L * r.theta_size *
            (r.x / (sT * r.b_T) + r.K2 / (std::pow(2.0 * kPi, N) * sT * r.b_T) +
             0.5 * kde_K3(sc) * r.K4 * std::pow(r.b_T * std::sqrt(1.0 / a.P_Theta + a.y), 2.0 / N));
  out.psi = (r.x * r.theta_size * sq_xi - std::sqrt(2.0 * out.C6) * a.rho) / (sq_xi * r.theta_size * std::sqrt(r.b_T));
  const double f1 = 1.0 - 2.0 * std::exp(-out.psi * out.psi);
  const double f2 = 1.0 - 2.0 * std::exp(-2.0 * a.y * a.y / (r.T * r.T * r.T));
  if (f1 <= 0.0 || f2 <= 0.0) {
    out.vacuous = true;
    out.tail = 1.0;
  } else {
    out.tail = 1.0 - f1 * f2;
  }
  return out;
}

}  // namespace psgld
