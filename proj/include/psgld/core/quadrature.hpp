#pragma once

#include "psgld/core/types.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace psgld::quadrature {

// Adaptive Gauss-Kronrod on [a, b]; either bound may be infinite.
inline double integrate_1d(const std::function<double(double)>& f, double a, double b,
                           double tol = 1e-12) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol, &err);
}

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Composite Gauss-Legendre rule on [lo, hi] with `panels` equal sub-intervals
// of 20 nodes each.
inline Rule composite_rule(double lo, double hi, int panels) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  std::vector<double> ref_nodes, ref_weights;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      ref_nodes.push_back(0.0);
      ref_weights.push_back(w[i]);
      continue;
    }
    ref_nodes.push_back(-x[i]);
    ref_weights.push_back(w[i]);
    ref_nodes.push_back(x[i]);
    ref_weights.push_back(w[i]);
  }
  Rule r;
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t i = 0; i < ref_nodes.size(); ++i) {
      r.nodes.push_back(mid + 0.5 * h * ref_nodes[i]);
      r.weights.push_back(0.5 * h * ref_weights[i]);
    }
  }
  return r;
}

// Tensor-product composite Gauss-Legendre over the cube [lo, hi]^dim.
inline double integrate_cube(const std::function<double(const ParamVector&)>& f, int dim,
                             double lo, double hi, int panels) {
  require(dim >= 1, "integrate_cube: dim must be positive");
  const Rule r = composite_rule(lo, hi, panels);
  const std::size_t n = r.nodes.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  ParamVector x(dim);
  long double total = 0.0L;
  for (;;) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      x[d] = r.nodes[idx[d]];
      w *= r.weights[idx[d]];
    }
    total += static_cast<long double>(w) * f(x);
    int d = 0;
    while (d < dim && ++idx[d] == n) idx[d++] = 0;
    if (d == dim) break;
  }
  return static_cast<double>(total);
}

}  // namespace psgld::quadrature
