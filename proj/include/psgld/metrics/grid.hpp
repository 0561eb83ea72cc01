#pragma once

#include "psgld/core/types.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace psgld {

// Uniform tensor grid over the box [lo, hi]; axis 0 varies slowest.
struct GridSpec {
  ParamVector lo;
  ParamVector hi;
  int points_per_axis = 201;

  int dim() const { return static_cast<int>(lo.size()); }

  std::size_t size() const {
    std::size_t n = 1;
    for (int d = 0; d < dim(); ++d) n *= static_cast<std::size_t>(points_per_axis);
    return n;
  }

  double step(int axis) const {
    return points_per_axis > 1 ? (hi[axis] - lo[axis]) / (points_per_axis - 1) : 0.0;
  }

  double coord(int axis, int i) const {
    // The last node is pinned to hi so that the grid spans the box exactly.
    return i == points_per_axis - 1 ? hi[axis] : lo[axis] + i * step(axis);
  }

  ParamVector point(std::size_t flat) const {
    ParamVector x(dim());
    for (int d = dim() - 1; d >= 0; --d) {
      x[d] = coord(d, static_cast<int>(flat % static_cast<std::size_t>(points_per_axis)));
      flat /= static_cast<std::size_t>(points_per_axis);
    }
    return x;
  }

  void validate() const {
    require(lo.size() >= 1 && lo.size() == hi.size(), "grid: bounds must share a positive dimension");
    require(points_per_axis >= 2, "grid: need at least 2 points per axis");
    for (int d = 0; d < dim(); ++d) require(hi[d] >= lo[d], "grid: hi must be >= lo");
  }

  bool operator==(const GridSpec& o) const {
    return points_per_axis == o.points_per_axis && lo.size() == o.lo.size() && lo == o.lo && hi == o.hi;
  }
};

struct GridFunction {
  GridSpec grid;
  std::vector<double> values;
};

inline GridFunction evaluate_on_grid(const GridSpec& g, const std::function<double(const ParamVector&)>& f) {
  g.validate();
  GridFunction out{g, std::vector<double>(g.size())};
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f(g.point(i));
  return out;
}

// Tensor trapezoid weights.
inline std::vector<double> trapezoid_weights(const GridSpec& g) {
  std::vector<double> w(g.size(), 1.0);
  const std::size_t n = static_cast<std::size_t>(g.points_per_axis);
  for (std::size_t flat = 0; flat < w.size(); ++flat) {
    std::size_t rest = flat;
    for (int d = g.dim() - 1; d >= 0; --d) {
      const std::size_t i = rest % n;
      rest /= n;
      const double h = g.step(d);
      w[flat] *= (i == 0 || i == n - 1) ? 0.5 * h : h;
    }
  }
  return w;
}

inline double integrate_grid(const GridFunction& f) {
  const auto w = trapezoid_weights(f.grid);
  long double s = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) s += static_cast<long double>(w[i]) * f.values[i];
  return static_cast<double>(s);
}

}  // namespace psgld
