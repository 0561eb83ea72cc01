#pragma once

#include "psgld/core/cost_model.hpp"
#include "psgld/forward/events.hpp"
#include "psgld/metrics/metrics.hpp"
#include "psgld/reconstruct/sampling.hpp"
#include "psgld/theory/bounds.hpp"

#include <json.hpp>

#include <cmath>
#include <algorithm>
#include <limits>
#include <sstream>
#include <ostream>
#include <string>

namespace psgld {

struct KernelDensityEstimate {
  std::vector<ParamVector> samples;
  SmoothingKernel kernel;
  double b_T = 1.0;
  std::int64_t T = 1;
  double b_S = 1.0;  // b_T √(T/|S|)

  // (1/(|S| b_S)) Σ 𝒦((x − α_i)/b_S^{1/N})
  double operator()(const ParamVector& x) const {
    const double h = std::pow(b_S, 1.0 / kernel.dim);
    long double s = 0.0L;
    for (const auto& a : samples) s += kernel.eval((x - a) / h);
    return static_cast<double>(s / (static_cast<long double>(samples.size()) * b_S));
  }
};

inline KernelDensityEstimate kde_estimate(const std::vector<ParamVector>& samples, double b_T, std::int64_t T,
                                          const SmoothingKernel& kernel) {
  if (samples.empty()) throw Error("kde_estimate: sample set is empty (|S| = 0)");
  require(b_T > 0.0, "kde_estimate: b_T must be > 0");
  require(T >= 1, "kde_estimate: T must be >= 1");
  for (const auto& s : samples) require(s.size() == kernel.dim, "kde_estimate: sample dimension differs from kernel");
  KernelDensityEstimate k;
  k.samples = samples;
  k.kernel = kernel;
  k.b_T = b_T;
  k.T = T;
  k.b_S = b_T * std::sqrt(static_cast<double>(T) / static_cast<double>(samples.size()));
  return k;
}

inline KernelDensityEstimate kde_estimate(const SampleSet& S, double b_T, const SmoothingKernel& kernel) {
  return kde_estimate(S.samples, b_T, S.T_attempted, kernel);
}

inline GridFunction density_on_grid(const KernelDensityEstimate& kde, const GridSpec& g) {
  return evaluate_on_grid(g, [&](const ParamVector& x) { return kde(x); });
}

struct CostEstimate {
  GridFunction density;  // clamped at floor
  GridFunction cost;
  double beta = 1.0;
  double b_S = 0.0;
  double floor = 0.0;
  std::size_t clamped_points = 0;
};

// Ĵ = −(1/β) log(max(π̂, floor))
inline CostEstimate cost_from_density(const GridFunction& density, double beta, double floor, double b_S = 0.0) {
  require(beta > 0.0, "cost_from_density: beta must be > 0");
  require(floor > 0.0, "cost_from_density: floor must be > 0");
  CostEstimate e;
  e.beta = beta;
  e.floor = floor;
  e.b_S = b_S;
  e.density = density;
  e.cost.grid = density.grid;
  e.cost.values.resize(density.values.size());
  for (std::size_t i = 0; i < density.values.size(); ++i) {
    double p = density.values[i];
    if (!(p >= floor)) {
      p = floor;
      ++e.clamped_points;
    }
    e.density.values[i] = p;
    e.cost.values[i] = -std::log(p) / beta;
  }
  return e;
}

// Largest J over the box, by grid scan with the corners included.
inline double j_max_on_box(const CostModel& cost, const Box& box, int points_per_axis = 101) {
  box.validate();
  const GridSpec g = box.grid(points_per_axis);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) m = std::max(m, cost.value(g.point(i)));
  return m;
}

inline double default_density_floor(double beta, double j_max_box) { return std::exp(-beta * j_max_box); }

struct Domains {
  Box inner;  // Θ′
  Box outer;  // Θ
  double xi_bound = 0.0;
};

inline Domains construct_domains(const Box& theta_prime, double margin, double rho, double alpha) {
  theta_prime.validate();
  require(alpha > 0.0 && alpha <= 1.0, "construct_domains: alpha must be in (0, 1]");
  require(rho >= 0.0, "construct_domains: rho must be >= 0");
  if (!(margin > std::sqrt(rho / alpha)))
    throw Error("construct_domains: margin must exceed sqrt(rho/alpha) = " + std::to_string(std::sqrt(rho / alpha)));
  return Domains{theta_prime, theta_prime.inflate(margin), xi_lower_bound(alpha, rho, margin)};
}

enum class AlignMode { Min, ModeMatch };

inline AlignMode parse_align_mode(const std::string& s) {
  if (s == "min") return AlignMode::Min;
  if (s == "mode-match") return AlignMode::ModeMatch;
  throw Error("unknown alignment mode '" + s + "' (expected min or mode-match)");
}

struct AlignedCosts {
  GridFunction estimate;
  GridFunction reference;
  double l1_error = 0.0;
};

// Removes the additive constant left free by the Gibbs normalizer.
inline AlignedCosts alignment_normalize(const CostEstimate& est, const CostModel& reference, AlignMode mode) {
  AlignedCosts a;
  a.estimate = est.cost;
  a.reference = evaluate_on_grid(est.cost.grid, [&](const ParamVector& x) { return reference.value(x); });
  const auto& ev = a.estimate.values;
  const auto& rv = a.reference.values;
  require(!ev.empty(), "alignment_normalize: empty grid");
  double se = 0.0, sr = 0.0;
  if (mode == AlignMode::Min) {
    se = *std::min_element(ev.begin(), ev.end());
    sr = *std::min_element(rv.begin(), rv.end());
  } else {
    const auto at = static_cast<std::size_t>(std::min_element(rv.begin(), rv.end()) - rv.begin());
    se = ev[at];
    sr = rv[at];
  }
  for (auto& v : a.estimate.values) v -= se;
  for (auto& v : a.reference.values) v -= sr;
  a.l1_error = l1_grid_error(a.estimate, a.reference);
  return a;
}

inline void write_samples_csv(std::ostream& os, const std::vector<ParamVector>& samples, int dim) {
  for (int d = 0; d < dim; ++d) os << (d ? "," : "") << "x_" << d;
  os << "\n";
  for (const auto& s : samples) {
    for (int d = 0; d < dim; ++d) os << (d ? "," : "") << format_double(s[d]);
    os << "\n";
  }
}

inline std::vector<ParamVector> read_samples_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("samples csv: missing header");
  const auto dim = static_cast<int>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<ParamVector> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ParamVector x(dim);
    std::stringstream ss(line);
    std::string cell;
    int d = 0;
    while (std::getline(ss, cell, ',')) {
      if (d >= dim) throw Error("samples csv: too many columns");
      x[d++] = std::stod(cell);
    }
    if (d != dim) throw Error("samples csv: too few columns");
    out.push_back(x);
  }
  return out;
}

// Grid rows: coordinates then one value column.
inline void write_grid_csv(std::ostream& os, const GridFunction& f, const std::string& value_name) {
  const int dim = f.grid.dim();
  for (int d = 0; d < dim; ++d) os << "x_" << d << ",";
  os << value_name << "\n";
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const ParamVector p = f.grid.point(i);
    for (int d = 0; d < dim; ++d) os << format_double(p[d]) << ",";
    os << format_double(f.values[i]) << "\n";
  }
}

// Inverse of write_grid_csv; the grid is rebuilt from the first and last rows
// and every row is checked against it.
inline GridFunction read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("grid csv: missing header");
  const auto cols = static_cast<int>(std::count(line.begin(), line.end(), ',') + 1);
  const int dim = cols - 1;
  if (dim < 1) throw Error("grid csv: need coordinate columns and a value column");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    if (static_cast<int>(r.size()) != cols) throw Error("grid csv: wrong number of columns");
    rows.push_back(std::move(r));
  }
  const auto n = static_cast<int>(std::llround(std::pow(static_cast<double>(rows.size()), 1.0 / dim)));
  std::size_t expect = 1;
  for (int d = 0; d < dim; ++d) expect *= static_cast<std::size_t>(n);
  if (n < 2 || expect != rows.size()) throw Error("grid csv: row count is not a full tensor grid");
  GridFunction f;
  f.grid.lo = Eigen::Map<const ParamVector>(rows.front().data(), dim);
  f.grid.hi = Eigen::Map<const ParamVector>(rows.back().data(), dim);
  f.grid.points_per_axis = n;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ParamVector p = f.grid.point(i);
    for (int d = 0; d < dim; ++d)
      if (std::abs(p[d] - rows[i][d]) > 1e-12 * (1.0 + std::abs(p[d]))) throw Error("grid csv: coordinates are not a uniform grid");
    f.values.push_back(rows[i][dim]);
  }
  return f;
}

inline nlohmann::ordered_json reconstruction_summary(const SampleSet& S, const ReconstructConfig& cfg,
                                                     const CostEstimate* est, double xi_bound) {
  nlohmann::ordered_json j;
  j["samples_in_box"] = S.samples.size();
  j["T"] = cfg.T;
  j["P_theta_estimate"] = static_cast<double>(S.samples.size()) / static_cast<double>(cfg.T);
  j["b_T"] = cfg.bandwidth();
  j["b_S"] = est ? est->b_S : std::numeric_limits<double>::quiet_NaN();
  j["xi_bound"] = xi_bound;
  j["discarded_events"] = S.discarded_events;
  j["k_hat"] = cfg.k_hat;
  j["rho"] = cfg.rho;
  j["forward_mode"] = cfg.mode == ForwardMode::Shared ? "shared" : "independent";
  j["box_lo"] = std::vector<double>(cfg.theta_box.lo.data(), cfg.theta_box.lo.data() + cfg.theta_box.dim());
  j["box_hi"] = std::vector<double>(cfg.theta_box.hi.data(), cfg.theta_box.hi.data() + cfg.theta_box.dim());
  j["grid_points"] = cfg.grid_points;
  j["psgld"] = {{"epsilon", cfg.psgld.epsilon},
                {"beta", cfg.psgld.beta},
                {"delta", cfg.psgld.delta},
                {"gamma", cfg.psgld.dist.gamma()}};
  if (est) {
    j["density_floor"] = est->floor;
    j["clamped_points"] = est->clamped_points;
  }
  return j;
}

}  // namespace psgld
