#pragma once

#include "psgld/harness/pipeline.hpp"
#include "psgld/metrics/metrics.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace psgld {

// Desk-scale quadratic setup: J = θ²/2, β = 2, practical PSGLD parameters.
inline constexpr const char* kQuadraticGibbsConfig = R"(# Gibbs recovery on J(θ) = θ²/2 with β = 2
[run]
seed = 1

[cost]
name = quadratic

[sampling]
sigma2 = 3
gamma = 0.3

[forward]
kind = sgd
eta = 0.1
c_opt = 0.05

[psgld]
beta = 2
epsilon = 0.01
k_hat = 2000
kernel_delta = 0.3

[reconstruct]
T = 2000
box_lo = -1
box_hi = 1
margin = 1
)";

inline constexpr const char* kReinforceConfig = R"(# REINFORCE on the two-state MDP
[run]
seed = 1

[cost]
name = mdp
lambda = 0.1
regularizer = l2
horizon = 30

# A8-i with the numeric constants of this MDP caps η near 3e-4.
[forward]
kind = reinforce
eta = 0.0002
)";

struct ExperimentResult {
  Json metrics;
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  bool pass = false;
};

inline std::string samples_text(const std::vector<ParamVector>& s, int dim) {
  std::ostringstream os;
  write_samples_csv(os, s, dim);
  return os.str();
}

inline std::string grid_text(const GridFunction& f, const std::string& name) {
  std::ostringstream os;
  write_grid_csv(os, f, name);
  return os.str();
}

inline double median(std::vector<double> v) {
  require(!v.empty(), "median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline SampleSet sample_streams(const ResolvedRun& r) {
  return run_sequential_sampling(forward_factory(r), r.recon, r.psgld_root());
}

// Exact draws from the Gibbs law N(0, 1/β) of the quadratic.
inline std::vector<double> gibbs_draws(std::size_t n, double beta, std::uint64_t seed) {
  RandomSource g(seed, 0xD0);
  std::vector<double> out(n);
  for (auto& v : out) v = g.normal() / std::sqrt(beta);
  return out;
}

// Gibbs recovery: final iterates of T streams against N(0, 1/β).
inline ExperimentResult quadratic_gibbs(const ResolvedRun& r) {
  require(r.cost().name == "quadratic" && r.N == 1, "quadratic-gibbs needs the 1-D quadratic cost");
  const SampleSet S = sample_streams(r);
  const auto x = coordinate(S.all_final);
  const double beta = r.psgld.beta;
  const auto ref = gibbs_draws(x.size(), beta, r.seed);
  const auto mom = moment_report(S.all_final);
  ExperimentResult e;
  const double w2 = w2_1d_exact(x, ref);
  const double var = mom.covariance(0, 0);
  e.metrics = Json{{"experiment", "quadratic-gibbs"},
                   {"streams", x.size()},
                   {"in_box", S.samples.size()},
                   {"w2_exact_draws", w2},
                   {"w2_gibbs_quantiles", w2_to_gaussian_quantiles(x, 0.0, std::sqrt(1.0 / beta))},
                   {"mean", mom.mean[0]},
                   {"variance", var},
                   {"variance_se", mom.se_variance[0]},
                   {"gibbs_variance", 1.0 / beta},
                   {"w2_threshold", 0.15},
                   {"variance_window", {0.35, 0.65}}};
  e.pass = w2 <= 0.15 && var >= 0.35 && var <= 0.65;
  e.metrics["pass"] = e.pass;
  e.files.push_back({"samples.csv", samples_text(S.all_final, 1)});
  std::vector<ParamVector> refv;
  for (double v : ref) refv.push_back(make_vector({v}));
  e.files.push_back({"gibbs_draws.csv", samples_text(refv, 1)});
  return e;
}

// Paired-seed step-size sweep with k̂ε held fixed.
inline ExperimentResult step_size_sweep(const ExperimentConfig& base, const std::vector<double>& eps,
                                        double k_eps, int n_seeds, std::optional<int> threads = std::nullopt) {
  const int L = static_cast<int>(eps.size());
  std::vector<std::vector<double>> w2(L, std::vector<double>(n_seeds));
  std::ostringstream table;
  table << "seed,epsilon,k_hat,w2_gibbs\n";
  for (int s = 0; s < n_seeds; ++s) {
    for (int l = 0; l < L; ++l) {
      ExperimentConfig c = base;
      c.set("run", "seed", std::to_string(static_cast<std::int64_t>(base.integer("run", "seed")) + s));
      c.set("psgld", "epsilon", format_double(eps[l]));
      const auto kh = static_cast<std::int64_t>(std::llround(k_eps / eps[l]));
      c.set("psgld", "k_hat", std::to_string(kh));
      const ResolvedRun r = resolve(c, true, threads);
      const auto x = coordinate(sample_streams(r).all_final);
      w2[l][s] = w2_to_gaussian_quantiles(x, 0.0, std::sqrt(1.0 / r.psgld.beta));
      table << r.seed << "," << format_double(eps[l]) << "," << kh << "," << format_double(w2[l][s]) << "\n";
    }
  }
  ExperimentResult e;
  Json med = Json::array(), pairs = Json::array();
  std::vector<double> meds;
  for (int l = 0; l < L; ++l) meds.push_back(median(w2[l]));
  bool median_ok = true, pairs_ok = true;
  for (int l = 0; l < L; ++l) med.push_back({{"epsilon", eps[l]}, {"median_w2", meds[l]}});
  for (int l = 0; l + 1 < L; ++l) {
    int ok = 0;
    for (int s = 0; s < n_seeds; ++s) ok += w2[l + 1][s] <= w2[l][s];
    const int need = (9 * n_seeds + 9) / 10;
    pairs.push_back({{"from", eps[l]}, {"to", eps[l + 1]}, {"non_increasing", ok}, {"of", n_seeds}, {"required", need}});
    pairs_ok = pairs_ok && ok >= need;
    median_ok = median_ok && meds[l + 1] <= meds[l];
  }
  e.pass = median_ok && pairs_ok;
  e.metrics = Json{{"experiment", "step-size"}, {"k_times_epsilon", k_eps}, {"seeds", n_seeds},
                   {"medians", med},            {"paired", pairs},        {"median_non_increasing", median_ok},
                   {"pairs_ok", pairs_ok},      {"pass", e.pass}};
  e.files.push_back({"step_size.csv", table.str()});
  return e;
}

struct Reconstruction {
  SampleSet samples;
  CostEstimate estimate;
  AlignedCosts aligned;
};

inline Reconstruction reconstruct_cost(const ResolvedRun& r, std::optional<SampleSet> pre = std::nullopt) {
  Reconstruction out;
  out.samples = pre ? std::move(*pre) : sample_streams(r);
  const auto kde = kde_estimate(out.samples, r.recon.bandwidth(), r.recon.kde_kernel);
  const GridFunction dens = density_on_grid(kde, r.recon.theta_box.grid(r.recon.grid_points));
  out.estimate = cost_from_density(dens, r.psgld.beta, default_density_floor(r.psgld.beta, j_max_for(r)), kde.b_S);
  out.aligned = alignment_normalize(out.estimate, r.cost(), parse_align_mode(r.cfg.text("reconstruct", "align")));
  return out;
}

// L¹ reconstruction at the configured T plus a paired-seed sweep over T.
inline ExperimentResult reconstruction_sweep(const ExperimentConfig& base, const std::vector<std::int64_t>& Ts,
                                             int n_seeds, std::optional<int> threads = std::nullopt,
                                             std::optional<SampleSet> main_samples = std::nullopt) {
  const ResolvedRun r0 = resolve(base, true, threads);
  const Reconstruction main = reconstruct_cost(r0, std::move(main_samples));
  const double l1 = main.aligned.l1_error;
  std::vector<std::vector<double>> err(Ts.size(), std::vector<double>(n_seeds));
  std::ostringstream table;
  table << "seed,T,l1_error\n";
  for (int s = 0; s < n_seeds; ++s)
    for (std::size_t t = 0; t < Ts.size(); ++t) {
      ExperimentConfig c = base;
      c.set("run", "seed", std::to_string(static_cast<std::int64_t>(base.integer("run", "seed")) + s));
      c.set("reconstruct", "T", std::to_string(Ts[t]));
      const ResolvedRun r = resolve(c, true, threads);
      err[t][s] = reconstruct_cost(r).aligned.l1_error;
      table << r.seed << "," << Ts[t] << "," << format_double(err[t][s]) << "\n";
    }
  ExperimentResult e;
  Json meds = Json::array();
  bool mono = true;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < Ts.size(); ++t) {
    const double m = median(err[t]);
    meds.push_back({{"T", Ts[t]}, {"median_l1", m}});
    mono = mono && m <= prev;
    prev = m;
  }
  e.pass = l1 <= 0.3 && mono;
  e.metrics = Json{{"experiment", "reconstruction"},
                   {"T", r0.recon.T},
                   {"in_box", main.samples.samples.size()},
                   {"b_T", r0.recon.bandwidth()},
                   {"b_S", main.estimate.b_S},
                   {"density_floor", main.estimate.floor},
                   {"clamped_points", main.estimate.clamped_points},
                   {"l1_error", l1},
                   {"l1_threshold", 0.3},
                   {"sweep_medians", meds},
                   {"median_non_increasing", mono},
                   {"pass", e.pass}};
  e.files.push_back({"density.csv", grid_text(main.estimate.density, "density")});
  e.files.push_back({"cost.csv", grid_text(main.estimate.cost, "cost")});
  e.files.push_back({"aligned_cost.csv", grid_text(main.aligned.estimate, "cost")});
  e.files.push_back({"reference_cost.csv", grid_text(main.aligned.reference, "cost")});
  e.files.push_back({"l1_sweep.csv", table.str()});
  return e;
}

// Mean of REINFORCE draws against central differences of the truncated exact cost.
inline ExperimentResult reinforce_unbiased(const TabularMdp& m, const ParamVector& theta, double lambda, Regularizer reg,
                                           int horizon, int draws, std::uint64_t seed) {
  RandomSource rng(seed, 0x4E1F);
  const int d = static_cast<int>(theta.size());
  ParamVector s = ParamVector::Zero(d), s2 = ParamVector::Zero(d);
  for (int i = 0; i < draws; ++i) {
    const ParamVector g = reinforce_gradient(m, theta, lambda, reg, horizon, rng);
    s += g;
    s2 += g.cwiseProduct(g);
  }
  const ParamVector mean = s / draws;
  const ParamVector var = (s2 - draws * mean.cwiseProduct(mean)) / (draws - 1);
  const ParamVector se = (var / draws).cwiseSqrt();
  ParamVector fd(d);
  const double h = 1e-5;
  for (int i = 0; i < d; ++i) {
    ParamVector a = theta, b = theta;
    a[i] += h;
    b[i] -= h;
    fd[i] = (exact_cost_truncated(m, a, lambda, reg, horizon) - exact_cost_truncated(m, b, lambda, reg, horizon)) / (2 * h);
  }
  ExperimentResult e;
  e.pass = true;
  Json comps = Json::array();
  std::ostringstream csv;
  csv << "component,mean,se,finite_difference,z\n";
  for (int i = 0; i < d; ++i) {
    const double z = (mean[i] - fd[i]) / se[i];
    e.pass = e.pass && std::abs(z) <= 3.0;
    comps.push_back({{"mean", mean[i]}, {"se", se[i]}, {"finite_difference", fd[i]}, {"z", z}});
    csv << i << "," << format_double(mean[i]) << "," << format_double(se[i]) << "," << format_double(fd[i]) << ","
        << format_double(z) << "\n";
  }
  e.metrics = Json{{"experiment", "reinforce-unbiased"},
                   {"theta", to_std(theta)},
                   {"draws", draws},
                   {"horizon", horizon},
                   {"lambda", lambda},
                   {"truncation_tail_bound", truncation_tail_bound(m, horizon)},
                   {"components", comps},
                   {"pass", e.pass}};
  e.files.push_back({"reinforce.csv", csv.str()});
  return e;
}

inline ExperimentResult reinforce_unbiased(const ResolvedRun& r, int draws = 10000) {
  require(r.built.mdp.has_value(), "reinforce-unbiased needs [cost] name = mdp");
  ParamVector theta(r.N);
  for (int i = 0; i < r.N; ++i) theta[i] = 1.0 + i;
  return reinforce_unbiased(*r.built.mdp, theta, r.cfg.real("cost", "lambda"),
                            parse_regularizer(r.cfg.text("cost", "regularizer")),
                            static_cast<int>(r.cfg.integer("cost", "horizon")), draws, r.seed);
}

inline std::vector<std::string> experiment_names() {
  return {"quadratic-gibbs", "step-size", "reconstruction", "reinforce-unbiased"};
}

inline std::string default_experiment_config(const std::string& name) {
  if (name == "reinforce-unbiased") return kReinforceConfig;
  for (const auto& n : experiment_names())
    if (n == name) return kQuadraticGibbsConfig;
  throw Error("unknown experiment '" + name + "'");
}

inline ExperimentResult run_experiment(const std::string& name, const ExperimentConfig& cfg,
                                       std::optional<int> threads = std::nullopt) {
  if (name == "quadratic-gibbs") return quadratic_gibbs(resolve(cfg, true, threads));
  if (name == "step-size") return step_size_sweep(cfg, {0.1, 0.03, 0.01}, 20.0, 10, threads);
  if (name == "reconstruction") return reconstruction_sweep(cfg, {50, 200, 500}, 10, threads);
  if (name == "reinforce-unbiased") return reinforce_unbiased(resolve(cfg, true, threads));
  throw Error("unknown experiment '" + name + "'");
}

}  // namespace psgld
