#pragma once

#include "psgld/core/cost_model.hpp"
#include "psgld/forward/learners.hpp"
#include "psgld/harness/config.hpp"
#include "psgld/inverse/psgld.hpp"
#include "psgld/mdp/mdp.hpp"
#include "psgld/reconstruct/reconstruct.hpp"
#include "psgld/theory/theory.hpp"

#include <Eigen/Eigenvalues>
#include <boost/crc.hpp>
#include <boost/version.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace psgld {

inline constexpr const char* kProjectVersion = "0.1.0";

using Json = nlohmann::ordered_json;

inline std::vector<double> to_std(const ParamVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

struct BuiltCost {
  CostModel cost;
  std::optional<TabularMdp> mdp;
  std::string constants_source;  // "analytic", "numeric" or "override"
};

namespace detail {

inline ParamVector broadcast(const std::vector<double>& v, int dim, const char* what) {
  if (v.size() == 1) return ParamVector::Constant(dim, v[0]);
  if (static_cast<int>(v.size()) != dim)
    throw Error(std::string("config [reconstruct] ") + what + ": expected 1 or " + std::to_string(dim) + " values");
  return Eigen::Map<const ParamVector>(v.data(), dim);
}

// Synthetic data for the bayes and erm costs, drawn from its own stream.
inline std::vector<ParamVector> synthetic_locations(int n, int dim, double mean, double sd, std::uint64_t seed) {
  RandomSource r(seed, 0xDA7A);
  std::vector<ParamVector> out;
  for (int i = 0; i < n; ++i) out.push_back(ParamVector::Constant(dim, mean) + sd * r.normal_vector(dim));
  return out;
}

inline std::vector<ParamVector> synthetic_regression(int n, int dim, double w, double sd, std::uint64_t seed) {
  RandomSource r(seed, 0xDA7B);
  std::vector<ParamVector> out;
  for (int i = 0; i < n; ++i) {
    ParamVector z(dim + 1);
    z.head(dim) = r.normal_vector(dim);
    z[dim] = w * z.head(dim).sum() + sd * r.normal();
    out.push_back(z);
  }
  return out;
}

// Constants of a tabular MDP cost from finite differences on the angle box.
inline StructuralInput mdp_constants_numeric(const CostModel& c, const TabularMdp& m, double lambda, Regularizer reg,
                                             int horizon, std::uint64_t seed) {
  const int d = c.dim;
  const int pts = std::max(3, std::min(11, static_cast<int>(std::pow(2000.0, 1.0 / d))));
  const GridSpec g{ParamVector::Zero(d), ParamVector::Constant(d, kPi), pts};
  std::vector<ParamVector> grads(g.size());
  StructuralInput s;
  s.dim = d;
  s.m = 1.0;
  double LJ = 0, LG = 0, b = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const ParamVector p = g.point(i);
    grads[i] = c.grad(p);
    LJ = std::max(LJ, grads[i].norm());
    b = std::max(b, s.m * p.squaredNorm() - p.dot(grads[i]));
  }
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      const double dist = (g.point(i) - g.point(j)).norm();
      if (dist > 0) LG = std::max(LG, (grads[i] - grads[j]).norm() / dist);
    }
  s.L_J = std::max(LJ, 1e-12);
  s.L_gradJ = std::max(LG, 1e-12);
  s.b = b;
  const ParamVector zero = ParamVector::Zero(d);
  s.A = std::abs(c.value(zero));
  s.B = c.grad(zero).norm();
  const ParamVector mid = ParamVector::Constant(d, 0.5 * kPi);
  RandomSource r(seed, 0xC0DE);
  const ParamVector gm = c.grad(mid);
  double v = 0;
  const int n = 500;
  for (int k = 0; k < n; ++k) v += (reinforce_gradient(m, mid, lambda, reg, horizon, r) - gm).squaredNorm();
  s.zeta = v / n;
  return s;
}

}  // namespace detail

inline BuiltCost build_cost(const ExperimentConfig& cfg) {
  const std::string name = cfg.text("cost", "name");
  const int dim = static_cast<int>(cfg.integer("cost", "dim"));
  if (name != "mdp") require(dim >= 1, "config [cost] dim: must be >= 1");
  const double R = cfg.real("cost", "radius");
  require(R > 0, "config [cost] radius: must be > 0");
  const double noise = cfg.real("cost", "noise_sd");
  const auto batch = cfg.integer("cost", "batch");
  require(batch >= 0, "config [cost] batch: must be >= 0");
  BuiltCost out;
  out.constants_source = "analytic";
  if (name == "quadratic") {
    out.cost = quadratic_cost(dim, cfg.real("cost", "curvature"), noise, R);
  } else if (name == "double_well") {
    out.cost = double_well_cost(dim, noise, R);
  } else if (name == "mdp") {
    const std::string path = cfg.text("cost", "mdp_file");
    TabularMdp m = path.empty() ? default_test_mdp() : load_mdp(path);
    const double lambda = cfg.real("cost", "lambda");
    const Regularizer reg = parse_regularizer(cfg.text("cost", "regularizer"));
    const int H = static_cast<int>(cfg.integer("cost", "horizon"));
    require(H >= 1, "config [cost] horizon: must be >= 1");
    out.cost = mdp_cost(m, lambda, reg, H);
    out.cost.constants = detail::mdp_constants_numeric(out.cost, m, lambda, reg, H,
                                                       static_cast<std::uint64_t>(cfg.integer("cost", "data_seed")));
    out.constants_source = "numeric";
    out.mdp = std::move(m);
  } else if (name == "bayes") {
    const int n = static_cast<int>(cfg.integer("cost", "n_data"));
    require(n >= 1, "config [cost] n_data: must be >= 1");
    const double sd = cfg.real("cost", "data_sd"), pv = cfg.real("cost", "prior_var"), pm = cfg.real("cost", "prior_mean");
    require(sd > 0 && pv > 0, "config [cost] data_sd and prior_var must be > 0");
    const auto xs = detail::synthetic_locations(n, dim, cfg.real("cost", "true_param"), sd,
                                                static_cast<std::uint64_t>(cfg.integer("cost", "data_seed")));
    std::vector<LogTerm> liks;
    ParamVector sum = ParamVector::Zero(dim);
    for (const auto& x : xs) {
      liks.push_back(gaussian_log_likelihood(x, sd * sd));
      sum += x;
    }
    const double c = 1.0 / pv + n / (sd * sd);
    const ParamVector s = ParamVector::Constant(dim, pm / pv) + sum / (sd * sd);
    StructuralInput k;
    k.L_gradJ = c;
    k.m = 0.5 * c;
    k.b = s.squaredNorm() / (2.0 * c);
    k.B = s.norm();
    k.L_J = c * R + s.norm();
    k.dim = dim;
    if (batch > 0 && batch < n) {
      double tr = 0;
      const ParamVector mean = sum / n;
      for (const auto& x : xs) tr += (x - mean).squaredNorm();
      tr /= n;
      k.zeta = static_cast<double>(n) * n / batch * tr / std::pow(sd, 4);
    }
    out.cost = bayes_cost(gaussian_log_prior(pm, pv), liks, dim, k, 0.0, static_cast<std::size_t>(batch));
    out.cost.constants.A = std::abs(out.cost.value(ParamVector::Zero(dim)));
  } else if (name == "erm") {
    const int n = static_cast<int>(cfg.integer("cost", "n_data"));
    require(n >= 1, "config [cost] n_data: must be >= 1");
    const double reg = cfg.real("cost", "reg");
    const auto data = detail::synthetic_regression(n, dim, cfg.real("cost", "true_param"), cfg.real("cost", "data_sd"),
                                                   static_cast<std::uint64_t>(cfg.integer("cost", "data_seed")));
    Eigen::MatrixXd H = 2.0 * reg * Eigen::MatrixXd::Identity(dim, dim);
    ParamVector g0 = ParamVector::Zero(dim);
    for (const auto& z : data) {
      H += z.head(dim) * z.head(dim).transpose() / n;
      g0 -= z[dim] * z.head(dim) / n;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
    require(lmin > 0, "erm cost: Hessian is singular; increase [cost] reg or n_data");
    StructuralInput k;
    k.L_gradJ = lmax;
    k.m = 0.5 * lmin;
    k.b = g0.squaredNorm() / (2.0 * lmin);
    k.B = g0.norm();
    k.L_J = lmax * R + g0.norm();
    k.dim = dim;
    out.cost = erm_cost(data, least_squares_loss(), reg, dim, static_cast<std::size_t>(batch), k);
    out.cost.constants.A = std::abs(out.cost.value(ParamVector::Zero(dim)));
    if (batch > 0 && batch < n) {
      // Per-sample gradient spread at the origin and the axis points of the radius-R ball.
      const SampleLoss loss = least_squares_loss();
      double worst = 0;
      for (int a = -1; a < 2 * dim; ++a) {
        ParamVector w = ParamVector::Zero(dim);
        if (a >= 0) w[a / 2] = (a % 2 ? -R : R);
        ParamVector mean = ParamVector::Zero(dim);
        for (const auto& z : data) mean += loss.grad(w, z) / n;
        double v = 0;
        for (const auto& z : data) v += (loss.grad(w, z) - mean).squaredNorm() / n;
        worst = std::max(worst, v);
      }
      out.cost.constants.zeta = worst / batch;
    }
    out.constants_source = "analytic";
  }
  // User overrides.
  auto& k = out.cost.constants;
  const std::pair<const char*, double*> over[] = {{"L_J", &k.L_J}, {"L_gradJ", &k.L_gradJ}, {"m", &k.m},
                                                  {"b", &k.b},     {"A", &k.A},             {"B", &k.B},
                                                  {"zeta", &k.zeta}};
  for (const auto& [key, ptr] : over) {
    if (auto v = cfg.real_or_auto("constants", key)) {
      *ptr = *v;
      out.constants_source = "override";
    }
  }
  k.validate();
  return out;
}

inline int resolve_threads(const ExperimentConfig& cfg, std::optional<int> cli = std::nullopt) {
  if (cli) {
    require(*cli >= 1, "--threads must be >= 1");
    return *cli;
  }
  const auto t = cfg.integer("run", "threads");
  if (t > 0) return static_cast<int>(t);
  require(t == 0, "config [run] threads: must be >= 0");
  if (const char* env = std::getenv("PSGLD_IRL_THREADS")) {
    std::int64_t v;
    if (!detail::parse_int(env, v) || v < 1) throw Error("PSGLD_IRL_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return 1;
}

struct TheoryReport {
  Json json;
  std::optional<StructuralConstants> sc_ls;  // evaluated at γ = 1
  std::optional<BoundConstants> ls;
  std::optional<Schedule> schedule;
  std::string error;  // why the δ-schedule is unavailable, if it is
};

struct ResolvedRun {
  ExperimentConfig cfg;
  BuiltCost built;
  int N = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string schedule_mode;
  ScaledDistribution forward_dist;
  SgdConfig sgd;
  PsgldConfig psgld;
  std::int64_t k_hat = 0;
  std::optional<Schedule> schedule;
  ReconstructConfig recon;
  Domains domains;
  std::vector<std::string> warnings;

  const CostModel& cost() const { return built.cost; }
  RandomSource psgld_root() const { return RandomSource(seed, 0xA11CE); }
};

inline StructuralConstants structural_for(const ResolvedRun& r, double gamma) {
  return make_structural_constants(r.cost().constants, r.psgld.dist.base(), r.psgld.beta, r.sgd.c_opt,
                                   r.cfg.real("theory", "mu_sgd_hat"), gamma, r.cfg.real("theory", "c_universal"));
}

// c_LS is taken at γ = 1: it only grows as γ does not shrink, so the value is
// a conservative input to the δ range and schedule.
inline TheoryReport theory_schedule(const ExperimentConfig& cfg, const CostModel& cost, const BaseDistribution& base) {
  TheoryReport t;
  try {
    const StructuralConstants sc =
        make_structural_constants(cost.constants, base, cfg.real("psgld", "beta"), cfg.real("forward", "c_opt"),
                                  cfg.real("theory", "mu_sgd_hat"), 1.0, cfg.real("theory", "c_universal"));
    t.sc_ls = sc;
    t.ls = compute_log_sobolev(sc);
    t.schedule = schedule_from_delta(cfg.real("psgld", "delta"), sc, t.ls->c_LS, gaussian_kernel(cost.dim));
  } catch (const Error& e) {
    t.error = e.what();
  }
  return t;
}

inline ResolvedRun resolve(const ExperimentConfig& cfg, bool for_run, std::optional<int> cli_threads = std::nullopt,
                           std::optional<std::uint64_t> cli_seed = std::nullopt) {
  ResolvedRun r;
  r.cfg = cfg;
  if (cli_seed) r.cfg.set("run", "seed", std::to_string(*cli_seed));
  r.seed = static_cast<std::uint64_t>(r.cfg.integer("run", "seed"));
  r.threads = resolve_threads(r.cfg, cli_threads);
  r.built = build_cost(r.cfg);
  r.N = r.cost().dim;

  const double s2 = cfg.real("sampling", "sigma2"), g = cfg.real("sampling", "gamma");
  require(s2 > 0, "config [sampling] sigma2: must be > 0");
  require(g > 0, "config [sampling] gamma: must be > 0");
  const BaseDistribution base = gaussian_base(r.N, s2);
  r.forward_dist = ScaledDistribution(base, g);

  // Forward learner.
  const std::string kind = cfg.text("forward", "kind");
  const bool is_mdp = r.built.mdp.has_value();
  if (is_mdp != (kind == "reinforce"))
    throw Error("config [forward] kind: 'reinforce' is required for, and only valid with, [cost] name = mdp");
  r.sgd.eta = cfg.real("forward", "eta");
  r.sgd.c_opt = cfg.real("forward", "c_opt");
  r.sgd.dist = r.forward_dist;
  validate_sgd_config(r.sgd, r.cost().constants);

  // Sampler.
  r.schedule_mode = cfg.text("psgld", "schedule");
  r.psgld.beta = cfg.real("psgld", "beta");
  r.psgld.kernel = gaussian_kernel(r.N);
  if (r.schedule_mode == "explicit") {
    r.psgld.epsilon = cfg.real("psgld", "epsilon");
    r.psgld.delta = cfg.real("psgld", "kernel_delta");
    r.psgld.dist = r.forward_dist;
    r.k_hat = cfg.integer("psgld", "k_hat");
    for (auto& w : psgld_feasibility(r.psgld, r.cost().constants)) r.warnings.push_back("A8: " + w);
  } else {
    const TheoryReport t = theory_schedule(cfg, r.cost(), base);
    if (!t.schedule) throw Error("delta schedule unavailable: " + t.error);
    r.schedule = t.schedule;
    if (for_run && !t.schedule->kernel_delta_feasible)
      throw Error("delta schedule: no admissible kernel scale Δ for this kernel at ε = " +
                  format_double(t.schedule->epsilon) + "; use [psgld] schedule = explicit");
    if (for_run && t.schedule->k > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      throw Error("delta schedule: k = " + std::to_string(t.schedule->k) + " iterations is not runnable");
    r.psgld.epsilon = t.schedule->epsilon;
    r.psgld.delta = t.schedule->kernel_delta > 0 ? t.schedule->kernel_delta : 1.0;
    r.psgld.dist = ScaledDistribution(base, t.schedule->gamma);
    r.k_hat = static_cast<std::int64_t>(std::min<std::uint64_t>(t.schedule->k, std::numeric_limits<std::int64_t>::max()));
    const auto v = psgld_feasibility(r.psgld, r.cost().constants);
    if (for_run && !v.empty()) throw Error("A8 feasibility violated: " + v.front());
    for (auto& w : v) r.warnings.push_back("A8: " + w);
  }
  require(r.k_hat >= 0, "config [psgld] k_hat: must be >= 0");
  validate_psgld_config(r.psgld);

  // Reconstruction.
  const Box inner{detail::broadcast(cfg.reals("reconstruct", "box_lo"), r.N, "box_lo"),
                  detail::broadcast(cfg.reals("reconstruct", "box_hi"), r.N, "box_hi")};
  const double rho = cfg.real("reconstruct", "rho"), alpha = cfg.real("theory", "alpha");
  r.domains = construct_domains(inner, cfg.real("reconstruct", "margin"), rho, alpha);
  r.recon.rho = rho;
  r.recon.T = cfg.integer("reconstruct", "T");
  r.recon.theta_box = r.domains.outer;
  r.recon.kde_kernel = gaussian_kernel(r.N);
  r.recon.b_T = cfg.real_or_auto("reconstruct", "b_T").value_or(0.0);
  r.recon.k_hat = r.k_hat;
  r.recon.psgld = r.psgld;
  r.recon.mode = cfg.text("reconstruct", "forward_mode") == "shared" ? ForwardMode::Shared : ForwardMode::Independent;
  r.recon.threads = r.threads;
  r.recon.grid_points = static_cast<int>(cfg.integer("reconstruct", "grid_points"));
  r.recon.validate();

  auto iters = cfg.integer("forward", "max_iters");
  require(iters >= 0, "config [forward] max_iters: must be >= 0");
  if (iters == 0)
    iters = r.recon.mode == ForwardMode::Shared ? (r.k_hat + 200) * r.recon.T + 100 : r.k_hat + 1;
  r.sgd.max_iters = iters;
  return r;
}

// Stream i of the configured forward learner.
inline ForwardFactory forward_factory(const ResolvedRun& r) {
  const std::string kind = r.cfg.text("forward", "kind");
  const std::uint64_t seed = r.seed;
  if (kind == "sgd") return reinit_sgd_factory(r.cost(), r.sgd, seed);
  if (kind == "sgld") {
    const double fb = r.cfg.real("forward", "beta");
    return [cost = r.cost(), sgd = r.sgd, fb, seed](std::uint64_t i) -> std::unique_ptr<ForwardStream> {
      return std::make_unique<SgldStream>(cost, sgd.eta, fb, sgd.dist, sgd.max_iters,
                                          RandomSource(seed, i).derive(0xF0F0));
    };
  }
  if (kind == "federated") {
    const auto workers = r.cfg.integer("forward", "workers");
    require(workers >= 1, "config [forward] workers: must be >= 1");
    SgdConfig each = r.sgd;
    each.max_iters = (r.sgd.max_iters + workers - 1) / workers + 1;
    return [cost = r.cost(), each, workers, seed](std::uint64_t i) -> std::unique_ptr<ForwardStream> {
      std::vector<std::unique_ptr<ForwardStream>> ws;
      for (std::int64_t w = 0; w < workers; ++w)
        ws.push_back(std::make_unique<ReinitSgdStream>(cost, each, RandomSource(seed, i).derive(0xFED0 + w)));
      return std::make_unique<FederatedStream>(std::move(ws));
    };
  }
  // reinforce
  ReinforceConfig rc;
  rc.eta = r.sgd.eta;
  rc.c_opt = r.sgd.c_opt;
  rc.max_iters = r.sgd.max_iters;
  rc.lambda = r.cfg.real("cost", "lambda");
  rc.reg = parse_regularizer(r.cfg.text("cost", "regularizer"));
  rc.horizon = static_cast<int>(r.cfg.integer("cost", "horizon"));
  rc.dist = r.forward_dist;
  return [m = *r.built.mdp, rc, seed](std::uint64_t i) {
    return make_reinforce_stream(m, rc, RandomSource(seed, i).derive(0xF0F0));
  };
}

inline double j_max_for(const ResolvedRun& r) {
  if (auto v = r.cfg.real_or_auto("reconstruct", "j_max")) return *v;
  const int pts = std::clamp(static_cast<int>(std::pow(2e5, 1.0 / r.N)), 3, 101);
  return j_max_on_box(r.cost(), r.recon.theta_box, pts);
}

inline Json structural_json(const StructuralInput& s) {
  return Json{{"L_J", s.L_J}, {"L_gradJ", s.L_gradJ}, {"m", s.m}, {"b", s.b},
              {"A", s.A},     {"B", s.B},             {"zeta", s.zeta}, {"dim", s.dim}};
}

inline Json schedule_json(const Schedule& s) {
  return Json{{"delta", s.delta},
              {"epsilon", s.epsilon},
              {"k", s.k},
              {"k_times_epsilon", static_cast<double>(s.k) * s.epsilon},
              {"kernel_delta", s.kernel_delta},
              {"kernel_delta_feasible", s.kernel_delta_feasible},
              {"gamma", s.gamma}};
}

// Theorem 1/2 evaluations for the configuration; failures are reported, not thrown.
inline Json bounds_report(const ResolvedRun& r) {
  Json j;
  j["cost"] = r.cost().name;
  j["constants_source"] = r.built.constants_source;
  j["structural"] = structural_json(r.cost().constants);
  const auto t = theory_schedule(r.cfg, r.cost(), r.psgld.dist.base());
  if (!t.sc_ls) {
    j["error"] = t.error;
    return j;
  }
  const auto& sc1 = *t.sc_ls;
  j["kappa0"] = sc1.kappa0;
  j["I"] = sc1.I;
  j["I_prime"] = sc1.I_prime;
  j["M_theta"] = sc1.M_theta;
  j["tail_radius"] = sc1.tail_radius;
  if (!t.ls) {
    j["error"] = t.error;
    return j;
  }
  j["log_sobolev"] = {{"kappa", t.ls->kappa},
                      {"gamma_lyap", t.ls->gamma_lyap},
                      {"poincare_inv", t.ls->poincare_inv},
                      {"c_LS", t.ls->c_LS},
                      {"log_c_LS", t.ls->log_c_LS}};
  j["delta_max"] = delta_max(r.psgld.beta, t.ls->c_LS);
  if (!t.schedule) {
    j["error"] = t.error;
    return j;
  }
  const Schedule& s = *t.schedule;
  j["schedule"] = schedule_json(s);
  Json a8 = Json::array();
  PsgldConfig pc = r.psgld;
  pc.epsilon = s.epsilon;
  for (auto& w : psgld_feasibility(pc, r.cost().constants)) a8.push_back(w);
  j["a8_violations"] = a8;

  StructuralConstants scg = structural_for(r, s.gamma);
  ReconstructionInputs ri = gaussian_kde_constants({}, r.N);
  ri.x = r.cfg.real("theory", "x");
  ri.T = static_cast<double>(r.recon.T);
  ri.b_T = r.recon.bandwidth();
  ri.T1 = j_max_for(r);
  ri.theta_size = r.recon.theta_box.volume();
  const BoundConstants C = compute_C_constants(scg, s.epsilon, &ri);
  j["C"] = {{"C0", C.C0}, {"C1", C.C1}, {"C2", C.C2}, {"C3", C.C3}, {"C4", C.C4}, {"C5", C.C5}, {"C6", C.C6}};
  j["wasserstein_bound"] = wasserstein_bound(s.delta, C, t.ls->c_LS, r.N);

  ReconstructionBoundArgs a;
  a.r = ri;
  a.y = r.cfg.real("theory", "y");
  a.rho = r.recon.rho;
  a.xi = r.domains.xi_bound;
  a.L = log_lipschitz_constant(r.psgld.beta, ri.T1);
  a.P_Theta = 1.0;
  Json rb{{"x", ri.x}, {"y", a.y}, {"T", ri.T}, {"b_T", ri.b_T}, {"T1", ri.T1}, {"theta_size", ri.theta_size},
          {"xi", a.xi}, {"L", a.L}, {"P_theta", a.P_Theta}};
  try {
    const auto out = reconstruction_bound(a, scg);
    rb["phi"] = out.phi;
    rb["psi"] = out.psi;
    rb["tail"] = out.tail;
    rb["vacuous"] = out.vacuous;
  } catch (const Error& e) {
    rb["error"] = e.what();
  }
  j["reconstruction_bound"] = rb;
  return j;
}

// Output directory that records every file it writes.
class OutputDir {
 public:
  explicit OutputDir(std::string path) : path_(std::move(path)) { std::filesystem::create_directories(path_); }

  const std::string& path() const { return path_; }

  void write(const std::string& name, const std::string& content) {
    const std::string full = (std::filesystem::path(path_) / name).string();
    std::ofstream f(full, std::ios::binary);
    if (!f) throw Error("cannot write '" + full + "'");
    f << content;
    if (!f) throw Error("write failed for '" + full + "'");
    boost::crc_32_type crc;
    crc.process_bytes(content.data(), content.size());
    files_.push_back(Json{{"name", name}, {"bytes", content.size()}, {"crc32", crc.checksum()}});
  }

  const Json& inventory() const { return files_; }

 private:
  std::string path_;
  Json files_ = Json::array();
};

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

inline Json versions_json() {
  return Json{{"psgld_irl", kProjectVersion},
              {"compiler", __VERSION__},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"boost", BOOST_LIB_VERSION}};
}

// manifest.json: configuration, resolved parameters, seeds, versions, timing, inventory.
inline void write_manifest(OutputDir& out, const ResolvedRun& r, const std::string& command, double wall_seconds,
                           const Json& extra = Json::object()) {
  Json m;
  m["command"] = command;
  m["config"] = r.cfg.serialize();
  m["schedule_mode"] = r.schedule_mode;
  m["seeds"] = {{"master", r.seed}, {"forward_stream_key", "RandomSource(master, i).derive(0xF0F0)"},
                {"psgld_stream_key", "RandomSource(master, 0xA11CE).derive(i)"}};
  m["threads"] = r.threads;
  m["resolved"] = {{"N", r.N},
                   {"epsilon", r.psgld.epsilon},
                   {"beta", r.psgld.beta},
                   {"kernel_delta", r.psgld.delta},
                   {"gamma", r.psgld.dist.gamma()},
                   {"sigma2", r.cfg.real("sampling", "sigma2")},
                   {"k_hat", r.k_hat},
                   {"forward_max_iters", r.sgd.max_iters},
                   {"T", r.recon.T},
                   {"b_T", r.recon.bandwidth()},
                   {"theta_lo", to_std(r.recon.theta_box.lo)},
                   {"theta_hi", to_std(r.recon.theta_box.hi)},
                   {"xi_bound", r.domains.xi_bound}};
  if (r.schedule) m["schedule"] = schedule_json(*r.schedule);
  m["structural"] = structural_json(r.cost().constants);
  m["constants_source"] = r.built.constants_source;
  m["warnings"] = r.warnings;
  m["versions"] = versions_json();
  m["wall_clock_seconds"] = wall_seconds;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  m["files"] = out.inventory();
  const std::string full = (std::filesystem::path(out.path()) / "manifest.json").string();
  std::ofstream f(full, std::ios::binary);
  if (!f) throw Error("cannot write '" + full + "'");
  f << json_text(m);
}

}  // namespace psgld
