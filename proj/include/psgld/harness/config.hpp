#pragma once

#include "psgld/core/types.hpp"
#include "psgld/forward/events.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace psgld {

// Plain-text experiment configuration: INI sections of key = value lines,
// `#` or `;` comments. Every key must appear in the schema below.
enum class FieldKind { Real, RealOrAuto, Integer, Text, Choice, RealList };

struct FieldSpec {
  const char* section;
  const char* key;
  const char* default_value;
  FieldKind kind;
  std::vector<std::string> choices;
  const char* doc;
};

inline const std::vector<FieldSpec>& config_schema() {
  using K = FieldKind;
  static const std::vector<FieldSpec> s = {
      {"run", "seed", "1", K::Integer, {}, "master seed"},
      {"run", "threads", "0", K::Integer, {}, "worker threads; 0 uses PSGLD_IRL_THREADS or 1"},
      {"run", "out_dir", "psgld_out", K::Text, {}, "output directory"},

      {"cost", "name", "quadratic", K::Choice, {"quadratic", "double_well", "mdp", "bayes", "erm"}, "builtin cost"},
      {"cost", "dim", "1", K::Integer, {}, "dimension N (ignored for mdp)"},
      {"cost", "curvature", "1", K::Real, {}, "quadratic curvature"},
      {"cost", "noise_sd", "0", K::Real, {}, "additive gradient noise (quadratic, double_well)"},
      {"cost", "radius", "2", K::Real, {}, "radius on which Lipschitz constants are taken"},
      {"cost", "mdp_file", "", K::Text, {}, "MDP description; empty selects the built-in two-state MDP"},
      {"cost", "lambda", "0.1", K::Real, {}, "MDP regularization weight"},
      {"cost", "regularizer", "l2", K::Choice, {"l2", "entropy"}, "MDP regularizer"},
      {"cost", "horizon", "30", K::Integer, {}, "REINFORCE horizon"},
      {"cost", "n_data", "100", K::Integer, {}, "synthetic data size (bayes, erm)"},
      {"cost", "data_seed", "7", K::Integer, {}, "seed of the synthetic data"},
      {"cost", "true_param", "0.5", K::Real, {}, "parameter generating the synthetic data"},
      {"cost", "data_sd", "1", K::Real, {}, "observation noise sd of the synthetic data"},
      {"cost", "prior_mean", "0", K::Real, {}, "bayes prior mean"},
      {"cost", "prior_var", "1", K::Real, {}, "bayes prior variance"},
      {"cost", "reg", "0.01", K::Real, {}, "erm ridge weight"},
      {"cost", "batch", "0", K::Integer, {}, "minibatch size; 0 is the full data set"},

      {"constants", "L_J", "auto", K::RealOrAuto, {}, "override for L_J"},
      {"constants", "L_gradJ", "auto", K::RealOrAuto, {}, "override for L_∇J"},
      {"constants", "m", "auto", K::RealOrAuto, {}, "override for m"},
      {"constants", "b", "auto", K::RealOrAuto, {}, "override for b"},
      {"constants", "A", "auto", K::RealOrAuto, {}, "override for A = |J(0)|"},
      {"constants", "B", "auto", K::RealOrAuto, {}, "override for B = ‖∇J(0)‖"},
      {"constants", "zeta", "auto", K::RealOrAuto, {}, "override for the noise bound ζ"},

      {"sampling", "sigma2", "0.25", K::Real, {}, "variance of the Gaussian base law π₀"},
      {"sampling", "gamma", "1", K::Real, {}, "scale γ of π_{0,γ}"},

      {"forward", "kind", "sgd", K::Choice, {"sgd", "sgld", "reinforce", "federated"}, "forward learner"},
      {"forward", "eta", "0.1", K::Real, {}, "step size η"},
      {"forward", "c_opt", "0.05", K::Real, {}, "restart threshold on ‖∇̂J‖"},
      {"forward", "max_iters", "0", K::Integer, {}, "events per forward stream; 0 sizes it from k_hat"},
      {"forward", "workers", "2", K::Integer, {}, "federated workers"},
      {"forward", "beta", "2", K::Real, {}, "inverse temperature of an SGLD forward learner"},

      {"psgld", "beta", "2", K::Real, {}, "inverse temperature β"},
      {"psgld", "schedule", "explicit", K::Choice, {"explicit", "delta"}, "explicit parameters or δ-driven schedule"},
      {"psgld", "epsilon", "0.01", K::Real, {}, "step size ε (explicit)"},
      {"psgld", "k_hat", "2000", K::Integer, {}, "sampling iterate k̂ (explicit)"},
      {"psgld", "kernel_delta", "0.3", K::Real, {}, "kernel scale Δ (explicit)"},
      {"psgld", "delta", "0.1", K::Real, {}, "target accuracy δ (delta schedule, bounds)"},

      {"theory", "mu_sgd_hat", "1", K::Real, {}, "lower bound on the SGD gradient variance"},
      {"theory", "c_universal", "1", K::Real, {}, "universal constant of the Poincaré bound"},
      {"theory", "x", "1", K::Real, {}, "concentration variable x"},
      {"theory", "y", "1", K::Real, {}, "concentration variable y"},
      {"theory", "alpha", "1", K::Real, {}, "transport mass α for the ξ bound"},

      {"reconstruct", "T", "2000", K::Integer, {}, "number of PSGLD streams"},
      {"reconstruct", "box_lo", "-1", K::RealList, {}, "inner box Θ′ lower corner (scalar broadcasts)"},
      {"reconstruct", "box_hi", "1", K::RealList, {}, "inner box Θ′ upper corner (scalar broadcasts)"},
      {"reconstruct", "margin", "1", K::Real, {}, "inflation of Θ′ into Θ"},
      {"reconstruct", "rho", "0", K::Real, {}, "2-Wasserstein proximity ρ"},
      {"reconstruct", "b_T", "auto", K::RealOrAuto, {}, "bandwidth; auto is T^{-1/4}"},
      {"reconstruct", "grid_points", "201", K::Integer, {}, "grid points per axis"},
      {"reconstruct", "forward_mode", "independent", K::Choice, {"independent", "shared"}, "forward stream layout"},
      {"reconstruct", "align", "min", K::Choice, {"min", "mode-match"}, "alignment before the L¹ error"},
      {"reconstruct", "j_max", "auto", K::RealOrAuto, {}, "max of J on Θ for the density floor"},
  };
  return s;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool parse_real(const std::string& s, double& v) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto r = std::from_chars(first, t.data() + t.size(), v);
  return r.ec == std::errc() && r.ptr == t.data() + t.size() && std::isfinite(v);
}

inline bool parse_int(const std::string& s, std::int64_t& v) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

// Shortest text that parses back to the same double.
inline std::string shortest_double(double d) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

inline std::string field_name(const FieldSpec& f) { return std::string("[") + f.section + "] " + f.key; }

// Canonical text of one value; throws with the field name on malformed input.
inline std::string canonical_value(const FieldSpec& f, const std::string& raw) {
  const std::string v = trim(raw);
  auto bad = [&](const char* what) -> Error {
    return Error("config " + field_name(f) + ": expected " + what + ", got '" + v + "'");
  };
  switch (f.kind) {
    case FieldKind::Real: {
      double d;
      if (!parse_real(v, d)) throw bad("a finite real number");
      return shortest_double(d);
    }
    case FieldKind::RealOrAuto: {
      if (v == "auto") return v;
      double d;
      if (!parse_real(v, d)) throw bad("a finite real number or 'auto'");
      return shortest_double(d);
    }
    case FieldKind::Integer: {
      std::int64_t i;
      if (!parse_int(v, i)) throw bad("an integer");
      return std::to_string(i);
    }
    case FieldKind::Text:
      return v;
    case FieldKind::Choice: {
      for (const auto& c : f.choices)
        if (c == v) return v;
      std::string opts;
      for (const auto& c : f.choices) opts += (opts.empty() ? "" : ", ") + c;
      throw Error("config " + field_name(f) + ": '" + v + "' is not one of {" + opts + "}");
    }
    case FieldKind::RealList: {
      std::stringstream ss(v);
      std::string cell, out;
      int n = 0;
      while (std::getline(ss, cell, ',')) {
        double d;
        if (!parse_real(cell, d)) throw bad("a comma-separated list of reals");
        out += (n++ ? "," : "") + shortest_double(d);
      }
      if (n == 0) throw bad("a comma-separated list of reals");
      return out;
    }
  }
  return v;
}

}  // namespace detail

class ExperimentConfig {
 public:
  ExperimentConfig() {
    for (const auto& f : config_schema()) values_[key(f.section, f.key)] = detail::canonical_value(f, f.default_value);
  }

  static ExperimentConfig parse(const std::string& text) {
    boost::property_tree::ptree pt;
    std::istringstream is(text);
    try {
      boost::property_tree::ini_parser::read_ini(is, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    ExperimentConfig c;
    for (const auto& [section, body] : pt) {
      if (body.empty()) throw Error("config: key '" + section + "' outside a [section]");
      for (const auto& [k, v] : body) c.set(section, k, v.get_value<std::string>());
    }
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  void set(const std::string& section, const std::string& k, const std::string& raw) {
    const FieldSpec* f = find(section, k);
    if (!f) throw Error("config: unknown key '" + k + "' in section [" + section + "]");
    values_[key(section, k)] = detail::canonical_value(*f, raw);
  }

  // Canonical text: every key in schema order, defaults included.
  std::string serialize() const {
    std::ostringstream os;
    std::string sec;
    for (const auto& f : config_schema()) {
      if (sec != f.section) {
        if (!sec.empty()) os << "\n";
        sec = f.section;
        os << "[" << sec << "]\n";
      }
      os << f.key << " = " << values_.at(key(f.section, f.key)) << "\n";
    }
    return os.str();
  }

  const std::string& text(const std::string& section, const std::string& k) const {
    auto it = values_.find(key(section, k));
    if (it == values_.end()) throw Error("config: no key [" + section + "] " + k);
    return it->second;
  }
  double real(const std::string& section, const std::string& k) const {
    double d;
    if (!detail::parse_real(text(section, k), d)) throw Error("config: [" + section + "] " + k + " is not a real");
    return d;
  }
  std::optional<double> real_or_auto(const std::string& section, const std::string& k) const {
    if (text(section, k) == "auto") return std::nullopt;
    return real(section, k);
  }
  std::int64_t integer(const std::string& section, const std::string& k) const {
    std::int64_t i;
    if (!detail::parse_int(text(section, k), i)) throw Error("config: [" + section + "] " + k + " is not an integer");
    return i;
  }
  std::vector<double> reals(const std::string& section, const std::string& k) const {
    std::vector<double> out;
    std::stringstream ss(text(section, k));
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
  }

  bool operator==(const ExperimentConfig& o) const { return values_ == o.values_; }

 private:
  static std::string key(const std::string& s, const std::string& k) { return s + "." + k; }
  static const FieldSpec* find(const std::string& s, const std::string& k) {
    for (const auto& f : config_schema())
      if (s == f.section && k == f.key) return &f;
    return nullptr;
  }
  std::map<std::string, std::string> values_;
};

}  // namespace psgld
