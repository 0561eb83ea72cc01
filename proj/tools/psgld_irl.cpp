// Command-line front end: forward learners, PSGLD, reconstruction, schedules,
// bounds, metrics and the named reproduction experiments.

#include "psgld/harness/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace psgld;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> threads;
  std::string format = "json";
};

ExperimentConfig load_config(const Options& o, const std::string& fallback_text = "") {
  if (!o.config_path.empty()) return ExperimentConfig::load(o.config_path);
  if (!fallback_text.empty()) return ExperimentConfig::parse(fallback_text);
  return ExperimentConfig{};
}

std::string out_dir_for(const Options& o, const ResolvedRun& r) {
  return o.out_dir.empty() ? r.cfg.text("run", "out_dir") : o.out_dir;
}

void flatten(const Json& j, const std::string& prefix, std::ostream& os) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), os);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), os);
  } else if (j.is_number_float()) {
    os << prefix << "," << format_double(j.get<double>()) << "\n";
  } else {
    os << prefix << "," << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

void emit(const Json& j, const Options& o) {
  if (o.format == "csv") {
    std::cout << "key,value\n";
    flatten(j, "", std::cout);
  } else {
    std::cout << json_text(j);
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void warn(const ResolvedRun& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_run_forward(const Options& o, std::uint64_t stream) {
  const auto t0 = std::chrono::steady_clock::now();
  const ResolvedRun r = resolve(load_config(o), true, o.threads, o.seed);
  warn(r);
  auto fwd = forward_factory(r)(stream);
  const auto events = collect(*fwd);
  std::ostringstream os;
  write_events_csv(os, events, r.N);
  OutputDir out(out_dir_for(o, r));
  out.write("events.csv", os.str());
  write_manifest(out, r, "run-forward", seconds_since(t0), Json{{"stream", stream}, {"events", events.size()}});
  std::cout << "wrote " << events.size() << " events to " << out.path() << "/events.csv\n";
  return 0;
}

int cmd_run_psgld(const Options& o, const std::string& events_path, std::uint64_t stream, bool trace) {
  const auto t0 = std::chrono::steady_clock::now();
  const ResolvedRun r = resolve(load_config(o), true, o.threads, o.seed);
  warn(r);
  std::unique_ptr<ForwardStream> fwd;
  if (!events_path.empty()) {
    std::ifstream f(events_path);
    if (!f) throw Error("cannot open events file '" + events_path + "'");
    fwd = std::make_unique<ReplayStream>(read_events_csv(f));
  } else {
    fwd = forward_factory(r)(stream);
  }
  std::ostringstream tr;
  if (trace) write_trace_header(tr, r.N);
  RandomSource rng = r.psgld_root().derive(stream);
  const TraceSink sink = trace ? TraceSink([&](const PsgldState& s) { write_trace_row(tr, s); }) : TraceSink{};
  const PsgldState s = run_psgld(*fwd, r.psgld, r.k_hat, rng, sink);
  OutputDir out(out_dir_for(o, r));
  std::ostringstream fin;
  write_trace_header(fin, r.N);
  write_trace_row(fin, s);
  out.write("final_state.csv", fin.str());
  if (trace) out.write("trace.csv", tr.str());
  write_manifest(out, r, "run-psgld", seconds_since(t0),
                 Json{{"stream", stream}, {"events_file", events_path}, {"final_alpha", to_std(s.alpha)}});
  std::cout << "final alpha at k = " << s.k << ":";
  for (int i = 0; i < r.N; ++i) std::cout << " " << format_double(s.alpha[i]);
  std::cout << "\n";
  return 0;
}

int cmd_reconstruct(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ResolvedRun r = resolve(load_config(o), true, o.threads, o.seed);
  warn(r);
  const Reconstruction rec = reconstruct_cost(r);
  OutputDir out(out_dir_for(o, r));
  out.write("samples.csv", samples_text(rec.samples.samples, r.N));
  out.write("density.csv", grid_text(rec.estimate.density, "density"));
  out.write("cost.csv", grid_text(rec.estimate.cost, "cost"));
  out.write("aligned_cost.csv", grid_text(rec.aligned.estimate, "cost"));
  out.write("reference_cost.csv", grid_text(rec.aligned.reference, "cost"));
  Json summary = reconstruction_summary(rec.samples, r.recon, &rec.estimate, r.domains.xi_bound);
  summary["l1_error_aligned"] = rec.aligned.l1_error;
  summary["align"] = r.cfg.text("reconstruct", "align");
  summary["config"] = r.cfg.serialize();
  out.write("summary.json", json_text(summary));
  write_manifest(out, r, "reconstruct", seconds_since(t0));
  emit(summary, o);
  return 0;
}

int cmd_schedule(const Options& o, std::optional<double> delta) {
  ExperimentConfig c = load_config(o);
  if (delta) c.set("psgld", "delta", format_double(*delta));
  const ResolvedRun r = resolve(c, false, o.threads, o.seed);
  const TheoryReport t = theory_schedule(r.cfg, r.cost(), r.psgld.dist.base());
  if (!t.schedule) throw Error(t.error);
  Json j = schedule_json(*t.schedule);
  j["c_LS"] = t.ls->c_LS;
  j["beta"] = r.psgld.beta;
  j["delta_max"] = delta_max(r.psgld.beta, t.ls->c_LS);
  PsgldConfig pc = r.psgld;
  pc.epsilon = t.schedule->epsilon;
  j["a8_violations"] = psgld_feasibility(pc, r.cost().constants);
  emit(j, o);
  return 0;
}

int cmd_bounds(const Options& o) {
  const ResolvedRun r = resolve(load_config(o), false, o.threads, o.seed);
  emit(bounds_report(r), o);
  return 0;
}

int cmd_metrics(const Options& o, const std::string& a, const std::string& b, const std::string& kind, int n_proj) {
  auto open = [](const std::string& p) {
    auto f = std::make_unique<std::ifstream>(p);
    if (!*f) throw Error("cannot open '" + p + "'");
    return f;
  };
  Json j;
  if (kind == "grid") {
    auto fa = open(a), fb = open(b);
    const auto ga = read_grid_csv(*fa), gb = read_grid_csv(*fb);
    j["l1_error"] = l1_grid_error(ga, gb);
  } else {
    auto fa = open(a), fb = open(b);
    const auto sa = read_samples_csv(*fa), sb = read_samples_csv(*fb);
    require(!sa.empty() && !sb.empty(), "metrics: empty sample file");
    const int dim = static_cast<int>(sa.front().size());
    require(static_cast<int>(sb.front().size()) == dim, "metrics: sample dimensions differ");
    if (dim == 1) {
      j["w2"] = w2_1d_exact(sa, sb);
      j["method"] = "exact-1d";
    } else {
      RandomSource rng(o.seed.value_or(1), 0x511CE);
      j["w2"] = w2_sliced(sa, sb, n_proj, rng);
      j["method"] = "sliced";
      j["projections"] = n_proj;
      j["seed"] = o.seed.value_or(1);
    }
    for (const auto& [name, s] : {std::pair{"a", &sa}, std::pair{"b", &sb}}) {
      if (s->size() < 2) continue;
      const auto m = moment_report(*s);
      j[name] = {{"n", m.n}, {"mean", to_std(m.mean)}, {"variance", to_std(m.covariance.diagonal())}};
    }
  }
  emit(j, o);
  return 0;
}

int cmd_repro(const Options& o, const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = load_config(o, default_experiment_config(name));
  if (o.seed) c.set("run", "seed", std::to_string(*o.seed));
  const ResolvedRun r = resolve(c, true, o.threads);
  warn(r);
  const ExperimentResult e = run_experiment(name, r.cfg, o.threads);
  OutputDir out(o.out_dir.empty() ? r.cfg.text("run", "out_dir") + "/" + name : o.out_dir);
  for (const auto& [fname, content] : e.files) out.write(fname, content);
  out.write("metrics.json", json_text(e.metrics));
  write_manifest(out, r, "repro " + name, seconds_since(t0), Json{{"experiment", name}});
  emit(e.metrics, o);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive SGLD inverse reinforcement learning"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "experiment configuration file");
  app.add_option("--seed", o.seed, "master seed (overrides [run] seed)");
  app.add_option("--out-dir", o.out_dir, "output directory (overrides [run] out_dir)");
  app.add_option("--threads", o.threads, "worker threads (default: [run] threads, then PSGLD_IRL_THREADS, then 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}));

  auto* fwd = app.add_subcommand("run-forward", "simulate one forward learner and write its event CSV");
  std::uint64_t stream = 0;
  fwd->add_option("--stream", stream, "forward stream index");

  auto* ps = app.add_subcommand("run-psgld", "run one PSGLD stream against recorded or simulated events");
  std::string events;
  bool trace = false;
  ps->add_option("--events", events, "event CSV to replay (default: simulate the configured learner)");
  ps->add_option("--stream", stream, "stream index");
  ps->add_flag("--trace", trace, "write the per-step trace");

  auto* rec = app.add_subcommand("reconstruct", "sample T streams, estimate the density and the cost");

  auto* sch = app.add_subcommand("schedule", "print the δ-driven parameter schedule");
  std::optional<double> delta;
  sch->add_option("--delta", delta, "target accuracy δ (overrides [psgld] delta)");

  auto* bnd = app.add_subcommand("bounds", "print constants and bound evaluations");

  auto* met = app.add_subcommand("metrics", "compare two sample clouds or two grids");
  std::string fa, fb, kind = "samples";
  int n_proj = 64;
  met->add_option("--a", fa, "first file")->required();
  met->add_option("--b", fb, "second file")->required();
  met->add_option("--kind", kind, "file kind")->check(CLI::IsMember({"samples", "grid"}));
  met->add_option("--projections", n_proj, "sliced-W2 projections (N > 1)")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("repro", "run a named reproduction experiment");
  std::string name;
  rep->add_option("name", name, "experiment name")->required()->check(CLI::IsMember(experiment_names()));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*fwd) return cmd_run_forward(o, stream);
    if (*ps) return cmd_run_psgld(o, events, stream, trace);
    if (*rec) return cmd_reconstruct(o);
    if (*sch) return cmd_schedule(o, delta);
    if (*bnd) return cmd_bounds(o);
    if (*met) return cmd_metrics(o, fa, fb, kind, n_proj);
    if (*rep) return cmd_repro(o, name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
