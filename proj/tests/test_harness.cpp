#include "psgld/harness/experiments.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace psgld;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

// Small variant of the Gibbs setup that finishes in well under a second.
ExperimentConfig small_quadratic() {
  ExperimentConfig c = ExperimentConfig::parse(kQuadraticGibbsConfig);
  c.set("reconstruct", "T", "60");
  c.set("psgld", "k_hat", "150");
  return c;
}

}  // namespace

TEST(Config, DefaultsSerializeAndRoundTrip) {
  const ExperimentConfig d;
  EXPECT_EQ(d.integer("run", "seed"), 1);
  EXPECT_EQ(d.real("sampling", "sigma2"), 0.25);
  EXPECT_FALSE(d.real_or_auto("constants", "L_J").has_value());
  const ExperimentConfig back = ExperimentConfig::parse(d.serialize());
  EXPECT_EQ(back, d);
  EXPECT_EQ(back.serialize(), d.serialize());
}

TEST(Config, CanonicalValuesAreShortestRoundTrip) {
  ExperimentConfig c;
  c.set("forward", "eta", "0.1000");
  c.set("psgld", "epsilon", "1e-2");
  EXPECT_TRUE(contains(c.serialize(), "eta = 0.1\n"));
  EXPECT_TRUE(contains(c.serialize(), "epsilon = 0.01\n"));
  EXPECT_EQ(ExperimentConfig::parse(c.serialize()).real("forward", "eta"), 0.1);
}

TEST(Config, ParsesCommentsAndSections) {
  const auto c = ExperimentConfig::parse("# top\n[cost]\n; line comment\nname = double_well\n\n[psgld]\nbeta = 3\n");
  EXPECT_EQ(c.text("cost", "name"), "double_well");
  EXPECT_EQ(c.real("psgld", "beta"), 3.0);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_TRUE(contains(message_of([] { ExperimentConfig::parse("[psgld]\nbogus = 1\n"); }), "unknown key 'bogus'"));
  EXPECT_TRUE(contains(message_of([] { ExperimentConfig::parse("[nowhere]\nseed = 1\n"); }), "unknown key"));
  EXPECT_THROW(ExperimentConfig::parse("seed = 1\n"), Error);
  EXPECT_THROW(ExperimentConfig::parse("[psgld]\nbeta = two\n"), Error);
  EXPECT_THROW(ExperimentConfig::parse("[cost]\nname = cubic\n"), Error);
  EXPECT_THROW(ExperimentConfig::parse("[run]\nseed = 1.5\n"), Error);
}

TEST(Config, LoadMissingFile) {
  EXPECT_TRUE(contains(message_of([] { ExperimentConfig::load("/nonexistent/psgld.ini"); }), "cannot open"));
}

TEST(Resolve, StepSizeViolationNamesTheRange) {
  ExperimentConfig c = ExperimentConfig::parse(kQuadraticGibbsConfig);
  c.set("forward", "eta", "0.9");
  const std::string msg = message_of([&] { resolve(c, true); });
  EXPECT_TRUE(contains(msg, "η ∈ (0, 1 ∧ m/(4L_∇J²))")) << msg;
}

TEST(Resolve, DeltaOutsideRangeIsReported) {
  ExperimentConfig c;
  c.set("psgld", "schedule", "delta");
  c.set("psgld", "delta", "0.999");
  const std::string msg = message_of([&] { resolve(c, false); });
  EXPECT_TRUE(contains(msg, "exp(-1/(beta c_LS))")) << msg;
}

TEST(Resolve, DeltaScheduleMatchesClosedForm) {
  ExperimentConfig c;
  c.set("psgld", "schedule", "delta");
  c.set("psgld", "delta", "0.1");
  const ResolvedRun r = resolve(c, false);
  ASSERT_TRUE(r.schedule.has_value());
  EXPECT_NEAR(r.schedule->epsilon, std::pow(0.1 / std::log(10.0), 2), 1e-15);
  const Json j = schedule_json(*r.schedule);
  EXPECT_EQ(j["epsilon"].get<double>(), r.schedule->epsilon);
  EXPECT_FALSE(j["kernel_delta_feasible"].get<bool>());
  // An infeasible Δ is fatal only when the run is actually executed.
  EXPECT_THROW(resolve(c, true), Error);
}

TEST(Resolve, ReinforceRequiresMdp) {
  ExperimentConfig c;
  c.set("forward", "kind", "reinforce");
  EXPECT_THROW(resolve(c, false), Error);
  EXPECT_NO_THROW(resolve(ExperimentConfig::parse(kReinforceConfig), true));
}

TEST(Resolve, ThreadPrecedence) {
  ExperimentConfig c;
  ::setenv("PSGLD_IRL_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(c), 3);
  c.set("run", "threads", "2");
  EXPECT_EQ(resolve_threads(c), 2);
  EXPECT_EQ(resolve_threads(c, 5), 5);
  ::setenv("PSGLD_IRL_THREADS", "zero", 1);
  EXPECT_THROW(resolve_threads(ExperimentConfig{}), Error);
  ::unsetenv("PSGLD_IRL_THREADS");
  EXPECT_EQ(resolve_threads(ExperimentConfig{}), 1);
  EXPECT_THROW(resolve_threads(c, 0), Error);
}

TEST(Resolve, ConstantOverridesApply) {
  ExperimentConfig c;
  c.set("constants", "L_gradJ", "2");
  // The step-size range shrinks with L_∇J, so the default η is rejected.
  EXPECT_THROW(resolve(c, false), Error);
  c.set("forward", "eta", "0.05");
  EXPECT_EQ(resolve(c, false).cost().constants.L_gradJ, 2.0);
}

TEST(Output, ManifestRecordsInventoryAndConfig) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("psgld_harness_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const ResolvedRun r = resolve(small_quadratic(), true);
  {
    OutputDir out(dir.string());
    out.write("a.csv", "x_0\n1\n");
    write_manifest(out, r, "unit", 0.5);
  }
  std::ifstream f(dir / "manifest.json");
  const Json m = Json::parse(f);
  EXPECT_EQ(m["command"], "unit");
  EXPECT_EQ(m["files"].size(), 1u);
  EXPECT_EQ(m["files"][0]["name"], "a.csv");
  EXPECT_EQ(m["files"][0]["bytes"], 6u);
  EXPECT_EQ(ExperimentConfig::parse(m["config"].get<std::string>()), r.cfg);
  EXPECT_EQ(m["resolved"]["T"], 60);
  fs::remove_all(dir);
}

TEST(Repro, IdenticalOutputsAcrossThreadCounts) {
  const auto a = run_experiment("quadratic-gibbs", small_quadratic(), 1);
  const auto b = run_experiment("quadratic-gibbs", small_quadratic(), 3);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i].first, b.files[i].first);
    EXPECT_EQ(a.files[i].second, b.files[i].second) << a.files[i].first;
  }
  EXPECT_EQ(json_text(a.metrics), json_text(b.metrics));
}

TEST(Repro, SeedChangesOutput) {
  ExperimentConfig c = small_quadratic();
  const auto a = run_experiment("quadratic-gibbs", c, 1);
  c.set("run", "seed", "2");
  const auto b = run_experiment("quadratic-gibbs", c, 1);
  EXPECT_NE(a.files[0].second, b.files[0].second);
}

TEST(Repro, UnknownExperiment) {
  EXPECT_THROW(default_experiment_config("nope"), Error);
  EXPECT_THROW(run_experiment("nope", ExperimentConfig{}), Error);
}

TEST(Serialization, GridCsvRoundTrip) {
  const Box box{make_vector({-1.0}), make_vector({1.0})};
  const GridFunction f = evaluate_on_grid(box.grid(11), [](const ParamVector& p) { return p[0] * p[0]; });
  std::ostringstream os;
  write_grid_csv(os, f, "cost");
  std::istringstream is(os.str());
  const GridFunction g = read_grid_csv(is);
  ASSERT_EQ(g.values.size(), f.values.size());
  for (std::size_t i = 0; i < g.values.size(); ++i) EXPECT_EQ(g.values[i], f.values[i]);
}
