#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pathind/verify.hpp"

using namespace pathind;

TEST(Summary, LinearInterpolationQuantiles) {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0, 5.0};
  const SummaryStats s = summarize(v);
  EXPECT_EQ(s.count, 5u);
  EXPECT_EQ(s.max, 5.0);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.median, 3.0);
  EXPECT_DOUBLE_EQ(s.q25, 2.0);
  EXPECT_DOUBLE_EQ(s.q05, 1.2);
  EXPECT_DOUBLE_EQ(s.q95, 4.8);
  const std::vector<double> even{1.0, 2.0, 3.0, 10.0};
  EXPECT_DOUBLE_EQ(summarize(even).median, 2.5);
  EXPECT_EQ(summarize({}).count, 0u);
}

TEST(Config, Validation) {
  ExperimentConfig c = experiment_for("heat_kernel");
  c.n_paths = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c.n_paths = 1;
  c.x0 = Vec::Zero(3);
  EXPECT_THROW(c.validate(), ConfigError);
  c.x0 = Vec::Zero(2);
  c.grid.steps = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Identity, HeatKernelExact) {
  ExperimentConfig c = experiment_for("heat_kernel");
  c.grid = {1.0, 16};
  c.n_paths = 100;
  c.max_error_tol = 1e-10;
  const ExperimentResult r = identity_experiment(c);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.errors.max, 1e-10);
  EXPECT_EQ(r.records.size(), 100u);
  EXPECT_GE(r.errors.max, r.errors.median);
  EXPECT_GE(r.errors.median, 0.0);
}

TEST(Identity, PureJumpExactAtAnyStepCount) {
  for (int n : {1, 3, 50}) {
    ExperimentConfig c = experiment_for("pure_jump");
    c.grid = {1.5, n};
    c.n_paths = 200;
    c.seed = 21;
    const ExperimentResult r = identity_experiment(c);
    EXPECT_LE(r.errors.max, 1e-10) << "n = " << n;
    int jumps = 0;
    for (const auto& p : r.records) jumps += p.jump_count;
    EXPECT_GT(jumps, 0);
  }
}

TEST(Identity, ExponentAgreesWithEndpointFormula) {
  // pure jump: Y_T = beta sum u_j + T int (1 - e^{beta u}) nu(du)
  ExperimentConfig c = experiment_for("pure_jump");
  c.grid = {2.0, 5};
  c.n_paths = 50;
  const ExperimentResult r = identity_experiment(c);
  for (const auto& p : r.records) {
    const double expected = -1.0 * p.jump_count + 2.0 * (1.0 - std::exp(-1.0));
    EXPECT_NEAR(p.Y_T, expected, 1e-12);
  }
}

TEST(Identity, TransformedField) {
  // v = heat_exp with F = log gives F(v) = heat_linear
  ExperimentConfig c = experiment_for("heat_kernel");
  c.field = builtin_field("heat_exp");
  c.transform = FTransform::log();
  c.grid = {1.0, 8};
  c.n_paths = 50;
  c.max_error_tol = 1e-10;
  EXPECT_TRUE(identity_experiment(c).pass);
}

TEST(Identity, DomainViolationsAreExcludedAndCounted) {
  // coarse Euler steps drive exp(B2) below zero where log(y) is undefined
  ExperimentConfig c = experiment_for("degenerate_exp");
  c.grid = {4.0, 1};
  c.n_paths = 400;
  const ExperimentResult r = identity_experiment(c);
  EXPECT_GT(r.excluded, 4u);
  EXPECT_FALSE(r.exclusion_ok);
  EXPECT_FALSE(r.pass);
  std::size_t flagged = 0;
  for (const auto& p : r.records) {
    if (p.excluded) {
      ++flagged;
      EXPECT_FALSE(p.reason.empty());
    }
  }
  EXPECT_EQ(flagged, r.excluded);
  EXPECT_EQ(r.errors.count + r.excluded, 400u);
}

TEST(Identity, MissingFieldIsConfigError) {
  ExperimentConfig c = experiment_for("kohn");
  EXPECT_THROW(identity_experiment(c), ConfigError);
}

TEST(Identity, WorkersDoNotChangeResults) {
  ExperimentConfig c = experiment_for("manufactured_jump");
  c.grid = {1.0, 64};
  c.n_paths = 60;
  c.seed = 99;
  const ExperimentResult a = identity_experiment(c);
  c.workers = 4;
  const ExperimentResult b = identity_experiment(c);
  std::ostringstream sa, sb;
  write_paths_csv(sa, a.records);
  write_paths_csv(sb, b.records);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Martingale, ZeroKernelIsTrivial) {
  ExperimentConfig c = experiment_for("heat_kernel", {{"a", {0.0, 0.0}}});
  c.grid = {1.0, 4};
  c.n_paths = 20;
  const ExperimentResult r = martingale_experiment(c);
  EXPECT_EQ(r.mean_Z, 1.0);
  EXPECT_EQ(r.stderr_Z, 0.0);
  EXPECT_TRUE(r.pass);
  ASSERT_TRUE(r.moment.has_value());
  EXPECT_TRUE(r.moment->finite);
}

TEST(Martingale, HeatKernelMeanOne) {
  ExperimentConfig c = experiment_for("heat_kernel");
  c.grid = {1.0, 4};
  c.n_paths = 4000;
  const ExperimentResult r = martingale_experiment(c);
  EXPECT_LE(std::abs(r.mean_Z - 1.0), 3.0 * r.stderr_Z);
  // Z_T = exp(-1/2 - W) has variance e - 1
  EXPECT_NEAR(r.stderr_Z * std::sqrt(4000.0), std::sqrt(std::exp(1.0) - 1.0), 0.25);
}

TEST(Convergence, LevelValidation) {
  ExperimentConfig c = experiment_for("heat_kernel");
  c.n_paths = 2;
  EXPECT_THROW(convergence_study(c, std::vector<int>{16}), ValidationError);
  EXPECT_THROW(convergence_study(c, std::vector<int>{16, 16}), ValidationError);
  EXPECT_THROW(convergence_study(c, std::vector<int>{32, 16}), ValidationError);
  EXPECT_THROW(convergence_study(c, std::vector<int>{16, 24}), ValidationError);
}

TEST(Convergence, HeatKernelIsExact) {
  ExperimentConfig c = experiment_for("heat_kernel");
  c.n_paths = 50;
  const ConvergenceTable t = convergence_study(c, std::vector<int>{4, 16, 64});
  EXPECT_TRUE(t.exact);
  EXPECT_TRUE(std::isnan(t.slope));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(t.rows[1].dt, 1.0 / 16);
}

TEST(Convergence, FinestLevelMatchesDirectExperiment) {
  ExperimentConfig c = experiment_for("two_exponential");
  c.n_paths = 20;
  c.seed = 5;
  const ConvergenceTable t = convergence_study(c, std::vector<int>{8, 32});
  c.grid = {1.0, 32};
  const ExperimentResult r = identity_experiment(c);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_EQ(t.records.back()[i].error, r.records[i].error);
  }
}

TEST(Convergence, TwoExponentialDecreases) {
  ExperimentConfig c = experiment_for("two_exponential");
  c.n_paths = 200;
  const ConvergenceTable t = convergence_study(c, std::vector<int>{16, 64, 256});
  EXPECT_FALSE(t.exact);
  EXPECT_LT(t.rows[2].median, t.rows[0].median);
  EXPECT_GT(t.slope, 0.2);
}

TEST(Negative, GruschinPlateausAndControlConverges) {
  ExperimentConfig g = experiment_for("gruschin");
  g.n_paths = 50;
  const NegativeResult n = negative_experiment(g, std::vector<int>{64, 256});
  EXPECT_TRUE(n.non_convergent);
  EXPECT_GT(n.finest, 10 * n.baseline);

  ExperimentConfig h = experiment_for("heat_kernel");
  h.n_paths = 50;
  EXPECT_FALSE(negative_experiment(h, std::vector<int>{64, 256}).non_convergent);
}

TEST(Negative, PerturbedLambdaStaysWrong) {
  ExperimentConfig c = experiment_for("manufactured_jump", {{"lambda_scale", {0.9}}});
  c.n_paths = 50;
  const NegativeResult n = negative_experiment(c, std::vector<int>{16, 64});
  EXPECT_TRUE(n.non_convergent);
}

TEST(Export, CsvAndJson) {
  ExperimentConfig c = experiment_for("heat_kernel");
  c.grid = {1.0, 4};
  c.n_paths = 3;
  c.config_hash = "abc";
  const ExperimentResult r = identity_experiment(c);
  std::ostringstream os;
  write_paths_csv(os, r.records);
  EXPECT_EQ(os.str().rfind("path_index,e_i,Z_T,jump_count,excluded,reason\n0,", 0), 0u);
  const auto j = to_json(r);
  EXPECT_EQ(j["config_hash"], "abc");
  EXPECT_EQ(j["paths"], 3);
  const ConvergenceTable t = convergence_study(c, std::vector<int>{2, 4});
  std::ostringstream cs;
  write_convergence_csv(cs, t);
  EXPECT_EQ(cs.str().rfind("steps,dt,median_error,max_error,mean_error,excluded,slope\n2,0.5,", 0), 0u);
  EXPECT_TRUE(to_json(t)["slope"].is_null());
}
