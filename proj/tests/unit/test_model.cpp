#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pathind/model.hpp"

using namespace pathind;

namespace {

Vec v3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

}  // namespace

TEST(Catalog, EightModelsInOrder) {
  const std::vector<std::string> expected = {
      "gruschin",       "kohn",            "kohn_corrected",    "degenerate_exp",
      "heat_kernel",    "two_exponential", "manufactured_jump", "pure_jump"};
  EXPECT_EQ(builtin_names(), expected);
  for (const auto& n : expected) {
    const ModelSpec m = builtin(n);
    EXPECT_EQ(m.name, n);
    EXPECT_FALSE(builtin_description(n).empty());
    EXPECT_EQ(m.default_x0.size(), m.d);
    EXPECT_NO_THROW(m.check_at(0.5, m.default_x0));
  }
}

TEST(Catalog, RejectsUnknownNamesAndParams) {
  EXPECT_THROW(builtin("heisenberg"), NotFoundError);
  EXPECT_THROW(builtin("gruschin", {{"kk", {1.0}}}), ValidationError);
  EXPECT_THROW(builtin("gruschin", {{"k", {0.0}}}), ValidationError);
  EXPECT_THROW(builtin("gruschin", {{"k", {1.5}}}), ValidationError);
  EXPECT_THROW(builtin("heat_kernel", {{"x0", {1.0, 2.0, 3.0}}}), ValidationError);
}

TEST(Catalog, X0Override) {
  const ModelSpec m = builtin("gruschin", {{"x0", {0.5, -2.0}}});
  EXPECT_EQ(m.default_x0, v2(0.5, -2.0));
}

TEST(Kohn, PrintedDriftLeavesImage) {
  const ModelSpec m = builtin("kohn");
  EXPECT_FALSE(m.drift_in_image);
  const Vec r = drift_image_residual(m, 1.0, v3(1.0, 2.0, 3.0));
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 0.0);
  EXPECT_EQ(r[2], -1.5);
}

TEST(Kohn, ThirdComponentFormula) {
  const ModelSpec m = builtin("kohn");
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double t = std::abs(U(gen)), x = U(gen), y = U(gen), z = U(gen);
    const Vec r = drift_image_residual(m, t, v3(x, y, z));
    const double expected = z * (x - y) * t / 2.0;
    EXPECT_NEAR(r[2], expected, 1e-14 * (1.0 + std::abs(expected)));
    EXPECT_NEAR(r[0], 0.0, 1e-15);
    EXPECT_NEAR(r[1], 0.0, 1e-15);
  }
}

TEST(Kohn, CorrectedDriftInImage) {
  const ModelSpec m = builtin("kohn_corrected");
  EXPECT_TRUE(m.drift_in_image);
  for (double x : {-1.0, 0.0, 2.0}) {
    for (double y : {-2.0, 0.5, 1.0}) {
      const Vec r = drift_image_residual(m, 0.7, v3(x, y, 1.5));
      EXPECT_EQ(r.cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(Gruschin, DriftEqualsSigmaGamma) {
  for (int k : {1, 2, 3}) {
    const ModelSpec m = builtin("gruschin", {{"k", {double(k)}}});
    const Vec r = drift_image_residual(m, 0.8, v2(1.3, -0.4));
    EXPECT_LT(r.norm(), 1e-15);
    const Mat s = m.diffusion(0.8, v2(1.3, -0.4));
    EXPECT_NEAR(s(1, 1), std::pow(1.3, k), 1e-14);
  }
}

TEST(DegenerateExp, GammaForcedOnUpperHalfPlane) {
  const ModelSpec m = builtin("degenerate_exp");
  const Vec g = m.gamma(0.0, v2(0.3, 2.0));
  EXPECT_EQ(g, v2(0.0, 0.5));
  EXPECT_EQ(m.gamma(0.0, v2(0.3, -1.0)), v2(0.0, 0.0));
  EXPECT_LT(drift_image_residual(m, 0.0, v2(0.3, 2.0)).norm(), 1e-15);
}

TEST(JumpModels, ManufacturedConstants) {
  const ModelSpec m = builtin("manufactured_jump");
  ASSERT_TRUE(m.has_jumps());
  EXPECT_EQ(m.jump->atoms.size(), 1u);
  EXPECT_EQ(m.jump->atoms[0].mark[0], -1.0);
  EXPECT_EQ(m.jump->total_mass(), 1.0);
  Vec u(1);
  u << -1.0;
  EXPECT_NEAR(m.jump->lambda(0.3, u), std::exp(-1.0), 1e-16);
  // c = beta^2/2 + (e^{-1} - 1 + e^{-1}) = 2/e - 1/2
  const double c = 2.0 * std::exp(-1.0) - 0.5;
  Vec x(1);
  x << 0.0;
  EXPECT_NEAR(m.reference->value(1.0, x), -c, 1e-15);
  EXPECT_EQ(m.drift(0.0, x)[0], 1.0);
  EXPECT_EQ(m.gamma(0.0, x)[0], 1.0);
}

TEST(JumpModels, PureJumpConstants) {
  const ModelSpec m = builtin("pure_jump");
  Vec x(1);
  x << 0.0;
  EXPECT_EQ(m.diffusion(0.0, x)(0, 0), 0.0);
  EXPECT_EQ(m.drift(0.0, x)[0], 0.0);
  const double c = 2.0 * std::exp(-1.0) - 1.0;
  EXPECT_NEAR(m.reference->value(1.0, x), -c, 1e-15);
}

TEST(JumpModels, LambdaMustLieInUnitInterval) {
  EXPECT_THROW(builtin("manufactured_jump", {{"lambda_scale", {3.0}}}), ValidationError);
  EXPECT_THROW(builtin("manufactured_jump", {{"lambda_scale", {0.0}}}), ValidationError);
  EXPECT_THROW(builtin("pure_jump", {{"marks", {-1.0, -2.0}}, {"weights", {1.0}}}),
               ValidationError);
  EXPECT_NO_THROW(builtin("manufactured_jump", {{"lambda_scale", {0.9}}}));
}

TEST(Hypotheses, KappaDefault) {
  EXPECT_EQ(default_kappa(2.0), 1.0);
  EXPECT_EQ(default_kappa(0.5), 1.0);
  EXPECT_NEAR(default_kappa(1e-3), std::log(1e3), 1e-12);
}

TEST(Hypotheses, HeatKernelConstants) {
  const ModelSpec m = builtin("heat_kernel");
  std::vector<ProbePoint> probes;
  for (double r : {0.1, 0.01}) probes.push_back({0.2, v2(0.0, 0.0), v2(r, 0.0)});
  probes.push_back({0.2, v2(1.0, 1.0), v2(1.0, 1.0)});
  const auto rep = hypothesis_probe(m, probes);
  // constant coefficients: monotonicity quotient is exactly 0
  EXPECT_EQ(rep.lambda0_est, 0.0);
  // (|a|^2 + |Id|_F^2) / (1 + |x|)^2 is largest at x = 0: 1 + 2
  EXPECT_NEAR(rep.lambda1_est, 3.0, 1e-12);
  EXPECT_EQ(rep.skipped_pairs, 1u);
  EXPECT_EQ(rep.h1, Verdict::pass);
  EXPECT_EQ(rep.h2, Verdict::pass);
  EXPECT_EQ(rep.hf, Verdict::inconclusive);
}

TEST(Hypotheses, GruschinGrowthIsFiniteOnBoundedSet) {
  const ModelSpec m = builtin("gruschin");
  std::vector<ProbePoint> probes;
  for (double x = -2; x <= 2; x += 0.5) {
    probes.push_back({1.0, v2(x, 1.0), v2(x + 0.01, 1.0)});
  }
  const auto rep = hypothesis_probe(m, probes);
  EXPECT_TRUE(std::isfinite(rep.lambda0_est));
  EXPECT_TRUE(std::isfinite(rep.lambda1_est));
  EXPECT_EQ(rep.h2, Verdict::pass);
}

TEST(Hypotheses, JumpModelChecksHf) {
  const ModelSpec m = builtin("manufactured_jump");
  Vec x(1), y(1);
  x << 0.0;
  y << 0.1;
  const std::vector<ProbePoint> probes{{0.5, x, y}};
  const auto rep = hypothesis_probe(m, probes);
  EXPECT_EQ(rep.hf_lipschitz, 0.0);
  EXPECT_NEAR(rep.hf_q2, 1.0, 1e-15);
  EXPECT_EQ(rep.hf, Verdict::pass);
}

TEST(Hypotheses, ExcessiveConstantFails) {
  const ModelSpec m = builtin("heat_kernel", {{"a", {1e4, 0.0}}});
  const std::vector<ProbePoint> probes{{0.0, v2(0, 0), v2(0.1, 0)}};
  const auto rep = hypothesis_probe(m, probes, {default_kappa, 1e6});
  EXPECT_EQ(rep.h2, Verdict::fail);
}
