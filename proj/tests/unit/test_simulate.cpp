#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pathind/simulate.hpp"

using namespace pathind;

TEST(TimeGrid, Validation) {
  EXPECT_THROW((TimeGrid{0.0, 4}).validate(), ValidationError);
  EXPECT_THROW((TimeGrid{1.0, 0}).validate(), ValidationError);
  const TimeGrid g{2.0, 8};
  EXPECT_NO_THROW(g.validate());
  EXPECT_DOUBLE_EQ(g.dt(), 0.25);
  EXPECT_DOUBLE_EQ(g.time(8), 2.0);
}

TEST(Increments, CoarseAreSumsOfFine) {
  const TimeGrid fine{1.0, 16}, coarse{1.0, 4};
  const auto f = brownian_increments(2, fine, 11, 3, 16);
  const auto c = brownian_increments(2, coarse, 11, 3, 16);
  ASSERT_EQ(c.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    Vec sum = f[4 * k] + f[4 * k + 1] + f[4 * k + 2] + f[4 * k + 3];
    EXPECT_LT((sum - c[k]).norm(), 1e-15);
  }
  EXPECT_THROW(brownian_increments(2, coarse, 11, 3, 10), ValidationError);
  EXPECT_THROW(coarsen_increments(f, 5), ValidationError);
}

TEST(Increments, VarianceMatchesTime) {
  const TimeGrid g{2.0, 8};
  const int n = 4000;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto dw = brownian_increments(1, g, 1, i, 8);
    double w = 0.0;
    for (const auto& d : dw) w += d[0];
    s2 += w * w;
  }
  // Var W_T = T; sd of the estimator is T sqrt(2/n)
  EXPECT_NEAR(s2 / n, 2.0, 5.0 * 2.0 * std::sqrt(2.0 / n));
}

TEST(Diffusion, HeatKernelEndpoint) {
  const ModelSpec m = builtin("heat_kernel", {{"a", {1.0, -0.5}}});
  const TimeGrid g{1.5, 12};
  Vec x0(2);
  x0 << 0.2, 0.3;
  const PathBundle p = simulate_diffusion(m, x0, g, 5, 9);
  ASSERT_EQ(p.states.size(), 13u);
  ASSERT_EQ(p.bm_increments.size(), 12u);
  Vec w = Vec::Zero(2);
  for (const auto& d : p.bm_increments) w += d;
  Vec a(2);
  a << 1.0, -0.5;
  EXPECT_LT((p.final_state() - (x0 + 1.5 * a + w)).norm(), 1e-13);
  EXPECT_TRUE(p.jumps.empty());
}

TEST(Diffusion, DeterministicAndDimensionChecked) {
  const ModelSpec m = builtin("gruschin");
  const TimeGrid g{1.0, 32};
  const auto a = simulate_diffusion(m, m.default_x0, g, 3, 4);
  const auto b = simulate_diffusion(m, m.default_x0, g, 3, 4);
  for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_EQ(a.states[k], b.states[k]);
  Vec bad(3);
  bad.setZero();
  EXPECT_THROW(simulate_diffusion(m, bad, g, 3, 4), ConfigError);
}

TEST(Diffusion, OverflowIsNumericError) {
  const ModelSpec m = builtin("heat_kernel", {{"a", {1e308, 0.0}}});
  EXPECT_THROW(simulate_diffusion(m, m.default_x0, TimeGrid{10.0, 1}, 0, 0), NumericError);
}

TEST(Jumps, CandidateCountIsPoisson) {
  const ModelSpec m = builtin("pure_jump", {{"marks", {-1.0, -0.5}}, {"weights", {0.5, 1.5}}});
  const double T = 3.0, mass = 2.0;
  const int n = 4000;
  double count = 0.0, atom1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto c = draw_jump_candidates(*m.jump, T, 8, i);
    double prev = 0.0;
    for (const auto& e : c) {
      ASSERT_GT(e.time, prev);
      ASSERT_LE(e.time, T);
      ASSERT_GE(e.acceptance_draw, 0.0);
      ASSERT_LT(e.acceptance_draw, 1.0);
      prev = e.time;
      atom1 += e.atom_index == 1;
    }
    count += static_cast<double>(c.size());
  }
  const double mean = mass * T;
  EXPECT_NEAR(count / n, mean, 5.0 * std::sqrt(mean / n));
  // atom 1 carries 3/4 of the mass
  EXPECT_NEAR(atom1 / count, 0.75, 5.0 * std::sqrt(0.75 * 0.25 / count));
}

TEST(Jumps, PureJumpEndpoint) {
  const ModelSpec m = builtin("pure_jump");
  const double T = 2.0;
  for (int path = 0; path < 50; ++path) {
    const PathBundle p = simulate_jump_diffusion(m, m.default_x0, TimeGrid{T, 7}, 1, path);
    double jumps = 0.0;
    for (const auto& e : p.jumps) {
      EXPECT_EQ(e.pre_state.size(), 1);
      if (e.accepted) jumps += -1.0;
    }
    // compensator drift: -T * u * lambda * nu = T e^{-1}
    EXPECT_NEAR(p.final_state()[0], jumps + T * std::exp(-1.0), 1e-13);
  }
}

TEST(Jumps, ThinningAndOrderingWithinStep) {
  const ModelSpec m = builtin("pure_jump");
  const double lambda = std::exp(-1.0);
  const TimeGrid g{1.0, 2};
  std::vector<Vec> dw(2, Vec::Zero(1));
  const std::vector<JumpCandidate> c = {
      {0.1, 0, 0.0}, {0.2, 0, lambda + 1e-9}, {0.3, 0, lambda / 2}, {0.9, 0, 0.5}};
  const PathBundle p = simulate_with_noise(m, m.default_x0, g, dw, c, {0, 0});
  ASSERT_EQ(p.jumps.size(), 4u);
  EXPECT_TRUE(p.jumps[0].accepted);
  EXPECT_FALSE(p.jumps[1].accepted);
  EXPECT_TRUE(p.jumps[2].accepted);
  EXPECT_FALSE(p.jumps[3].accepted);
  EXPECT_EQ(p.jumps[0].step_index, 0);
  EXPECT_EQ(p.jumps[3].step_index, 1);
  // jumps of a step act on X_k plus earlier jumps of that step
  EXPECT_EQ(p.jumps[0].pre_state[0], 0.0);
  EXPECT_EQ(p.jumps[1].pre_state[0], -1.0);
  EXPECT_EQ(p.jumps[2].pre_state[0], -1.0);
  const double comp = 0.5 * lambda;
  EXPECT_NEAR(p.states[1][0], -2.0 + comp, 1e-15);
  EXPECT_NEAR(p.jumps[3].pre_state[0], -2.0 + comp, 1e-15);
  EXPECT_NEAR(p.states[2][0], -2.0 + 2 * comp, 1e-15);
  EXPECT_EQ(p.accepted_jumps(), 2);
}

TEST(Jumps, RequiresJumpSpec) {
  const ModelSpec m = builtin("heat_kernel");
  EXPECT_THROW(simulate_jump_diffusion(m, m.default_x0, TimeGrid{1.0, 4}, 0, 0), ConfigError);
}

TEST(Export, TraceAndJumpCsv) {
  const ModelSpec m = builtin("manufactured_jump");
  const PathBundle p = simulate_jump_diffusion(m, m.default_x0, TimeGrid{1.0, 4}, 2, 0);
  std::ostringstream t, j;
  write_trace_csv(t, p);
  write_jump_csv(j, p);
  EXPECT_EQ(t.str().rfind("t,X_1\n0,0\n", 0), 0u);
  EXPECT_EQ(j.str().rfind("time,atom_index,accepted,pre_1\n", 0), 0u);
  std::size_t lines = 0;
  for (char ch : t.str()) lines += ch == '\n';
  EXPECT_EQ(lines, 6u);
}
