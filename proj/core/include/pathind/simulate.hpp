// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pathind/model.hpp"
#include "pathind/rng.hpp"
#include "pathind/types.hpp"

namespace pathind {

/// Uniform grid on [0, T] with t_k = k * (T / n).
struct TimeGrid {
  double t_final = 1.0;
  int steps = 1;

  double dt() const { return t_final / steps; }
  double time(int k) const { return k * dt(); }
  /// Throws ValidationError unless T > 0 and n >= 1.
  void validate() const;
};

struct JumpEvent {
  double time = 0.0;
  /// k with t_k < time <= t_{k+1}.
  int step_index = 0;
  int atom_index = 0;
  Vec pre_state;
  bool accepted = false;
};

struct SeedInfo {
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};

struct PathBundle {
  TimeGrid grid;
  std::vector<Vec> states;        // n + 1 entries, states[0] = x0
  std::vector<Vec> bm_increments; // n entries in R^m
  std::vector<JumpEvent> jumps;   // accepted and rejected candidates
  SeedInfo seed_info;

  int accepted_jumps() const;
  const Vec& final_state() const { return states.back(); }
};

/// A candidate of the dominating Poisson process on [0, T]: exact time,
/// atom drawn proportionally to nu_i, and the uniform used for thinning.
struct JumpCandidate {
  double time = 0.0;
  int atom_index = 0;
  double acceptance_draw = 0.0;
};

/// Brownian increments on `grid` built from `fine_steps` draws per path
/// (fine_steps must be a multiple of grid.steps). Coarse increments are
/// sums of consecutive fine increments, so grids sharing a seed and a fine
/// resolution see the same Brownian path.
std::vector<Vec> brownian_increments(int m, const TimeGrid& grid,
                                     std::uint64_t seed,
                                     std::uint64_t path_index, int fine_steps);

/// Aggregates fine increments onto a coarser grid with `steps` steps.
std::vector<Vec> coarsen_increments(const std::vector<Vec>& fine, int steps);

/// Candidate jump times on [0, T]; independent of the grid.
std::vector<JumpCandidate> draw_jump_candidates(const JumpSpec& jump,
                                                double t_final,
                                                std::uint64_t seed,
                                                std::uint64_t path_index);

/// Euler-Maruyama for dX = b dt + sigma dW.
PathBundle simulate_diffusion(const ModelSpec& model, const Vec& x0,
                              const TimeGrid& grid, std::uint64_t seed,
                              std::uint64_t path_index);

/// Euler-Maruyama with compensated atomic jumps applied at exact times.
PathBundle simulate_jump_diffusion(const ModelSpec& model, const Vec& x0,
                                   const TimeGrid& grid, std::uint64_t seed,
                                   std::uint64_t path_index);

/// Shared stepping routine. Coefficients are frozen at (t_k, X_k); jumps in
/// (t_k, t_{k+1}] act on X_k plus earlier jumps of the same step, then the
/// continuous increment b dt + sigma dW - dt sum_i f(t_k, X_k, u_i)
/// lambda(t_k, u_i) nu_i is added. `candidates` is ignored for models
/// without jumps.
PathBundle simulate_with_noise(const ModelSpec& model, const Vec& x0,
                               const TimeGrid& grid,
                               std::vector<Vec> increments,
                               const std::vector<JumpCandidate>& candidates,
                               SeedInfo seed_info);

/// Per-path trace: columns t, X_1..X_d.
void write_trace_csv(std::ostream& os, const PathBundle& path);
/// Jump events: columns time, atom_index, accepted, pre_1..pre_d.
void write_jump_csv(std::ostream& os, const PathBundle& path);

}  // namespace pathind
