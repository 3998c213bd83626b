// SPDX-License-Identifier: Apache-2.0
#include "pathind/simulate.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "pathind/export.hpp"

namespace pathind {

void TimeGrid::validate() const {
  if (!(t_final > 0.0) || !std::isfinite(t_final)) {
    throw ValidationError("time grid needs T > 0");
  }
  if (steps < 1) throw ValidationError("time grid needs at least one step");
}

int PathBundle::accepted_jumps() const {
  int n = 0;
  for (const auto& e : jumps) n += e.accepted ? 1 : 0;
  return n;
}

std::vector<Vec> brownian_increments(int m, const TimeGrid& grid,
                                     std::uint64_t seed,
                                     std::uint64_t path_index, int fine_steps) {
  grid.validate();
  if (fine_steps < grid.steps || fine_steps % grid.steps != 0) {
    throw ValidationError("fine resolution " + std::to_string(fine_steps) +
                          " is not a multiple of " + std::to_string(grid.steps));
  }
  RandomStream stream = derive_stream(seed, path_index, Substream::brownian);
  const double scale = std::sqrt(grid.t_final / fine_steps);
  std::vector<Vec> fine(static_cast<std::size_t>(fine_steps), Vec(m));
  for (auto& dw : fine) {
    for (int j = 0; j < m; ++j) dw[j] = scale * stream.gaussian();
  }
  if (fine_steps == grid.steps) return fine;
  return coarsen_increments(fine, grid.steps);
}

std::vector<Vec> coarsen_increments(const std::vector<Vec>& fine, int steps) {
  const auto n = static_cast<int>(fine.size());
  if (steps < 1 || n % steps != 0) {
    throw ValidationError("cannot coarsen " + std::to_string(n) +
                          " increments onto " + std::to_string(steps) +
                          " steps");
  }
  const int ratio = n / steps;
  std::vector<Vec> coarse;
  coarse.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    Vec acc = fine[static_cast<std::size_t>(k * ratio)];
    for (int j = 1; j < ratio; ++j) acc += fine[static_cast<std::size_t>(k * ratio + j)];
    coarse.push_back(std::move(acc));
  }
  return coarse;
}

std::vector<JumpCandidate> draw_jump_candidates(const JumpSpec& jump,
                                                double t_final,
                                                std::uint64_t seed,
                                                std::uint64_t path_index) {
  const double mass = jump.total_mass();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ValidationError("jump measure must have finite positive mass");
  }
  RandomStream stream = derive_stream(seed, path_index, Substream::jumps);
  std::vector<JumpCandidate> out;
  double t = 0.0;
  for (;;) {
    t += stream.exponential(mass);
    if (t > t_final) break;
    // categorical draw over atoms
    const double target = stream.uniform() * mass;
    int atom = 0;
    double cumulative = jump.atoms[0].weight;
    while (cumulative <= target &&
           atom + 1 < static_cast<int>(jump.atoms.size())) {
      ++atom;
      cumulative += jump.atoms[static_cast<std::size_t>(atom)].weight;
    }
    out.push_back({t, atom, stream.uniform()});
  }
  return out;
}

namespace {

[[noreturn]] void non_finite(const ModelSpec& model, int k, const Vec& x) {
  std::ostringstream os;
  os << "non-finite state in model '" << model.name << "' at step " << k
     << ": " << format_point(0.0, x);
  throw NumericError(os.str());
}

}  // namespace

PathBundle simulate_with_noise(const ModelSpec& model, const Vec& x0,
                               const TimeGrid& grid,
                               std::vector<Vec> increments,
                               const std::vector<JumpCandidate>& candidates,
                               SeedInfo seed_info) {
  grid.validate();
  if (x0.size() != model.d) {
    throw ConfigError("initial state has dimension " +
                      std::to_string(x0.size()) + ", model '" + model.name +
                      "' expects " + std::to_string(model.d));
  }
  if (static_cast<int>(increments.size()) != grid.steps) {
    throw ConfigError("increment count does not match the grid");
  }
  if (!x0.allFinite()) non_finite(model, 0, x0);

  PathBundle path;
  path.grid = grid;
  path.seed_info = seed_info;
  path.states.reserve(static_cast<std::size_t>(grid.steps) + 1);
  path.states.push_back(x0);

  const double dt = grid.dt();
  const JumpSpec* jump = model.has_jumps() ? &*model.jump : nullptr;
  std::size_t next_candidate = 0;
  Vec x = x0;

  for (int k = 0; k < grid.steps; ++k) {
    const double t = grid.time(k);
    const Vec& dw = increments[static_cast<std::size_t>(k)];
    const Mat sigma = model.diffusion(t, x);
    if (sigma.rows() != model.d || sigma.cols() != dw.size()) {
      throw ConfigError("diffusion shape does not match noise dimension in '" +
                        model.name + "'");
    }
    Vec increment = model.drift(t, x) * dt + sigma * dw;

    Vec next = x;
    if (jump) {
      Vec compensator = Vec::Zero(model.d);
      for (const auto& atom : jump->atoms) {
        compensator += jump->jump_coeff(t, x, atom.mark) *
                       (jump->lambda(t, atom.mark) * atom.weight);
      }
      increment -= compensator * dt;

      const double t_next = grid.time(k + 1);
      while (next_candidate < candidates.size() &&
             (candidates[next_candidate].time <= t_next ||
              k + 1 == grid.steps)) {
        const auto& c = candidates[next_candidate++];
        const auto& atom = jump->atoms[static_cast<std::size_t>(c.atom_index)];
        const double lambda = jump->lambda(c.time, atom.mark);
        if (!(lambda > 0.0 && lambda <= 1.0)) {
          std::ostringstream os;
          os << "lambda = " << lambda << " outside (0, 1] at t = " << c.time;
          throw ValidationError(os.str());
        }
        JumpEvent ev{c.time, k, c.atom_index, next, c.acceptance_draw < lambda};
        if (ev.accepted) next += jump->jump_coeff(c.time, next, atom.mark);
        path.jumps.push_back(std::move(ev));
      }
    }
    next += increment;
    if (!next.allFinite()) non_finite(model, k + 1, next);
    path.states.push_back(next);
    x = std::move(next);
  }
  path.bm_increments = std::move(increments);
  return path;
}

PathBundle simulate_diffusion(const ModelSpec& model, const Vec& x0,
                              const TimeGrid& grid, std::uint64_t seed,
                              std::uint64_t path_index) {
  auto dw = brownian_increments(model.m, grid, seed, path_index, grid.steps);
  ModelSpec continuous = model;
  continuous.jump.reset();
  return simulate_with_noise(continuous, x0, grid, std::move(dw), {},
                             {seed, path_index});
}

PathBundle simulate_jump_diffusion(const ModelSpec& model, const Vec& x0,
                                   const TimeGrid& grid, std::uint64_t seed,
                                   std::uint64_t path_index) {
  if (!model.has_jumps()) {
    throw ConfigError("model '" + model.name + "' has no jump specification");
  }
  auto dw = brownian_increments(model.m, grid, seed, path_index, grid.steps);
  auto candidates =
      draw_jump_candidates(*model.jump, grid.t_final, seed, path_index);
  return simulate_with_noise(model, x0, grid, std::move(dw), candidates,
                             {seed, path_index});
}

void write_trace_csv(std::ostream& os, const PathBundle& path) {
  const auto d = path.states.empty() ? 0 : path.states.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i) os << ",X_" << (i + 1);
  os << '\n';
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    os << csv_number(path.grid.time(static_cast<int>(k)));
    for (Eigen::Index i = 0; i < d; ++i) os << ',' << csv_number(path.states[k][i]);
    os << '\n';
  }
}

void write_jump_csv(std::ostream& os, const PathBundle& path) {
  const auto d = path.states.empty() ? 0 : path.states.front().size();
  os << "time,atom_index,accepted";
  for (Eigen::Index i = 0; i < d; ++i) os << ",pre_" << (i + 1);
  os << '\n';
  for (const auto& ev : path.jumps) {
    os << csv_number(ev.time) << ',' << ev.atom_index << ','
       << (ev.accepted ? 1 : 0);
    for (Eigen::Index i = 0; i < d; ++i) os << ',' << csv_number(ev.pre_state[i]);
    os << '\n';
  }
}

}  // namespace pathind
