// SPDX-License-Identifier: Apache-2.0
#include "pathind/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "pathind/export.hpp"
#include "pathind/parallel.hpp"

namespace pathind {

void ExperimentConfig::validate() const {
  grid.validate();
  if (n_paths < 1) throw ValidationError("n_paths must be >= 1");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  if (!(exclusion_limit >= 0.0 && exclusion_limit <= 1.0)) {
    throw ValidationError("exclusion limit must lie in [0, 1]");
  }
  if (x0.size() != model.d) {
    throw ConfigError("x0 has dimension " + std::to_string(x0.size()) +
                      ", model '" + model.name + "' expects " +
                      std::to_string(model.d));
  }
  if (max_error_tol && !(*max_error_tol >= 0.0)) {
    throw ValidationError("error tolerance must be non-negative");
  }
}

ExperimentConfig experiment_for(const std::string& model_name,
                                const Params& params) {
  ExperimentConfig cfg;
  cfg.model = builtin(model_name, params);
  if (cfg.model.reference) cfg.field = *cfg.model.reference;
  cfg.x0 = cfg.model.default_x0;
  return cfg;
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return v[lo] + w * (v[hi] - v[lo]);
  };
  double sum = 0.0;
  for (double x : values) sum += x;  // input order, not sorted order
  s.max = v.back();
  s.mean = sum / static_cast<double>(v.size());
  s.median = q(0.5);
  s.q05 = q(0.05);
  s.q25 = q(0.25);
  s.q75 = q(0.75);
  s.q95 = q(0.95);
  return s;
}

namespace {

struct PathOutcome {
  PathRecord record;
  GirsanovLedger tail;  // final values only
};

GirsanovLedger final_only(const GirsanovLedger& L) {
  GirsanovLedger t;
  t.times = {L.times.back()};
  t.stoch_integral = {L.stoch_integral.back()};
  t.quad_term = {L.quad_term.back()};
  t.jump_log_term = {L.jump_log_term.back()};
  t.compensator_term = {L.compensator_term.back()};
  t.Y = {L.Y.back()};
  t.Z = {L.Z.back()};
  t.M = {L.M.back()};
  t.novikov_jump_term = L.novikov_jump_term;
  t.accepted_jumps = L.accepted_jumps;
  return t;
}

double transformed(const ExperimentConfig& cfg, double t, const Vec& x) {
  const double s = cfg.field.value(t, x);
  if (!std::isfinite(s)) {
    throw DomainError("field is not finite at " + format_point(t, x));
  }
  if (!cfg.transform) return s;
  cfg.transform->check_domain(s, format_point(t, x));
  return (*cfg.transform)(s);
}

PathOutcome run_path(const ExperimentConfig& cfg, const TimeGrid& grid,
                     std::vector<Vec> increments,
                     const std::vector<JumpCandidate>& candidates,
                     std::uint64_t index, bool with_field) {
  PathOutcome out;
  out.record.path_index = index;
  try {
    const PathBundle path =
        simulate_with_noise(cfg.model, cfg.x0, grid, std::move(increments),
                            candidates, {cfg.seed, index});
    const GirsanovLedger L = exponent(path, cfg.model);
    out.tail = final_only(L);
    out.record.Y_T = L.final_Y();
    out.record.Z_T = L.final_Z();
    out.record.jump_count = L.accepted_jumps;
    if (!std::isfinite(out.record.Y_T)) {
      throw NumericError("non-finite exponent on path " + std::to_string(index));
    }
    if (with_field) {
      const double rhs = transformed(cfg, grid.t_final, path.final_state()) -
                         transformed(cfg, 0.0, cfg.x0);
      out.record.error = std::abs(out.record.Y_T - rhs);
      if (!std::isfinite(out.record.error)) {
        throw NumericError("non-finite identity error on path " +
                           std::to_string(index));
      }
    }
  } catch (const DomainError& e) {
    out.record.excluded = true;
    out.record.reason = e.what();
  } catch (const NumericError& e) {
    out.record.excluded = true;
    out.record.reason = e.what();
  }
  return out;
}

std::vector<JumpCandidate> candidates_for(const ExperimentConfig& cfg,
                                          std::uint64_t index) {
  if (!cfg.model.has_jumps()) return {};
  return draw_jump_candidates(*cfg.model.jump, cfg.grid.t_final, cfg.seed,
                              index);
}

std::vector<PathOutcome> run_all(const ExperimentConfig& cfg, bool with_field) {
  cfg.validate();
  if (with_field && !cfg.field.valid()) {
    throw ConfigError("no field given and model '" + cfg.model.name +
                      "' has no reference field");
  }
  if (cfg.model.has_jumps()) {
    const std::vector<double> probe{0.0, cfg.grid.t_final};
    cfg.model.jump->validate(probe);
  }
  std::vector<PathOutcome> out(static_cast<std::size_t>(cfg.n_paths));
  parallel_for(out.size(), cfg.workers, [&](std::size_t i) {
    const auto index = static_cast<std::uint64_t>(i);
    auto dw = brownian_increments(cfg.model.m, cfg.grid, cfg.seed, index,
                                  cfg.grid.steps);
    out[i] = run_path(cfg, cfg.grid, std::move(dw), candidates_for(cfg, index),
                      index, with_field);
  });
  return out;
}

ExperimentResult collect(const ExperimentConfig& cfg, std::string kind,
                         std::vector<PathOutcome>& outcomes) {
  ExperimentResult r;
  r.kind = std::move(kind);
  r.seed = cfg.seed;
  r.steps = cfg.grid.steps;
  r.t_final = cfg.grid.t_final;
  r.config_hash = cfg.config_hash;
  std::vector<double> errors;
  std::vector<double> z;
  r.records.reserve(outcomes.size());
  for (auto& o : outcomes) {
    if (o.record.excluded) {
      ++r.excluded;
    } else {
      errors.push_back(o.record.error);
      z.push_back(o.record.Z_T);
    }
    r.records.push_back(std::move(o.record));
  }
  r.errors = summarize(errors);
  r.exclusion_ok = static_cast<double>(r.excluded) <=
                   cfg.exclusion_limit * static_cast<double>(outcomes.size());
  if (!z.empty()) {
    double sum = 0.0;
    for (double v : z) sum += v;
    r.mean_Z = sum / static_cast<double>(z.size());
    if (z.size() > 1) {
      double ss = 0.0;
      for (double v : z) ss += (v - r.mean_Z) * (v - r.mean_Z);
      const double var = ss / static_cast<double>(z.size() - 1);
      r.stderr_Z = std::sqrt(var / static_cast<double>(z.size()));
    }
    r.martingale_pass = std::abs(r.mean_Z - 1.0) <= 3.0 * r.stderr_Z;
  }
  return r;
}

}  // namespace

ExperimentResult identity_experiment(const ExperimentConfig& cfg) {
  auto outcomes = run_all(cfg, true);
  ExperimentResult r = collect(cfg, "identity", outcomes);
  r.pass = r.exclusion_ok && r.errors.count > 0 &&
           (!cfg.max_error_tol || r.errors.max <= *cfg.max_error_tol);
  return r;
}

ExperimentResult martingale_experiment(const ExperimentConfig& cfg) {
  auto outcomes = run_all(cfg, false);
  std::vector<GirsanovLedger> tails;
  tails.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (!o.record.excluded) tails.push_back(o.tail);
  }
  ExperimentResult r = collect(cfg, "martingale", outcomes);
  r.moment = exponential_moment_probe(tails);
  r.pass = r.exclusion_ok && r.martingale_pass;
  return r;
}

namespace {

void check_levels(std::span<const int> levels) {
  if (levels.size() < 2) {
    throw ValidationError("convergence study needs at least two levels");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1) throw ValidationError("levels must be positive");
    if (i == 0) continue;
    if (levels[i] <= levels[i - 1]) {
      throw ValidationError("levels must be strictly increasing");
    }
    if (levels[i] % levels[i - 1] != 0) {
      throw ValidationError("level " + std::to_string(levels[i]) +
                            " is not a refinement of " +
                            std::to_string(levels[i - 1]));
    }
  }
}

}  // namespace

ConvergenceTable convergence_study(const ExperimentConfig& cfg,
                                   std::span<const int> levels) {
  check_levels(levels);
  ExperimentConfig base = cfg;
  base.grid.steps = levels.back();
  base.validate();
  if (!base.field.valid()) {
    throw ConfigError("convergence study needs a field");
  }
  if (base.model.has_jumps()) {
    const std::vector<double> probe{0.0, base.grid.t_final};
    base.model.jump->validate(probe);
  }

  const std::size_t L = levels.size();
  const auto n = static_cast<std::size_t>(base.n_paths);
  std::vector<std::vector<PathRecord>> records(L, std::vector<PathRecord>(n));
  parallel_for(n, base.workers, [&](std::size_t i) {
    const auto index = static_cast<std::uint64_t>(i);
    const auto fine = brownian_increments(base.model.m, base.grid, base.seed,
                                          index, base.grid.steps);
    const auto candidates = candidates_for(base, index);
    for (std::size_t l = 0; l < L; ++l) {
      const TimeGrid grid{base.grid.t_final, levels[l]};
      auto dw = l + 1 == L ? fine : coarsen_increments(fine, levels[l]);
      records[l][i] =
          run_path(base, grid, std::move(dw), candidates, index, true).record;
    }
  });

  ConvergenceTable table;
  table.seed = base.seed;
  table.config_hash = base.config_hash;
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> errors;
    ConvergenceRow row;
    row.steps = levels[l];
    row.dt = base.grid.t_final / levels[l];
    for (const auto& rec : records[l]) {
      if (rec.excluded) {
        ++row.excluded;
      } else {
        errors.push_back(rec.error);
      }
    }
    const SummaryStats s = summarize(errors);
    row.median = s.median;
    row.max = s.max;
    row.mean = s.mean;
    table.rows.push_back(row);
  }
  table.records = std::move(records);

  table.exact = std::all_of(table.rows.begin(), table.rows.end(),
                            [](const ConvergenceRow& r) { return r.median <= 1e-12; });
  table.slope = std::numeric_limits<double>::quiet_NaN();
  if (!table.exact) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (const auto& r : table.rows) {
      if (!(r.median > 0.0)) continue;
      const double x = std::log(r.dt);
      const double y = std::log(r.median);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++count;
    }
    if (count >= 2) {
      const double denom = count * sxx - sx * sx;
      table.slope = (count * sxy - sx * sy) / denom;
    }
  }
  return table;
}

NegativeResult negative_experiment(const ExperimentConfig& cfg,
                                   std::span<const int> levels) {
  NegativeResult r;
  r.table = convergence_study(cfg, levels);

  ExperimentConfig control = experiment_for("heat_kernel");
  control.grid = {cfg.grid.t_final, levels.back()};
  control.n_paths = cfg.n_paths;
  control.seed = cfg.seed;
  control.workers = cfg.workers;
  r.baseline = identity_experiment(control).errors.median;

  const auto& rows = r.table.rows;
  r.finest = rows.back().median;
  r.previous = rows[rows.size() - 2].median;
  r.non_convergent = r.finest > 10.0 * r.baseline && r.finest >= 0.8 * r.previous;
  return r;
}

void write_paths_csv(std::ostream& os, std::span<const PathRecord> records) {
  os << "path_index,e_i,Z_T,jump_count,excluded,reason\n";
  for (const auto& r : records) {
    os << r.path_index << ',' << csv_number(r.error) << ',' << csv_number(r.Z_T)
       << ',' << r.jump_count << ',' << (r.excluded ? 1 : 0) << ',';
    // reasons are free text; quote and double embedded quotes
    if (!r.reason.empty()) {
      os << '"';
      for (char c : r.reason) {
        if (c == '"') os << '"';
        os << (c == '\n' ? ' ' : c);
      }
      os << '"';
    }
    os << '\n';
  }
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "steps,dt,median_error,max_error,mean_error,excluded,slope\n";
  for (const auto& r : table.rows) {
    os << r.steps << ',' << csv_number(r.dt) << ',' << csv_number(r.median)
       << ',' << csv_number(r.max) << ',' << csv_number(r.mean) << ','
       << r.excluded << ',' << csv_number(table.slope) << '\n';
  }
}

nlohmann::json to_json(const SummaryStats& s) {
  return {{"count", s.count}, {"max", s.max},   {"mean", s.mean},
          {"median", s.median}, {"q05", s.q05}, {"q25", s.q25},
          {"q75", s.q75},     {"q95", s.q95}};
}

nlohmann::json to_json(const ExperimentResult& r) {
  nlohmann::json j = {{"kind", r.kind},
                      {"paths", r.records.size()},
                      {"steps", r.steps},
                      {"T", r.t_final},
                      {"seed", r.seed},
                      {"config_hash", r.config_hash},
                      {"errors", to_json(r.errors)},
                      {"excluded", r.excluded},
                      {"exclusion_ok", r.exclusion_ok},
                      {"mean_Z", r.mean_Z},
                      {"stderr_Z", r.stderr_Z},
                      {"martingale_pass", r.martingale_pass},
                      {"pass", r.pass}};
  if (r.moment) {
    j["moment_probe"] = {{"continuous_moment", r.moment->continuous_moment},
                         {"jump_moment", r.moment->jump_moment},
                         {"finite", r.moment->finite},
                         {"overflow", r.moment->overflow},
                         {"heavy_tail", r.moment->heavy_tail},
                         {"message", r.moment->message}};
  }
  return j;
}

nlohmann::json to_json(const ConvergenceTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"steps", r.steps},
                    {"dt", r.dt},
                    {"median_error", r.median},
                    {"max_error", r.max},
                    {"mean_error", r.mean},
                    {"excluded", r.excluded}});
  }
  nlohmann::json j = {{"rows", rows},
                      {"exact", t.exact},
                      {"seed", t.seed},
                      {"config_hash", t.config_hash}};
  if (std::isfinite(t.slope)) {
    j["slope"] = t.slope;
  } else {
    j["slope"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const NegativeResult& r) {
  return {{"convergence", to_json(r.table)},
          {"baseline_median", r.baseline},
          {"finest_median", r.finest},
          {"previous_median", r.previous},
          {"non_convergent", r.non_convergent}};
}

}  // namespace pathind
