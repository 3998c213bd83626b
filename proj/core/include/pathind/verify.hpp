// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathind/fields.hpp"
#include "pathind/ledger.hpp"
#include "pathind/model.hpp"
#include "pathind/simulate.hpp"

namespace pathind {

struct ExperimentConfig {
  ModelSpec model;
  /// Field v compared against the exponent; defaults to the model reference.
  ScalarField field;
  std::optional<FTransform> transform;
  Vec x0;
  TimeGrid grid;
  int n_paths = 100;
  std::uint64_t seed = 0;
  /// Caps parallelism; never changes results.
  int workers = 1;
  /// Largest admissible fraction of excluded paths.
  double exclusion_limit = 0.01;
  /// Pass threshold on the max identity error, when one applies.
  std::optional<double> max_error_tol;
  /// Digest of the resolved configuration, echoed in results.
  std::string config_hash;

  /// Throws ValidationError or ConfigError.
  void validate() const;
};

/// Catalog model with its reference field and default initial state.
ExperimentConfig experiment_for(const std::string& model_name,
                                const Params& params = {});

struct PathRecord {
  std::uint64_t path_index = 0;
  double error = 0.0;  // |Y_T - (F(v(T,X_T)) - F(v(0,x0)))|
  double Y_T = 0.0;
  double Z_T = 0.0;
  int jump_count = 0;
  bool excluded = false;
  std::string reason;
};

struct SummaryStats {
  std::size_t count = 0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

/// Quantiles use linear interpolation between order statistics. An empty
/// sample gives all zeros.
SummaryStats summarize(std::span<const double> values);

struct ExperimentResult {
  std::string kind;
  std::vector<PathRecord> records;
  SummaryStats errors;  // over included paths
  std::size_t excluded = 0;
  bool exclusion_ok = true;
  double mean_Z = 0.0;
  double stderr_Z = 0.0;
  bool martingale_pass = false;
  std::optional<MomentProbe> moment;
  /// Identity: max error within tolerance and exclusions within limit.
  /// Martingale: |mean Z - 1| <= 3 stderr.
  bool pass = false;
  std::uint64_t seed = 0;
  int steps = 0;
  double t_final = 0.0;
  std::string config_hash;
};

/// Simulates n_paths trajectories and compares the Girsanov exponent with
/// the increment of F(v). Paths leaving the domain of F o v, or producing a
/// non-finite state, are excluded and counted.
ExperimentResult identity_experiment(const ExperimentConfig& cfg);

/// Sample mean and standard error of Z_T, with the exponential moment probe.
ExperimentResult martingale_experiment(const ExperimentConfig& cfg);

struct ConvergenceRow {
  int steps = 0;
  double dt = 0.0;
  double median = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t excluded = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  /// Least-squares slope of log(median) against log(dt); nan when exact.
  double slope = 0.0;
  /// Every median at or below 1e-12.
  bool exact = false;
  /// Per-level path records, aligned with rows.
  std::vector<std::vector<PathRecord>> records;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Identity errors on nested grids: per path, Brownian increments are drawn
/// on the finest level and summed onto coarser ones, and jump candidates are
/// shared. Levels must be strictly increasing with each dividing the next;
/// cfg.grid.steps is ignored.
ConvergenceTable convergence_study(const ExperimentConfig& cfg,
                                   std::span<const int> levels);

struct NegativeResult {
  ConvergenceTable table;
  double baseline = 0.0;  // heat_kernel median at the finest level
  double finest = 0.0;
  double previous = 0.0;
  /// finest > 10 baseline and finest >= 0.8 previous.
  bool non_convergent = false;
};

/// Convergence study expected to fail: confirms that the identity error
/// neither reaches the exact-model baseline nor keeps decreasing.
NegativeResult negative_experiment(const ExperimentConfig& cfg,
                                   std::span<const int> levels);

/// Columns path_index, e_i, Z_T, jump_count, excluded, reason.
void write_paths_csv(std::ostream& os, std::span<const PathRecord> records);
/// Columns steps, dt, median_error, max_error, mean_error, excluded, slope.
void write_convergence_csv(std::ostream& os, const ConvergenceTable& table);

nlohmann::json to_json(const SummaryStats& s);
nlohmann::json to_json(const ExperimentResult& r);
nlohmann::json to_json(const ConvergenceTable& t);
nlohmann::json to_json(const NegativeResult& r);

}  // namespace pathind
