// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathind/types.hpp"

namespace pathind::cli {

struct ModelSection {
  std::string name;
  Params params;
};

struct FieldSection {
  std::string name;  // empty: the model's reference field
  Params params;
};

struct TransformSection {
  std::string name;
  int k = 1;
};

struct GridSection {
  double T = 1.0;
  int steps = 100;
};

struct MonteCarloSection {
  int paths = 100;
  std::uint64_t seed = 0;
};

struct DomainSection {
  std::string source = "grid";  // grid | paths
  std::vector<double> times{0.5};
  std::vector<double> lower;    // default x0 - 0.5
  std::vector<double> upper;    // default x0 + 0.5
  int resolution = 5;
  int stride = 1;
};

struct ResidualSection {
  std::string op = "hjb";
  std::string named_case = "a";
  int k = 1;
};

struct ConvergenceSection {
  std::vector<int> levels{256, 1024, 4096};
  std::string expect = "converge";  // converge | exact | diverge
};

struct ToleranceSection {
  std::optional<double> identity_max;
  std::optional<double> residual;
  double exclusion_fraction = 0.01;
  double convergence_ratio = 0.6;
  double slope_min = 0.4;
  double slope_max = 1.1;
  double curl = 1e-6;
};

struct ProbeSection {
  std::vector<double> radii{1e-1, 1e-2, 1e-3};
  double max_constant = 1e6;
};

struct OutputSection {
  std::string directory = "pathind_out";
  bool ledger = false;
  int traces = 0;
};

struct RunConfig {
  ModelSection model;
  std::optional<FieldSection> field;
  std::optional<TransformSection> transform;
  GridSection grid;
  MonteCarloSection monte_carlo;
  DomainSection domain;
  ResidualSection residuals;
  ConvergenceSection convergence;
  ToleranceSection tolerances;
  ProbeSection probe;
  OutputSection output;
  int workers = 1;

  /// Canonical form with every default filled in. Excludes the output
  /// directory and the worker count, which never affect results.
  nlohmann::json resolved;
  /// FNV-1a digest of resolved.dump().
  std::string hash;
};

/// Applies a dotted-path override such as "grid.steps=64". The value is
/// parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Validates the document and fills in defaults. Unknown keys and type
/// mismatches throw ConfigError naming the offending key path.
RunConfig parse_config(const nlohmann::json& doc);

}  // namespace pathind::cli
