// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathind/model.hpp"
#include "pathind/simulate.hpp"

namespace pathind {

/// Running terms of the Girsanov exponent
///   Y_t = int <gamma, dW> + 1/2 int |gamma|^2 ds
///       + int int log(lambda) N_lambda(ds, du) + int int (1 - lambda) nu(du) ds
/// sampled at the grid nodes of the covered step range, with Z = exp(-Y) and
/// the local-martingale part
///   M_t = -int <gamma, dW> + int int (1-lambda)/lambda tilde N_lambda(ds, du).
struct GirsanovLedger {
  std::vector<double> times;
  std::vector<double> stoch_integral;
  std::vector<double> quad_term;
  std::vector<double> jump_log_term;
  std::vector<double> compensator_term;
  std::vector<double> Y;
  std::vector<double> Z;
  std::vector<double> M;
  /// int int ((1-lambda)/lambda)^2 lambda nu(du) ds over the covered range.
  double novikov_jump_term = 0.0;
  int accepted_jumps = 0;

  double final_Y() const { return Y.back(); }
  double final_Z() const { return Z.back(); }
  double final_quad() const { return quad_term.back(); }
};

/// Half-open range of grid steps [begin, end).
struct StepRange {
  int begin = 0;
  int end = 0;
};

/// Continuous-case exponent: left-endpoint Ito sum and quadratic term. A path
/// carrying jump events is rejected unless `ignore_jumps` is set.
GirsanovLedger exponent_continuous(const PathBundle& path,
                                   const ModelSpec& model,
                                   std::optional<StepRange> range = {},
                                   bool ignore_jumps = false);

/// Jump-case exponent with both jump terms.
GirsanovLedger exponent_jump(const PathBundle& path, const ModelSpec& model,
                             std::optional<StepRange> range = {});

/// exponent_jump for jump models, exponent_continuous otherwise.
GirsanovLedger exponent(const PathBundle& path, const ModelSpec& model);

struct MomentProbe {
  /// Monte Carlo mean of exp{1/2 int |gamma|^2 ds}.
  double continuous_moment = 0.0;
  /// Monte Carlo mean of exp{1/2 int |gamma|^2 ds
  ///   + int int ((1-lambda)/lambda)^2 lambda nu(du) ds}.
  double jump_moment = 0.0;
  bool finite = true;
  bool overflow = false;
  /// More than half the estimate comes from under 1% of the paths.
  bool heavy_tail = false;
  std::string message;
};

MomentProbe exponential_moment_probe(std::span<const GirsanovLedger> ledgers);

/// Columns t, stoch_integral, quad_term, jump_log_term, compensator_term, Y, Z.
void write_ledger_csv(std::ostream& os, const GirsanovLedger& ledger,
                      bool header = true);

}  // namespace pathind
