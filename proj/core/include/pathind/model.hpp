// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathind/fields.hpp"
#include "pathind/types.hpp"

namespace pathind {

using VectorMap = std::function<Vec(double, const Vec&)>;
using MatrixMap = std::function<Mat(double, const Vec&)>;

struct JumpAtom {
  Vec mark;
  double weight = 0.0;
};

/// Finite atomic jump measure with thinning intensity.
///
/// The measure nu restricted to U_0 is sum_i weight_i delta_{mark_i}; the
/// Poisson random measure N_lambda has intensity lambda(t, u) dt nu(du).
struct JumpSpec {
  std::vector<JumpAtom> atoms;
  /// Jump size added to the state, (t, x, u) -> R^d.
  std::function<Vec(double, const Vec&, const Vec&)> jump_coeff;
  /// Thinning probability in (0, 1].
  std::function<double(double, const Vec&)> lambda;

  double total_mass() const;
  /// Throws ValidationError unless the mass is finite and positive and
  /// lambda(t, u_i) lies in (0, 1] at every atom and every probed time.
  void validate(std::span<const double> probe_times) const;
};

struct ModelSpec {
  std::string name;
  int d = 0;
  int m = 0;
  VectorMap drift;
  MatrixMap diffusion;
  VectorMap gamma;
  std::optional<JumpSpec> jump;

  /// When set, |b - sigma gamma| must stay below image_tolerance.
  bool drift_in_image = true;
  double image_tolerance = 1e-12;
  std::string notes;

  /// Resolved construction parameters (defaults filled in).
  Params params;
  /// Candidate field shipped with the model; for consistent models it
  /// satisfies the characterizing equations exactly.
  std::optional<ScalarField> reference;
  Vec default_x0;

  bool has_jumps() const { return jump.has_value(); }

  /// Evaluates drift, diffusion and gamma at (t, x) and checks shapes and
  /// finiteness. Throws ConfigError or NumericError.
  void check_at(double t, const Vec& x) const;
};

/// b(t,x) - sigma(t,x) gamma(t,x).
Vec drift_image_residual(const ModelSpec& model, double t, const Vec& x);

/// Names accepted by builtin(), in catalog order.
const std::vector<std::string>& builtin_names();

/// One-line description for the catalog listing.
std::string builtin_description(const std::string& name);

/// Constructs a catalog model.
///
///   gruschin          k (default 1)
///   kohn              printed drift, not in Im(sigma)
///   kohn_corrected    third drift component replaced by 0
///   degenerate_exp    gamma = (0, 1/2) 1_{y>0}
///   heat_kernel       a (default (1, 0))
///   two_exponential   k (default 1); Gruschin diffusion with a Hopf-Cole drift
///   manufactured_jump beta, marks, weights, lambda_scale, x0
///   pure_jump         beta, marks, weights, lambda_scale, x0
///
/// Throws NotFoundError for unknown names and ValidationError for invalid
/// or unknown parameters.
ModelSpec builtin(const std::string& name, const Params& params = {});

/// Default modulus for the monotonicity hypothesis:
/// kappa(r) = max(1, log(1/r)) for r < 1 and 1 otherwise.
double default_kappa(double r);

struct ProbePoint {
  double t = 0.0;
  Vec x;
  Vec y;
};

enum class Verdict { pass, fail, inconclusive };
const char* to_string(Verdict v);

struct ProbeSettings {
  std::function<double(double)> kappa = default_kappa;
  /// Constants above this bound are reported as failures.
  double max_constant = 1e6;
};

struct HypothesisProbeReport {
  /// Supremum of [2<x-y, b(x)-b(y)> + |sigma(x)-sigma(y)|^2] / (|x-y|^2 kappa).
  double lambda0_est = -std::numeric_limits<double>::infinity();
  /// Supremum of (|b|^2 + |sigma|^2) / (1+|x|)^2 over x and y.
  double lambda1_est = -std::numeric_limits<double>::infinity();
  /// Supremum of sum_i |f(x)-f(y)|^2 nu_i / (|x-y|^2 kappa); jump models only.
  double hf_lipschitz = -std::numeric_limits<double>::infinity();
  double hf_q2 = -std::numeric_limits<double>::infinity();
  double hf_q4 = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> kappa_profile;  // (r, kappa(r))
  std::size_t sample_count = 0;
  std::size_t skipped_pairs = 0;
  Verdict h1 = Verdict::inconclusive;
  Verdict h2 = Verdict::inconclusive;
  Verdict hf = Verdict::inconclusive;
};

/// Suprema of the hypothesis quotients over the probe set. Pairs with
/// x == y are skipped for the difference quotients.
HypothesisProbeReport hypothesis_probe(const ModelSpec& model,
                                       std::span<const ProbePoint> probes,
                                       const ProbeSettings& settings = {});

}  // namespace pathind
