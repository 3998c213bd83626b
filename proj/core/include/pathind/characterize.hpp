// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathind/fields.hpp"
#include "pathind/model.hpp"
#include "pathind/simulate.hpp"

namespace pathind {

struct DomainPoint {
  double t = 0.0;
  Vec x;
};

/// Finite set of (t, x) points on which residuals are evaluated: a user grid
/// or the states visited by simulated paths.
struct EvaluationDomain {
  std::vector<DomainPoint> points;

  /// Cartesian product of `times` with a tensor grid of `resolution` points
  /// per coordinate on [lower_i, upper_i].
  static EvaluationDomain grid(std::span<const double> times, const Vec& lower,
                               const Vec& upper, int resolution);
  /// Every `stride`-th visited node (t_k, X_k) of each path, k = 0 included.
  static EvaluationDomain from_paths(std::span<const PathBundle> paths,
                                     int stride = 1);
  void append(const EvaluationDomain& other);
  bool empty() const { return points.empty(); }
};

struct HjbResidual {
  Vec r_grad;           // sigma sigma^* grad v - b
  double r_time = 0.0;  // d_t v + (Tr[sigma sigma^* hess v] + |sigma^* grad v|^2) / 2
};

/// Residuals of the gradient condition and the time-reversed HJB equation.
HjbResidual hjb_residual(const ScalarField& v, const ModelSpec& model, double t,
                         const Vec& x);

struct TransformResidual {
  /// f'(v) sigma sigma^* grad v - b
  Vec r_grad;
  /// f'(v) d_t v + (f'(v) Tr[..] + f''(v) |sigma^* grad v|^2
  ///   + f'(v)^2 |sigma^* grad v|^2) / 2
  double r_time = 0.0;
  /// The same two residuals divided by f'(v).
  Vec r_grad_normalized;
  double r_time_normalized = 0.0;
};

/// Residuals of the f-transformed system. Throws DomainError when v(t,x)
/// is outside f's domain or f'(v) = 0.
TransformResidual ftransform_residual(const FTransform& f, const ScalarField& v,
                                      const ModelSpec& model, double t,
                                      const Vec& x);

/// Special transforms: a identity, b log, b_identity log with sigma = Id,
/// c odd power 2k+1, d tan.
enum class NamedCase { a, b, b_identity, c, d };
NamedCase parse_named_case(const std::string& s);
const char* to_string(NamedCase c);
FTransform transform_for(NamedCase c, int k = 1);

/// Evaluates the case-specific equations in their printed normalization:
///   a: sigma sigma^* grad v - b,           d_t v + (Tr + |sigma^* grad v|^2)/2
///   b: sigma sigma^* grad v - v b,         d_t v + Tr/2
///   b_identity: grad v - v b,              d_t v + Laplacian(v)/2
///   c: (2k+1) v^{2k} sigma sigma^* grad v - b,
///      d_t v + (Tr + [(2k+1) v^{2k+1} + 2k] / v |sigma^* grad v|^2)/2
///   d: sigma sigma^* grad v - cos^2(v) b,
///      d_t v + (Tr + (cos v + sin v)^2 / cos^2 v |sigma^* grad v|^2)/2
HjbResidual named_residual(NamedCase c, const ScalarField& v,
                           const ModelSpec& model, double t, const Vec& x,
                           int k = 1);

/// The generic transform residual expressed in the normalization the named
/// case uses, so the two can be compared entrywise.
HjbResidual printed_counterpart(NamedCase c, const TransformResidual& r);

/// Residual of the time-reversed PIDE
///   d_t v + Tr/2 + |sigma^* grad v|^2/2
///   + sum_i [e^{dv_i} - 1 - <f(t,x,u_i), grad v> e^{dv_i}] nu_i,
/// dv_i = v(t, x + f(t,x,u_i)) - v(t,x). Models without jumps contribute an
/// empty sum. Throws NumericError if e^{dv_i} overflows.
double pide_residual(const ScalarField& v, const ModelSpec& model, double t,
                     const Vec& x);

struct LambdaConsistency {
  std::vector<double> residual;        // lambda(t,u_i) - exp(dv_i)
  std::vector<double> implied_lambda;  // exp(dv_i)
  /// False when some implied lambda exceeds 1.
  bool implied_in_range = true;
};

LambdaConsistency lambda_consistency(const ScalarField& v,
                                     const ModelSpec& model, double t,
                                     const Vec& x);

struct GammaConsistency {
  Vec r_star;                      // gamma - sigma^* grad v
  std::optional<Vec> r_star_star;  // gamma - sigma sigma^* grad v, d == m only
};

GammaConsistency gamma_consistency(const ScalarField& v, const ModelSpec& model,
                                   double t, const Vec& x);

struct CurlPoint {
  double t = 0.0;
  Vec x;
  Vec candidate_gradient;
  Mat defect;  // d_i g_j - d_j g_i
  double magnitude = 0.0;
  bool skipped = false;
  std::string reason;
};

struct CurlReport {
  std::vector<CurlPoint> points;
  double max_defect = 0.0;
  std::size_t worst_index = 0;
  std::size_t skipped = 0;
  double step = 0.0;
};

/// Solves sigma^*(t,x) g = gamma(t,x) for the candidate gradient g and
/// differences it centrally with step h. A nonzero antisymmetric defect rules
/// out any C^2 potential v with sigma^* grad v = gamma. Requires d == m;
/// points where sigma^* is singular (here or at a stencil point) are skipped.
CurlReport gamma_integrability_check(const ModelSpec& model,
                                     const EvaluationDomain& domain,
                                     double h = 1e-5);

struct ResidualOperator {
  enum class Kind { hjb, ftransform, named, jump };
  Kind kind = Kind::hjb;
  std::optional<FTransform> transform;
  NamedCase named = NamedCase::a;
  int k = 1;

  static ResidualOperator parse(const std::string& name);
  std::string label() const;
};

struct ResidualRecord {
  double t = 0.0;
  Vec x;
  std::optional<Vec> r_grad;
  std::optional<double> r_time;
  std::optional<double> r_jump;
  std::vector<double> r_lambda;
  std::optional<Vec> r_gamma;
  double magnitude = 0.0;
  std::string error;
};

struct ResidualReport {
  std::string op;
  std::vector<ResidualRecord> records;
  std::optional<double> sup_grad;
  std::optional<double> sup_time;
  std::optional<double> sup_jump;
  std::optional<double> sup_lambda;
  std::optional<double> sup_gamma;
  double sup_all = 0.0;
  std::size_t worst_index = 0;
  std::size_t error_count = 0;
  double tol = 0.0;
  bool pass = false;
};

/// Default tolerance: 1e-10 for fully analytic fields, 1e-6 otherwise.
double default_residual_tolerance(const ScalarField& v);

/// Applies `op` at every domain point. Point-level failures are recorded and
/// counted as failures; an empty domain throws ValidationError. The hjb
/// operator also reports gamma - sigma^* grad v.
ResidualReport evaluate_on_domain(const ResidualOperator& op,
                                  const ScalarField& v, const ModelSpec& model,
                                  const EvaluationDomain& domain, double tol,
                                  int workers = 1);

/// One row per point: t, x_1..x_d, then the residual columns present for the
/// operator, then `error`.
void write_residuals_csv(std::ostream& os, const ResidualReport& report);
nlohmann::json to_json(const ResidualReport& report);

void write_curl_csv(std::ostream& os, const CurlReport& report);
nlohmann::json to_json(const CurlReport& report);

}  // namespace pathind
