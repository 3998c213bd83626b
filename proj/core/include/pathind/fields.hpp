// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "pathind/types.hpp"

namespace pathind {

/// Finite-difference step overrides. Unset entries fall back to the
/// defaults documented on ScalarField.
struct FdSteps {
  std::optional<double> h_t;
  std::optional<double> h_x;
  std::optional<double> h_hess;
};

struct Derivatives {
  double dt = 0.0;
  Vec grad;
  Mat hess;
};

/// A scalar field v(t, x) with optional analytic derivative maps.
///
/// Missing derivatives are computed by central differences:
///   - dt uses step h_t = 1e-5, switching to a one-sided second-order
///     stencil when t < h_t (t < 0 is never sampled);
///   - grad uses h_x = max(1e-5, 1e-7 |x_i|) per coordinate;
///   - hess uses the 4-point mixed stencil with h = max(1e-4, 1e-4 |x_i|)
///     and is symmetrized as (H + H^T) / 2.
/// An explicit h_x override applies to both grad and hess unless h_hess is
/// also given.
class ScalarField {
 public:
  using ValueMap = std::function<double(double, const Vec&)>;
  using GradMap = std::function<Vec(double, const Vec&)>;
  using HessMap = std::function<Mat(double, const Vec&)>;

  ScalarField() = default;
  ScalarField(std::string name, ValueMap value);

  ScalarField& with_dt(ValueMap dt);
  ScalarField& with_grad(GradMap grad);
  ScalarField& with_hess(HessMap hess);
  ScalarField& with_steps(FdSteps steps);

  const std::string& name() const { return name_; }
  bool valid() const { return static_cast<bool>(value_); }
  bool fully_analytic() const { return dt_ && grad_ && hess_; }
  bool has_analytic_dt() const { return static_cast<bool>(dt_); }
  bool has_analytic_grad() const { return static_cast<bool>(grad_); }
  bool has_analytic_hess() const { return static_cast<bool>(hess_); }
  const FdSteps& steps() const { return steps_; }

  double value(double t, const Vec& x) const;
  double dt(double t, const Vec& x) const;
  Vec grad(double t, const Vec& x) const;
  Mat hess(double t, const Vec& x) const;
  Derivatives derivatives(double t, const Vec& x) const;

  double fd_dt(double t, const Vec& x) const;
  Vec fd_grad(double t, const Vec& x) const;
  Mat fd_hess(double t, const Vec& x) const;

 private:
  double step_t() const;
  double step_x(double xi) const;
  double step_hess(double xi) const;
  void check_point(double t, const Vec& x) const;

  std::string name_;
  ValueMap value_;
  ValueMap dt_;
  GradMap grad_;
  HessMap hess_;
  FdSteps steps_;
};

/// A C^2 scalar transform with its first two derivatives and an open
/// admissible interval.
class FTransform {
 public:
  using Fn = std::function<double(double)>;

  FTransform(std::string name, Fn f, Fn f1, Fn f2,
             double lower = -std::numeric_limits<double>::infinity(),
             double upper = std::numeric_limits<double>::infinity());

  static FTransform identity();
  static FTransform log();
  static FTransform exp();
  /// f(s) = s^(2k+1); for k >= 1 the argument must be nonzero.
  static FTransform odd_power(int k);
  static FTransform tan();
  static FTransform custom(std::string name, Fn f, Fn f1, Fn f2,
                           double lower, double upper);
  /// Looks up identity | log | exp | tan | odd_power; `k` is read for
  /// odd_power only.
  static FTransform by_name(const std::string& name, int k = 1);

  const std::string& name() const { return name_; }
  bool in_domain(double s) const;
  /// Throws DomainError naming `where` when s is outside the domain.
  void check_domain(double s, const std::string& where = {}) const;

  double operator()(double s) const;
  double d1(double s) const;
  double d2(double s) const;

 private:
  std::string name_;
  Fn f_, f1_, f2_;
  double lower_, upper_;
  bool exclude_zero_ = false;
};

/// f o v with analytic chain-rule derivatives:
///   d_t(f o v) = f'(v) d_t v,  grad(f o v) = f'(v) grad v,
///   hess(f o v) = f'(v) hess v + f''(v) grad v grad v^T.
ScalarField compose(const FTransform& f, const ScalarField& field);

/// Reference and test fields addressable by name:
///   linear        v = <a, x> + c t               (params a, c)
///   heat_linear   v = <a, x> - |a|^2 t / 2        (params a)
///   heat_exp      v = exp(<a, x> - |a|^2 t / 2)   (params a)
///   quadratic     v = |x|^2 / 2
///   sin_cos       v = sin(x1) cos(x2)
///   two_exponential  v = log(exp(x1 - t/2) + exp(2 x1 - 2 t))
///   constant      v = c                           (params c)
///   smooth_bump   v = c0 + c1 sin(x1) cos(x2) exp(-t) + c2 x1 x2 / (1+|x|^2)
///                 (params c0, c1, c2; defaults keep v in [0.15, 0.85])
///   log_y_drift   v = log(x2) / 2 + t / 8
///   jump_linear   v = beta x1 - c t               (params beta, c)
ScalarField builtin_field(const std::string& name, const Params& params = {},
                          int dim = 2);

}  // namespace pathind
