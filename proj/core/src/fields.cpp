// SPDX-License-Identifier: Apache-2.0
#include "pathind/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

namespace pathind {

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

std::string format_point(double t, const Vec& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(t=" << t << ", x=[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  os << "])";
  return os.str();
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(std::string name, ValueMap value)
    : name_(std::move(name)), value_(std::move(value)) {}

ScalarField& ScalarField::with_dt(ValueMap dt) {
  dt_ = std::move(dt);
  return *this;
}
ScalarField& ScalarField::with_grad(GradMap grad) {
  grad_ = std::move(grad);
  return *this;
}
ScalarField& ScalarField::with_hess(HessMap hess) {
  hess_ = std::move(hess);
  return *this;
}
ScalarField& ScalarField::with_steps(FdSteps steps) {
  steps_ = steps;
  return *this;
}

void ScalarField::check_point(double t, const Vec& x) const {
  if (!std::isfinite(t) || !x.allFinite()) {
    throw NumericError("field '" + name_ + "' evaluated at non-finite point " +
                       format_point(t, x));
  }
}

double ScalarField::value(double t, const Vec& x) const {
  check_point(t, x);
  return value_(t, x);
}

namespace {

constexpr double kMinRelStep = 16.0 * std::numeric_limits<double>::epsilon();

void check_step(double h, double scale, const char* what) {
  if (!(h > kMinRelStep * std::max(1.0, std::abs(scale)))) {
    std::ostringstream os;
    os << "finite-difference step " << what << " = " << h
       << " is below the machine-epsilon scale";
    throw ConfigError(os.str());
  }
}

}  // namespace

double ScalarField::step_t() const { return steps_.h_t.value_or(1e-5); }

double ScalarField::step_x(double xi) const {
  if (steps_.h_x) return *steps_.h_x;
  return std::max(1e-5, 1e-7 * std::abs(xi));
}

double ScalarField::step_hess(double xi) const {
  if (steps_.h_hess) return *steps_.h_hess;
  if (steps_.h_x) return *steps_.h_x;
  return std::max(1e-4, 1e-4 * std::abs(xi));
}

double ScalarField::fd_dt(double t, const Vec& x) const {
  check_point(t, x);
  const double h = step_t();
  check_step(h, t, "h_t");
  if (t < h) {
    // one-sided second-order stencil; t < 0 is inadmissible
    return (-3.0 * value_(t, x) + 4.0 * value_(t + h, x) -
            value_(t + 2.0 * h, x)) /
           (2.0 * h);
  }
  return (value_(t + h, x) - value_(t - h, x)) / (2.0 * h);
}

Vec ScalarField::fd_grad(double t, const Vec& x) const {
  check_point(t, x);
  const auto d = x.size();
  Vec g(d);
  Vec xp = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double h = step_x(x[i]);
    check_step(h, x[i], "h_x");
    xp[i] = x[i] + h;
    const double fp = value_(t, xp);
    xp[i] = x[i] - h;
    const double fm = value_(t, xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Mat ScalarField::fd_hess(double t, const Vec& x) const {
  check_point(t, x);
  const auto d = x.size();
  Mat H(d, d);
  Vec xp = x;
  const double f0 = value_(t, x);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double hi = step_hess(x[i]);
    check_step(hi, x[i], "h_hess");
    xp[i] = x[i] + hi;
    const double fp = value_(t, xp);
    xp[i] = x[i] - hi;
    const double fm = value_(t, xp);
    xp[i] = x[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double hj = step_hess(x[j]);
      check_step(hj, x[j], "h_hess");
      auto eval = [&](double si, double sj) {
        xp[i] = x[i] + si * hi;
        xp[j] = x[j] + sj * hj;
        const double f = value_(t, xp);
        xp[i] = x[i];
        xp[j] = x[j];
        return f;
      };
      const double mixed =
          (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) /
          (4.0 * hi * hj);
      H(i, j) = mixed;
      H(j, i) = mixed;
    }
  }
  return 0.5 * (H + H.transpose());
}

double ScalarField::dt(double t, const Vec& x) const {
  if (dt_) {
    check_point(t, x);
    return dt_(t, x);
  }
  return fd_dt(t, x);
}

Vec ScalarField::grad(double t, const Vec& x) const {
  if (grad_) {
    check_point(t, x);
    return grad_(t, x);
  }
  return fd_grad(t, x);
}

Mat ScalarField::hess(double t, const Vec& x) const {
  if (hess_) {
    check_point(t, x);
    return hess_(t, x);
  }
  return fd_hess(t, x);
}

Derivatives ScalarField::derivatives(double t, const Vec& x) const {
  return {dt(t, x), grad(t, x), hess(t, x)};
}

// ---------------------------------------------------------------------------
// FTransform

FTransform::FTransform(std::string name, Fn f, Fn f1, Fn f2, double lower,
                       double upper)
    : name_(std::move(name)),
      f_(std::move(f)),
      f1_(std::move(f1)),
      f2_(std::move(f2)),
      lower_(lower),
      upper_(upper) {}

FTransform FTransform::identity() {
  return {"identity", [](double s) { return s; },
          [](double) { return 1.0; }, [](double) { return 0.0; }};
}

FTransform FTransform::log() {
  return {"log",
          [](double s) { return std::log(s); },
          [](double s) { return 1.0 / s; },
          [](double s) { return -1.0 / (s * s); },
          0.0,
          std::numeric_limits<double>::infinity()};
}

FTransform FTransform::exp() {
  return {"exp", [](double s) { return std::exp(s); },
          [](double s) { return std::exp(s); },
          [](double s) { return std::exp(s); }};
}

namespace {

double ipow(double s, int n) {
  if (n < 0) return 1.0 / ipow(s, -n);
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= s;
  return r;
}

}  // namespace

FTransform FTransform::odd_power(int k) {
  const int n = 2 * k + 1;
  FTransform f("odd_power(" + std::to_string(k) + ")",
               [n](double s) { return ipow(s, n); },
               [n](double s) { return n * ipow(s, n - 1); },
               [n](double s) {
                 return n == 1 ? 0.0 : n * (n - 1) * ipow(s, n - 2);
               });
  f.exclude_zero_ = k > 0;
  return f;
}

FTransform FTransform::tan() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  return {"tan",
          [](double s) { return std::tan(s); },
          [](double s) {
            const double c = std::cos(s);
            return 1.0 / (c * c);
          },
          [](double s) {
            const double c = std::cos(s);
            return 2.0 * std::tan(s) / (c * c);
          },
          -half_pi,
          half_pi};
}

FTransform FTransform::custom(std::string name, Fn f, Fn f1, Fn f2,
                              double lower, double upper) {
  return {std::move(name), std::move(f), std::move(f1), std::move(f2), lower,
          upper};
}

FTransform FTransform::by_name(const std::string& name, int k) {
  if (name == "identity") return identity();
  if (name == "log") return log();
  if (name == "exp") return exp();
  if (name == "tan") return tan();
  if (name == "odd_power") return odd_power(k);
  throw NotFoundError("unknown transform '" + name + "'");
}

bool FTransform::in_domain(double s) const {
  if (std::isnan(s)) return false;
  if (exclude_zero_ && s == 0.0) return false;
  return s > lower_ && s < upper_;
}

void FTransform::check_domain(double s, const std::string& where) const {
  if (!in_domain(s)) {
    std::ostringstream os;
    os.precision(17);
    os << "transform '" << name_ << "' argument " << s
       << " outside its domain";
    if (!where.empty()) os << " at " << where;
    throw DomainError(os.str());
  }
}

double FTransform::operator()(double s) const {
  check_domain(s);
  return f_(s);
}
double FTransform::d1(double s) const {
  check_domain(s);
  return f1_(s);
}
double FTransform::d2(double s) const {
  check_domain(s);
  return f2_(s);
}

ScalarField compose(const FTransform& f, const ScalarField& field) {
  auto checked = [f, field](double t, const Vec& x) {
    const double v = field.value(t, x);
    f.check_domain(v, format_point(t, x));
    return v;
  };
  ScalarField out(f.name() + "(" + field.name() + ")",
                  [f, checked](double t, const Vec& x) {
                    return f(checked(t, x));
                  });
  out.with_dt([f, field, checked](double t, const Vec& x) {
       return f.d1(checked(t, x)) * field.dt(t, x);
     })
      .with_grad([f, field, checked](double t, const Vec& x) -> Vec {
        return f.d1(checked(t, x)) * field.grad(t, x);
      })
      .with_hess([f, field, checked](double t, const Vec& x) -> Mat {
        const double v = checked(t, x);
        const Vec g = field.grad(t, x);
        return f.d1(v) * field.hess(t, x) + f.d2(v) * (g * g.transpose());
      })
      .with_steps(field.steps());
  return out;
}

// ---------------------------------------------------------------------------
// Built-in fields

namespace {

double scalar_param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (it->second.size() != 1) {
    throw ValidationError("parameter '" + key + "' must be a scalar");
  }
  return it->second[0];
}

Vec vector_param(const Params& p, const std::string& key, const Vec& fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (it->second.empty()) {
    throw ValidationError("parameter '" + key + "' must be non-empty");
  }
  return Eigen::Map<const Vec>(it->second.data(),
                               static_cast<Eigen::Index>(it->second.size()));
}

void require_dim(const Vec& x, Eigen::Index dim, const std::string& name) {
  if (x.size() != dim) {
    throw ConfigError("field '" + name + "' expects dimension " +
                      std::to_string(dim) + ", got " +
                      std::to_string(x.size()));
  }
}

ScalarField linear_field(std::string name, Vec a, double c) {
  const auto d = a.size();
  ScalarField f(name, [a, c, name](double t, const Vec& x) {
    require_dim(x, a.size(), name);
    return a.dot(x) + c * t;
  });
  f.with_dt([c](double, const Vec&) { return c; })
      .with_grad([a](double, const Vec&) -> Vec { return a; })
      .with_hess([d](double, const Vec&) -> Mat { return Mat::Zero(d, d); });
  return f;
}

// log(exp(x1 - t/2) + exp(2 x1 - 2t)) and the weight p of the second term.
std::pair<double, double> two_exp_parts(double t, double x1) {
  const double a = x1 - 0.5 * t;
  const double b = 2.0 * x1 - 2.0 * t;
  const double hi = std::max(a, b);
  const double v = hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  const double p = 1.0 / (1.0 + std::exp(a - b));
  return {v, p};
}

}  // namespace

ScalarField builtin_field(const std::string& name, const Params& params,
                          int dim) {
  if ((name == "sin_cos" || name == "smooth_bump" || name == "log_y_drift") &&
      dim < 2) {
    throw ConfigError("field '" + name + "' needs dimension >= 2");
  }
  if (name == "linear") {
    const Vec a = vector_param(params, "a", Vec::Unit(dim, 0));
    return linear_field("linear", a, scalar_param(params, "c", 0.0));
  }
  if (name == "heat_linear") {
    const Vec a = vector_param(params, "a", Vec::Unit(dim, 0));
    return linear_field("heat_linear", a, -0.5 * a.squaredNorm());
  }
  if (name == "heat_exp") {
    const Vec a = vector_param(params, "a", Vec::Unit(dim, 0));
    const double c = -0.5 * a.squaredNorm();
    ScalarField f("heat_exp", [a, c](double t, const Vec& x) {
      require_dim(x, a.size(), "heat_exp");
      return std::exp(a.dot(x) + c * t);
    });
    f.with_dt([a, c](double t, const Vec& x) {
       return c * std::exp(a.dot(x) + c * t);
     })
        .with_grad([a, c](double t, const Vec& x) -> Vec {
          return std::exp(a.dot(x) + c * t) * a;
        })
        .with_hess([a, c](double t, const Vec& x) -> Mat {
          return std::exp(a.dot(x) + c * t) * (a * a.transpose());
        });
    return f;
  }
  if (name == "quadratic") {
    ScalarField f("quadratic",
                  [](double, const Vec& x) { return 0.5 * x.squaredNorm(); });
    f.with_dt([](double, const Vec&) { return 0.0; })
        .with_grad([](double, const Vec& x) -> Vec { return x; })
        .with_hess([](double, const Vec& x) -> Mat {
          return Mat::Identity(x.size(), x.size());
        });
    return f;
  }
  if (name == "sin_cos") {
    ScalarField f("sin_cos", [](double, const Vec& x) {
      return std::sin(x[0]) * std::cos(x[1]);
    });
    f.with_dt([](double, const Vec&) { return 0.0; })
        .with_grad([](double, const Vec& x) -> Vec {
          Vec g = Vec::Zero(x.size());
          g[0] = std::cos(x[0]) * std::cos(x[1]);
          g[1] = -std::sin(x[0]) * std::sin(x[1]);
          return g;
        })
        .with_hess([](double, const Vec& x) -> Mat {
          Mat H = Mat::Zero(x.size(), x.size());
          H(0, 0) = -std::sin(x[0]) * std::cos(x[1]);
          H(1, 1) = H(0, 0);
          H(0, 1) = -std::cos(x[0]) * std::sin(x[1]);
          H(1, 0) = H(0, 1);
          return H;
        });
    return f;
  }
  if (name == "two_exponential") {
    ScalarField f("two_exponential", [](double t, const Vec& x) {
      return two_exp_parts(t, x[0]).first;
    });
    f.with_dt([](double t, const Vec& x) {
       const double p = two_exp_parts(t, x[0]).second;
       return -0.5 - 1.5 * p;
     })
        .with_grad([](double t, const Vec& x) -> Vec {
          Vec g = Vec::Zero(x.size());
          g[0] = 1.0 + two_exp_parts(t, x[0]).second;
          return g;
        })
        .with_hess([](double t, const Vec& x) -> Mat {
          Mat H = Mat::Zero(x.size(), x.size());
          const double p = two_exp_parts(t, x[0]).second;
          H(0, 0) = p * (1.0 - p);
          return H;
        });
    return f;
  }
  if (name == "constant") {
    const double c = scalar_param(params, "c", 0.0);
    ScalarField f("constant", [c](double, const Vec&) { return c; });
    f.with_dt([](double, const Vec&) { return 0.0; })
        .with_grad([](double, const Vec& x) -> Vec {
          return Vec::Zero(x.size());
        })
        .with_hess([](double, const Vec& x) -> Mat {
          return Mat::Zero(x.size(), x.size());
        });
    return f;
  }
  if (name == "smooth_bump") {
    const double c0 = scalar_param(params, "c0", 0.5);
    const double c1 = scalar_param(params, "c1", 0.2);
    const double c2 = scalar_param(params, "c2", 0.15);
    ScalarField f("smooth_bump", [c0, c1, c2](double t, const Vec& x) {
      const double r = 1.0 + x.squaredNorm();
      return c0 + c1 * std::sin(x[0]) * std::cos(x[1]) * std::exp(-t) +
             c2 * x[0] * x[1] / r;
    });
    f.with_dt([c1](double t, const Vec& x) {
       return -c1 * std::sin(x[0]) * std::cos(x[1]) * std::exp(-t);
     })
        .with_grad([c1, c2](double t, const Vec& x) -> Vec {
          const double e = std::exp(-t);
          const double r = 1.0 + x.squaredNorm();
          const double q = x[0] * x[1];
          Vec dq = Vec::Zero(x.size());
          dq[0] = x[1];
          dq[1] = x[0];
          Vec g = c2 * (dq / r - 2.0 * q * x / (r * r));
          g[0] += c1 * std::cos(x[0]) * std::cos(x[1]) * e;
          g[1] += -c1 * std::sin(x[0]) * std::sin(x[1]) * e;
          return g;
        })
        .with_hess([c1, c2](double t, const Vec& x) -> Mat {
          const auto d = x.size();
          const double e = std::exp(-t);
          const double r = 1.0 + x.squaredNorm();
          const double q = x[0] * x[1];
          Vec dq = Vec::Zero(d);
          dq[0] = x[1];
          dq[1] = x[0];
          Mat ddq = Mat::Zero(d, d);
          ddq(0, 1) = 1.0;
          ddq(1, 0) = 1.0;
          const Mat dq_x = dq * x.transpose();
          Mat H = c2 * (ddq / r - 2.0 * (dq_x + dq_x.transpose()) / (r * r) -
                        2.0 * q * Mat::Identity(d, d) / (r * r) +
                        8.0 * q * (x * x.transpose()) / (r * r * r));
          const double s = std::sin(x[0]) * std::cos(x[1]);
          H(0, 0) += -c1 * s * e;
          H(1, 1) += -c1 * s * e;
          const double m = -c1 * std::cos(x[0]) * std::sin(x[1]) * e;
          H(0, 1) += m;
          H(1, 0) += m;
          return H;
        });
    return f;
  }
  if (name == "log_y_drift") {
    auto check = [](double t, const Vec& x) {
      if (!(x[1] > 0.0)) {
        throw DomainError("log_y_drift requires x2 > 0 at " +
                          format_point(t, x));
      }
    };
    ScalarField f("log_y_drift", [check](double t, const Vec& x) {
      check(t, x);
      return 0.5 * std::log(x[1]) + t / 8.0;
    });
    f.with_dt([](double, const Vec&) { return 0.125; })
        .with_grad([check](double t, const Vec& x) -> Vec {
          check(t, x);
          Vec g = Vec::Zero(x.size());
          g[1] = 0.5 / x[1];
          return g;
        })
        .with_hess([check](double t, const Vec& x) -> Mat {
          check(t, x);
          Mat H = Mat::Zero(x.size(), x.size());
          H(1, 1) = -0.5 / (x[1] * x[1]);
          return H;
        });
    return f;
  }
  if (name == "jump_linear") {
    const double beta = scalar_param(params, "beta", 1.0);
    const double c = scalar_param(params, "c", 0.0);
    Vec a = Vec::Zero(dim);
    a[0] = beta;
    return linear_field("jump_linear", a, -c);
  }
  throw NotFoundError("unknown field '" + name + "'");
}

}  // namespace pathind
