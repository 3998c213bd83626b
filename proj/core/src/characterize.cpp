// SPDX-License-Identifier: Apache-2.0
#include "pathind/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pathind/export.hpp"
#include "pathind/parallel.hpp"

namespace pathind {

// ---------------------------------------------------------------------------
// Domains

EvaluationDomain EvaluationDomain::grid(std::span<const double> times,
                                        const Vec& lower, const Vec& upper,
                                        int resolution) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw ConfigError("domain bounds must be non-empty and of equal length");
  }
  if (resolution < 1) throw ValidationError("domain resolution must be >= 1");
  const auto d = lower.size();
  EvaluationDomain dom;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  auto coord = [&](Eigen::Index i, int j) {
    if (resolution == 1) return 0.5 * (lower[i] + upper[i]);
    return lower[i] + (upper[i] - lower[i]) * j / (resolution - 1);
  };
  for (double t : times) {
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      Vec x(d);
      for (Eigen::Index i = 0; i < d; ++i) x[i] = coord(i, idx[static_cast<std::size_t>(i)]);
      dom.points.push_back({t, std::move(x)});
      Eigen::Index i = 0;
      while (i < d && ++idx[static_cast<std::size_t>(i)] == resolution) {
        idx[static_cast<std::size_t>(i)] = 0;
        ++i;
      }
      if (i == d) break;
    }
  }
  return dom;
}

EvaluationDomain EvaluationDomain::from_paths(std::span<const PathBundle> paths,
                                              int stride) {
  if (stride < 1) throw ValidationError("path stride must be >= 1");
  EvaluationDomain dom;
  for (const auto& p : paths) {
    for (std::size_t k = 0; k < p.states.size(); k += static_cast<std::size_t>(stride)) {
      dom.points.push_back({p.grid.time(static_cast<int>(k)), p.states[k]});
    }
  }
  return dom;
}

void EvaluationDomain::append(const EvaluationDomain& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
}

// ---------------------------------------------------------------------------
// Point-wise residuals

namespace {

struct Geometry {
  Vec b;
  Mat sigma;
  Mat a;  // sigma sigma^*
};

Geometry geometry(const ModelSpec& model, double t, const Vec& x) {
  Geometry g;
  g.b = model.drift(t, x);
  g.sigma = model.diffusion(t, x);
  g.a = g.sigma * g.sigma.transpose();
  return g;
}

double trace_product(const Mat& a, const Mat& h) { return (a * h).trace(); }

}  // namespace

HjbResidual hjb_residual(const ScalarField& v, const ModelSpec& model, double t,
                         const Vec& x) {
  const Geometry g = geometry(model, t, x);
  const Derivatives D = v.derivatives(t, x);
  const double tr = trace_product(g.a, D.hess);
  const double q = (g.sigma.transpose() * D.grad).squaredNorm();
  return {g.a * D.grad - g.b, D.dt + 0.5 * (tr + q)};
}

TransformResidual ftransform_residual(const FTransform& f, const ScalarField& v,
                                      const ModelSpec& model, double t,
                                      const Vec& x) {
  const double s = v.value(t, x);
  f.check_domain(s, format_point(t, x));
  const double f1 = f.d1(s);
  const double f2 = f.d2(s);
  if (f1 == 0.0) {
    throw DomainError("degenerate transform: f'(v) = 0 at " +
                      format_point(t, x));
  }
  const Geometry g = geometry(model, t, x);
  const Derivatives D = v.derivatives(t, x);
  const double tr = trace_product(g.a, D.hess);
  const double q = (g.sigma.transpose() * D.grad).squaredNorm();

  TransformResidual r;
  r.r_grad = f1 * (g.a * D.grad) - g.b;
  r.r_time = f1 * D.dt + 0.5 * ((f1 * tr + f2 * q) + f1 * f1 * q);
  r.r_grad_normalized = r.r_grad / f1;
  r.r_time_normalized = r.r_time / f1;
  return r;
}

NamedCase parse_named_case(const std::string& s) {
  if (s == "a") return NamedCase::a;
  if (s == "b") return NamedCase::b;
  if (s == "b_identity") return NamedCase::b_identity;
  if (s == "c") return NamedCase::c;
  if (s == "d") return NamedCase::d;
  throw NotFoundError("unknown named case '" + s + "'");
}

const char* to_string(NamedCase c) {
  switch (c) {
    case NamedCase::a:
      return "a";
    case NamedCase::b:
      return "b";
    case NamedCase::b_identity:
      return "b_identity";
    case NamedCase::c:
      return "c";
    case NamedCase::d:
      return "d";
  }
  return "?";
}

FTransform transform_for(NamedCase c, int k) {
  switch (c) {
    case NamedCase::a:
      return FTransform::identity();
    case NamedCase::b:
    case NamedCase::b_identity:
      return FTransform::log();
    case NamedCase::c:
      return FTransform::odd_power(k);
    case NamedCase::d:
      return FTransform::tan();
  }
  throw NotFoundError("unknown named case");
}

HjbResidual named_residual(NamedCase c, const ScalarField& v,
                           const ModelSpec& model, double t, const Vec& x,
                           int k) {
  const double s = v.value(t, x);
  const Geometry g = geometry(model, t, x);
  const Derivatives D = v.derivatives(t, x);
  const Vec agrad = g.a * D.grad;
  const double tr = trace_product(g.a, D.hess);
  const double q = (g.sigma.transpose() * D.grad).squaredNorm();
  const std::string where = format_point(t, x);

  switch (c) {
    case NamedCase::a:
      return {agrad - g.b, D.dt + 0.5 * (tr + q)};
    case NamedCase::b:
      if (!(s > 0.0)) throw DomainError("case b needs v > 0 at " + where);
      return {agrad - s * g.b, D.dt + 0.5 * tr};
    case NamedCase::b_identity: {
      const bool identity = g.sigma.rows() == g.sigma.cols() &&
                            g.sigma.isApprox(Mat::Identity(g.sigma.rows(), g.sigma.cols()), 0.0);
      if (!identity) {
        throw ConfigError("case b_identity needs sigma = Id at " + where);
      }
      if (!(s > 0.0)) throw DomainError("case b needs v > 0 at " + where);
      return {D.grad - s * g.b, D.dt + 0.5 * D.hess.trace()};
    }
    case NamedCase::c: {
      const int n = 2 * k + 1;
      double coef = 1.0;
      if (k != 0) {
        if (s == 0.0) throw DomainError("case c needs v != 0 at " + where);
        coef = (n * std::pow(s, n) + 2.0 * k) / s;
      }
      return {n * std::pow(s, n - 1) * agrad - g.b, D.dt + 0.5 * (tr + coef * q)};
    }
    case NamedCase::d: {
      if (!(std::abs(s) < std::numbers::pi / 2.0)) {
        throw DomainError("case d needs |v| < pi/2 at " + where);
      }
      const double cs = std::cos(s);
      const double sn = std::sin(s);
      const double coef = (cs + sn) * (cs + sn) / (cs * cs);
      return {agrad - cs * cs * g.b, D.dt + 0.5 * (tr + coef * q)};
    }
  }
  throw NotFoundError("unknown named case");
}

HjbResidual printed_counterpart(NamedCase c, const TransformResidual& r) {
  switch (c) {
    case NamedCase::a:
      return {r.r_grad, r.r_time};
    case NamedCase::c:
      return {r.r_grad, r.r_time_normalized};
    case NamedCase::b:
    case NamedCase::b_identity:
    case NamedCase::d:
      return {r.r_grad_normalized, r.r_time_normalized};
  }
  throw NotFoundError("unknown named case");
}

double pide_residual(const ScalarField& v, const ModelSpec& model, double t,
                     const Vec& x) {
  const Geometry g = geometry(model, t, x);
  const Derivatives D = v.derivatives(t, x);
  const double tr = trace_product(g.a, D.hess);
  const double q = (g.sigma.transpose() * D.grad).squaredNorm();
  double jump_sum = 0.0;
  if (model.has_jumps()) {
    const double v0 = v.value(t, x);
    const auto& atoms = model.jump->atoms;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const Vec f = model.jump->jump_coeff(t, x, atoms[i].mark);
      const double e = std::exp(v.value(t, x + f) - v0);
      if (!std::isfinite(e)) {
        throw NumericError("exp(v(x+f) - v(x)) overflowed for atom " +
                           std::to_string(i) + " at " + format_point(t, x));
      }
      jump_sum += (e - 1.0 - f.dot(D.grad) * e) * atoms[i].weight;
    }
  }
  return (D.dt + 0.5 * (tr + q)) + jump_sum;
}

LambdaConsistency lambda_consistency(const ScalarField& v,
                                     const ModelSpec& model, double t,
                                     const Vec& x) {
  LambdaConsistency out;
  if (!model.has_jumps()) return out;
  const double v0 = v.value(t, x);
  for (const auto& atom : model.jump->atoms) {
    const Vec f = model.jump->jump_coeff(t, x, atom.mark);
    const double implied = std::exp(v.value(t, x + f) - v0);
    out.implied_lambda.push_back(implied);
    out.residual.push_back(model.jump->lambda(t, atom.mark) - implied);
    if (implied > 1.0) out.implied_in_range = false;
  }
  return out;
}

GammaConsistency gamma_consistency(const ScalarField& v, const ModelSpec& model,
                                   double t, const Vec& x) {
  const Mat sigma = model.diffusion(t, x);
  const Vec gamma = model.gamma(t, x);
  const Vec grad = v.grad(t, x);
  GammaConsistency out;
  out.r_star = gamma - sigma.transpose() * grad;
  if (model.d == model.m) {
    out.r_star_star = gamma - sigma * (sigma.transpose() * grad);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integrability of gamma

namespace {

std::optional<Vec> solve_candidate(const ModelSpec& model, double t,
                                   const Vec& x) {
  const Mat st = model.diffusion(t, x).transpose();
  Eigen::FullPivLU<Mat> lu(st);
  if (!lu.isInvertible()) return std::nullopt;
  return Vec(lu.solve(model.gamma(t, x)));
}

}  // namespace

CurlReport gamma_integrability_check(const ModelSpec& model,
                                     const EvaluationDomain& domain, double h) {
  if (model.d != model.m) {
    throw ConfigError("integrability check needs d == m");
  }
  if (domain.empty()) throw ValidationError("evaluation domain is empty");
  if (!(h > 0.0)) throw ConfigError("curl step must be positive");
  const auto d = model.d;
  CurlReport rep;
  rep.step = h;
  for (const auto& p : domain.points) {
    CurlPoint cp;
    cp.t = p.t;
    cp.x = p.x;
    cp.defect = Mat::Zero(d, d);
    auto g0 = solve_candidate(model, p.t, p.x);
    if (!g0) {
      cp.skipped = true;
      cp.reason = "sigma^* singular";
    } else {
      cp.candidate_gradient = *g0;
      // jac(i, j) = d_i g_j
      Mat jac = Mat::Zero(d, d);
      for (int i = 0; i < d && !cp.skipped; ++i) {
        Vec xp = p.x, xm = p.x;
        xp[i] += h;
        xm[i] -= h;
        auto gp = solve_candidate(model, p.t, xp);
        auto gm = solve_candidate(model, p.t, xm);
        if (!gp || !gm) {
          cp.skipped = true;
          cp.reason = "sigma^* singular on the stencil";
          break;
        }
        jac.row(i) = ((*gp - *gm) / (2.0 * h)).transpose();
      }
      if (!cp.skipped) {
        cp.defect = jac - jac.transpose();
        cp.magnitude = cp.defect.cwiseAbs().maxCoeff();
      }
    }
    if (cp.skipped) {
      ++rep.skipped;
    } else if (cp.magnitude > rep.max_defect) {
      rep.max_defect = cp.magnitude;
      rep.worst_index = rep.points.size();
    }
    rep.points.push_back(std::move(cp));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Domain evaluation

ResidualOperator ResidualOperator::parse(const std::string& name) {
  ResidualOperator op;
  if (name == "hjb") {
    op.kind = Kind::hjb;
  } else if (name == "ftransform") {
    op.kind = Kind::ftransform;
  } else if (name == "named") {
    op.kind = Kind::named;
  } else if (name == "jump" || name == "pide") {
    op.kind = Kind::jump;
  } else {
    throw NotFoundError("unknown residual operator '" + name + "'");
  }
  return op;
}

std::string ResidualOperator::label() const {
  switch (kind) {
    case Kind::hjb:
      return "hjb";
    case Kind::ftransform:
      return "ftransform:" + (transform ? transform->name() : std::string("?"));
    case Kind::named:
      return std::string("named:") + to_string(named);
    case Kind::jump:
      return "jump";
  }
  return "?";
}

double default_residual_tolerance(const ScalarField& v) {
  return v.fully_analytic() ? 1e-10 : 1e-6;
}

namespace {

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

ResidualRecord evaluate_point(const ResidualOperator& op, const ScalarField& v,
                              const ModelSpec& model, const DomainPoint& p) {
  ResidualRecord rec;
  rec.t = p.t;
  rec.x = p.x;
  try {
    switch (op.kind) {
      case ResidualOperator::Kind::hjb: {
        auto r = hjb_residual(v, model, p.t, p.x);
        rec.r_grad = r.r_grad;
        rec.r_time = r.r_time;
        rec.r_gamma = gamma_consistency(v, model, p.t, p.x).r_star;
        break;
      }
      case ResidualOperator::Kind::ftransform: {
        if (!op.transform) throw ConfigError("ftransform operator needs a transform");
        auto r = ftransform_residual(*op.transform, v, model, p.t, p.x);
        rec.r_grad = r.r_grad;
        rec.r_time = r.r_time;
        break;
      }
      case ResidualOperator::Kind::named: {
        auto r = named_residual(op.named, v, model, p.t, p.x, op.k);
        rec.r_grad = r.r_grad;
        rec.r_time = r.r_time;
        break;
      }
      case ResidualOperator::Kind::jump: {
        auto r = hjb_residual(v, model, p.t, p.x);
        rec.r_grad = r.r_grad;
        rec.r_gamma = gamma_consistency(v, model, p.t, p.x).r_star;
        rec.r_lambda = lambda_consistency(v, model, p.t, p.x).residual;
        rec.r_jump = pide_residual(v, model, p.t, p.x);
        break;
      }
    }
  } catch (const Error& e) {
    rec.error = e.what();
    return rec;
  }
  double mag = 0.0;
  if (rec.r_grad) mag = std::max(mag, inf_norm(*rec.r_grad));
  if (rec.r_time) mag = std::max(mag, std::abs(*rec.r_time));
  if (rec.r_jump) mag = std::max(mag, std::abs(*rec.r_jump));
  for (double l : rec.r_lambda) mag = std::max(mag, std::abs(l));
  if (rec.r_gamma) mag = std::max(mag, inf_norm(*rec.r_gamma));
  rec.magnitude = std::isnan(mag) ? std::numeric_limits<double>::infinity() : mag;
  return rec;
}

void bump(std::optional<double>& slot, double value) {
  slot = std::max(slot.value_or(0.0), value);
}

}  // namespace

ResidualReport evaluate_on_domain(const ResidualOperator& op,
                                  const ScalarField& v, const ModelSpec& model,
                                  const EvaluationDomain& domain, double tol,
                                  int workers) {
  if (domain.empty()) throw ValidationError("evaluation domain is empty");
  ResidualReport rep;
  rep.op = op.label();
  rep.tol = tol;
  rep.records.resize(domain.points.size());
  parallel_for(domain.points.size(), workers, [&](std::size_t i) {
    rep.records[i] = evaluate_point(op, v, model, domain.points[i]);
  });

  // worst point: largest residual, or the first failing point if none succeeded
  bool any_success = false;
  std::optional<std::size_t> first_error;
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& r = rep.records[i];
    if (!r.error.empty()) {
      ++rep.error_count;
      if (!first_error) first_error = i;
      continue;
    }
    if (r.r_grad) bump(rep.sup_grad, inf_norm(*r.r_grad));
    if (r.r_time) bump(rep.sup_time, std::abs(*r.r_time));
    if (r.r_jump) bump(rep.sup_jump, std::abs(*r.r_jump));
    for (double l : r.r_lambda) bump(rep.sup_lambda, std::abs(l));
    if (r.r_gamma) bump(rep.sup_gamma, inf_norm(*r.r_gamma));
    if (!any_success || r.magnitude > rep.sup_all) {
      rep.sup_all = r.magnitude;
      rep.worst_index = i;
      any_success = true;
    }
  }
  if (!any_success && first_error) rep.worst_index = *first_error;
  rep.pass = rep.error_count == 0 && rep.sup_all <= tol;
  return rep;
}

void write_residuals_csv(std::ostream& os, const ResidualReport& rep) {
  if (rep.records.empty()) return;
  // column layout follows the first successful record
  const ResidualRecord* proto = &rep.records.front();
  for (const auto& r : rep.records) {
    if (r.error.empty()) {
      proto = &r;
      break;
    }
  }
  const auto d = proto->x.size();
  const auto ng = proto->r_grad ? proto->r_grad->size() : 0;
  const auto nl = proto->r_lambda.size();
  const auto nm = proto->r_gamma ? proto->r_gamma->size() : 0;

  os << "t";
  for (Eigen::Index i = 0; i < d; ++i) os << ",x_" << i + 1;
  for (Eigen::Index i = 0; i < ng; ++i) os << ",r_grad_" << i + 1;
  if (proto->r_time) os << ",r_time";
  if (proto->r_jump) os << ",r_jump";
  for (std::size_t i = 0; i < nl; ++i) os << ",r_lambda_" << i + 1;
  for (Eigen::Index i = 0; i < nm; ++i) os << ",r_gamma_" << i + 1;
  os << ",error\n";

  auto cell = [&](bool present, double value) {
    os << ',' << (present ? csv_number(value) : std::string());
  };
  for (const auto& r : rep.records) {
    os << csv_number(r.t);
    for (Eigen::Index i = 0; i < d; ++i) os << ',' << csv_number(r.x[i]);
    for (Eigen::Index i = 0; i < ng; ++i) cell(r.r_grad.has_value(), r.r_grad ? (*r.r_grad)[i] : 0.0);
    if (proto->r_time) cell(r.r_time.has_value(), r.r_time.value_or(0.0));
    if (proto->r_jump) cell(r.r_jump.has_value(), r.r_jump.value_or(0.0));
    for (std::size_t i = 0; i < nl; ++i) cell(i < r.r_lambda.size(), i < r.r_lambda.size() ? r.r_lambda[i] : 0.0);
    for (Eigen::Index i = 0; i < nm; ++i) cell(r.r_gamma.has_value(), r.r_gamma ? (*r.r_gamma)[i] : 0.0);
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << ',' << err << '\n';
  }
}

namespace {

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const ResidualReport& rep) {
  nlohmann::json j;
  j["operator"] = rep.op;
  j["points"] = rep.records.size();
  j["errors"] = rep.error_count;
  j["tolerance"] = rep.tol;
  j["pass"] = rep.pass;
  j["sup"] = {{"grad", optional_json(rep.sup_grad)},
              {"time", optional_json(rep.sup_time)},
              {"jump", optional_json(rep.sup_jump)},
              {"lambda", optional_json(rep.sup_lambda)},
              {"gamma", optional_json(rep.sup_gamma)},
              {"all", rep.sup_all}};
  if (!rep.records.empty()) {
    const auto& w = rep.records[rep.worst_index];
    j["worst_point"] = {{"index", rep.worst_index},
                        {"t", w.t},
                        {"x", vec_json(w.x)},
                        {"magnitude", w.magnitude},
                        {"error", w.error}};
  }
  return j;
}

void write_curl_csv(std::ostream& os, const CurlReport& rep) {
  if (rep.points.empty()) return;
  const auto d = rep.points.front().x.size();
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i) os << ",x_" << i + 1;
  for (Eigen::Index i = 0; i < d; ++i) os << ",g_" << i + 1;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) os << ",c_" << i + 1 << j + 1;
  }
  os << ",magnitude,skipped\n";
  for (const auto& p : rep.points) {
    os << csv_number(p.t);
    for (Eigen::Index i = 0; i < d; ++i) os << ',' << csv_number(p.x[i]);
    for (Eigen::Index i = 0; i < d; ++i) {
      os << ',' << (p.skipped ? std::string() : csv_number(p.candidate_gradient[i]));
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) {
        os << ',' << (p.skipped ? std::string() : csv_number(p.defect(i, j)));
      }
    }
    os << ',' << csv_number(p.magnitude) << ',' << (p.skipped ? 1 : 0) << '\n';
  }
}

nlohmann::json to_json(const CurlReport& rep) {
  nlohmann::json j;
  j["points"] = rep.points.size();
  j["skipped"] = rep.skipped;
  j["max_defect"] = rep.max_defect;
  j["step"] = rep.step;
  if (!rep.points.empty()) {
    const auto& w = rep.points[rep.worst_index];
    j["worst_point"] = {{"t", w.t}, {"x", vec_json(w.x)}, {"magnitude", w.magnitude}};
  }
  return j;
}

}  // namespace pathind
