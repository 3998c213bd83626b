// SPDX-License-Identifier: Apache-2.0
#include "pathind/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace pathind {

double JumpSpec::total_mass() const {
  double mass = 0.0;
  for (const auto& atom : atoms) mass += atom.weight;
  return mass;
}

void JumpSpec::validate(std::span<const double> probe_times) const {
  const double mass = total_mass();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ValidationError("jump measure must have finite positive mass");
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i].weight > 0.0)) {
      throw ValidationError("jump atom " + std::to_string(i) +
                            " has non-positive weight");
    }
    for (double t : probe_times) {
      const double l = lambda(t, atoms[i].mark);
      if (!(l > 0.0 && l <= 1.0)) {
        std::ostringstream os;
        os << "lambda(t=" << t << ", atom " << i << ") = " << l
           << " outside (0, 1]";
        throw ValidationError(os.str());
      }
    }
  }
}

void ModelSpec::check_at(double t, const Vec& x) const {
  if (x.size() != d) {
    throw ConfigError("model '" + name + "' has dimension " +
                      std::to_string(d) + ", state has " +
                      std::to_string(x.size()));
  }
  const Vec b = drift(t, x);
  const Mat s = diffusion(t, x);
  const Vec g = gamma(t, x);
  if (b.size() != d || s.rows() != d || s.cols() != m || g.size() != m) {
    throw ConfigError("model '" + name + "' coefficient shapes inconsistent at " +
                      format_point(t, x));
  }
  if (!b.allFinite() || !s.allFinite() || !g.allFinite()) {
    throw NumericError("model '" + name + "' coefficients non-finite at " +
                       format_point(t, x));
  }
}

Vec drift_image_residual(const ModelSpec& model, double t, const Vec& x) {
  const Mat s = model.diffusion(t, x);
  const Vec g = model.gamma(t, x);
  if (s.cols() != g.size()) {
    throw ConfigError("diffusion has " + std::to_string(s.cols()) +
                      " columns but gamma has " + std::to_string(g.size()) +
                      " entries");
  }
  return model.drift(t, x) - s * g;
}

namespace {

struct CatalogEntry {
  std::string name;
  std::string description;
};

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"gruschin", "Gruschin operator, sigma = diag(1, x^k), gamma = (-xt, -yt)"},
      {"kohn", "Heisenberg group (Kohn Laplacian), printed drift; b not in Im(sigma)"},
      {"kohn_corrected", "Heisenberg group with drift (xt, yt, 0) so b = sigma gamma"},
      {"degenerate_exp", "X = (B1, exp(B2)); non-Hormander, gamma = (0, 1/2) 1_{y>0}"},
      {"heat_kernel", "sigma = Id, b = gamma = a; v = <a,x> - |a|^2 t / 2"},
      {"two_exponential", "Gruschin diffusion, Hopf-Cole drift from exp(x-t/2)+exp(2x-2t)"},
      {"manufactured_jump", "1-D diffusion with atomic jumps; exact linear v"},
      {"pure_jump", "1-D pure-jump model (sigma = 0, b = 0); exact linear v"},
  };
  return entries;
}

double ipow(double s, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= s;
  return r;
}

class ParamReader {
 public:
  ParamReader(const std::string& model, const Params& params,
              std::set<std::string> allowed)
      : model_(model), params_(params) {
    allowed.insert("x0");
    for (const auto& [key, value] : params) {
      if (!allowed.count(key)) {
        throw ValidationError("model '" + model + "' has no parameter '" +
                              key + "'");
      }
      for (double v : value) {
        if (!std::isfinite(v)) {
          throw ValidationError("parameter '" + key + "' must be finite");
        }
      }
    }
  }

  double scalar(const std::string& key, double fallback) {
    auto it = params_.find(key);
    const double v = it == params_.end() ? fallback : one(key, it->second);
    resolved_[key] = {v};
    return v;
  }

  int positive_int(const std::string& key, int fallback) {
    const double v = scalar(key, fallback);
    if (v != std::floor(v) || v < 1.0 || v > 64.0) {
      throw ValidationError("model '" + model_ + "': parameter '" + key +
                            "' must be a positive integer");
    }
    return static_cast<int>(v);
  }

  std::vector<double> vector(const std::string& key,
                             std::vector<double> fallback) {
    auto it = params_.find(key);
    std::vector<double> v = it == params_.end() ? fallback : it->second;
    if (v.empty()) {
      throw ValidationError("model '" + model_ + "': parameter '" + key +
                            "' must be non-empty");
    }
    resolved_[key] = v;
    return v;
  }

  Vec x0(Vec fallback) {
    auto it = params_.find("x0");
    if (it == params_.end()) {
      resolved_["x0"] = {fallback.data(), fallback.data() + fallback.size()};
      return fallback;
    }
    if (static_cast<Eigen::Index>(it->second.size()) != fallback.size()) {
      throw ValidationError("model '" + model_ + "': x0 must have " +
                            std::to_string(fallback.size()) + " entries");
    }
    resolved_["x0"] = it->second;
    return Eigen::Map<const Vec>(it->second.data(), fallback.size());
  }

  const Params& resolved() const { return resolved_; }

 private:
  double one(const std::string& key, const std::vector<double>& v) const {
    if (v.size() != 1) {
      throw ValidationError("model '" + model_ + "': parameter '" + key +
                            "' must be a scalar");
    }
    return v[0];
  }

  std::string model_;
  const Params& params_;
  Params resolved_;
};

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

ModelSpec gruschin(const Params& params) {
  ParamReader r("gruschin", params, {"k"});
  const int k = r.positive_int("k", 1);
  ModelSpec s;
  s.name = "gruschin";
  s.d = s.m = 2;
  s.drift = [k](double t, const Vec& z) {
    return vec2(-z[0] * t, -ipow(z[0], k) * z[1] * t);
  };
  s.diffusion = [k](double, const Vec& z) -> Mat {
    Mat sig = Mat::Zero(2, 2);
    sig(0, 0) = 1.0;
    sig(1, 1) = ipow(z[0], k);
    return sig;
  };
  s.gamma = [](double t, const Vec& z) { return vec2(-z[0] * t, -z[1] * t); };
  s.notes =
      "gamma admits no potential: sigma^* grad v = gamma has a nonzero curl "
      "obstruction; the shipped two_exponential field is a candidate only";
  s.reference = builtin_field("two_exponential");
  s.default_x0 = r.x0(vec2(1.0, 1.0));
  s.params = r.resolved();
  return s;
}

Mat kohn_sigma(const Vec& u) {
  Mat sig = Mat::Zero(3, 3);
  sig(0, 0) = 1.0;
  sig(1, 1) = 1.0;
  sig(2, 0) = -u[1] / 2.0;
  sig(2, 1) = u[0] / 2.0;
  return sig;
}

ModelSpec kohn(const Params& params, bool corrected) {
  ParamReader r(corrected ? "kohn_corrected" : "kohn", params, {});
  ModelSpec s;
  s.name = corrected ? "kohn_corrected" : "kohn";
  s.d = s.m = 3;
  if (corrected) {
    s.drift = [](double t, const Vec& u) { return vec3(u[0] * t, u[1] * t, 0.0); };
    s.notes = "third drift component set to 0 so that b = sigma gamma";
  } else {
    s.drift = [](double t, const Vec& u) {
      return vec3(u[0] * t, u[1] * t, u[2] * (u[0] - u[1]) / 2.0 * t);
    };
    s.drift_in_image = false;
    s.notes =
        "printed drift: third component z(x-y)t/2 is not in Im(sigma) since "
        "the third entry of sigma gamma is -xyt/2 + xyt/2 = 0";
  }
  s.diffusion = [](double, const Vec& u) { return kohn_sigma(u); };
  s.gamma = [](double t, const Vec& u) { return vec3(u[0] * t, u[1] * t, u[2] * t); };
  s.default_x0 = r.x0(vec3(1.0, 2.0, 3.0));
  s.params = r.resolved();
  return s;
}

ModelSpec degenerate_exp(const Params& params) {
  ParamReader r("degenerate_exp", params, {});
  ModelSpec s;
  s.name = "degenerate_exp";
  s.d = s.m = 2;
  s.drift = [](double, const Vec& z) {
    return vec2(0.0, 0.5 * std::max(z[1], 0.0));
  };
  s.diffusion = [](double, const Vec& z) -> Mat {
    Mat sig = Mat::Zero(2, 2);
    sig(0, 0) = 1.0;
    sig(1, 1) = std::max(z[1], 0.0);
    return sig;
  };
  s.gamma = [](double, const Vec& z) {
    return vec2(0.0, z[1] > 0.0 ? 0.5 : 0.0);
  };
  s.notes =
      "gamma = (0, 1/2) 1_{y>0} is the forced solution of sigma gamma = b on "
      "{y > 0}; reference v = log(y)/2 + t/8";
  s.reference = builtin_field("log_y_drift");
  s.default_x0 = r.x0(vec2(0.0, 1.0));
  s.params = r.resolved();
  return s;
}

ModelSpec heat_kernel(const Params& params) {
  ParamReader r("heat_kernel", params, {"a"});
  const auto av = r.vector("a", {1.0, 0.0});
  const Vec a = Eigen::Map<const Vec>(av.data(), static_cast<Eigen::Index>(av.size()));
  const auto d = static_cast<int>(a.size());
  ModelSpec s;
  s.name = "heat_kernel";
  s.d = s.m = d;
  s.drift = [a](double, const Vec&) -> Vec { return a; };
  s.diffusion = [d](double, const Vec&) -> Mat { return Mat::Identity(d, d); };
  s.gamma = [a](double, const Vec&) -> Vec { return a; };
  s.reference = builtin_field("heat_linear", {{"a", av}}, d);
  s.default_x0 = r.x0(Vec::Zero(d));
  s.params = r.resolved();
  return s;
}

ModelSpec two_exponential(const Params& params) {
  ParamReader r("two_exponential", params, {"k"});
  const int k = r.positive_int("k", 1);
  const ScalarField v = builtin_field("two_exponential");
  ModelSpec s;
  s.name = "two_exponential";
  s.d = s.m = 2;
  // b = sigma sigma^* grad v and gamma = sigma^* grad v; only the first
  // gradient component is nonzero and sigma_11 = 1.
  s.drift = [v](double t, const Vec& z) { return vec2(v.grad(t, z)[0], 0.0); };
  s.diffusion = [k](double, const Vec& z) -> Mat {
    Mat sig = Mat::Zero(2, 2);
    sig(0, 0) = 1.0;
    sig(1, 1) = ipow(z[0], k);
    return sig;
  };
  s.gamma = [v](double t, const Vec& z) { return vec2(v.grad(t, z)[0], 0.0); };
  s.notes = "w = exp(v) solves d_t w = -Tr[sigma sigma^* hess w] / 2";
  s.reference = v;
  s.default_x0 = r.x0(vec2(0.0, 1.0));
  s.params = r.resolved();
  return s;
}

ModelSpec jump_model(const Params& params, bool with_diffusion) {
  const std::string name = with_diffusion ? "manufactured_jump" : "pure_jump";
  ParamReader r(name, params, {"beta", "marks", "weights", "lambda_scale"});
  const double beta = r.scalar("beta", 1.0);
  const auto marks = r.vector("marks", {-1.0});
  const auto weights = r.vector("weights", std::vector<double>(marks.size(), 1.0));
  const double scale = r.scalar("lambda_scale", 1.0);
  if (marks.size() != weights.size()) {
    throw ValidationError(name + ": marks and weights differ in length");
  }

  JumpSpec jump;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    Vec u(1);
    u[0] = marks[i];
    jump.atoms.push_back({u, weights[i]});
  }
  jump.jump_coeff = [](double, const Vec&, const Vec& u) -> Vec { return u; };
  jump.lambda = [beta, scale](double, const Vec& u) {
    return scale * std::exp(beta * u[0]);
  };
  const double probe_t[] = {0.0};
  jump.validate(probe_t);

  // d_t v = -sigma^2 beta^2 / 2 - sum_i (e^{beta u} - 1 - beta u e^{beta u}) nu_i
  double c = with_diffusion ? 0.5 * beta * beta : 0.0;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const double e = std::exp(beta * marks[i]);
    c += (e - 1.0 - beta * marks[i] * e) * weights[i];
  }

  ModelSpec s;
  s.name = name;
  s.d = s.m = 1;
  const double sig = with_diffusion ? 1.0 : 0.0;
  s.drift = [beta, sig](double, const Vec&) { return Vec::Constant(1, sig * sig * beta); };
  s.diffusion = [sig](double, const Vec&) { return Mat::Constant(1, 1, sig); };
  s.gamma = [beta, sig](double, const Vec&) { return Vec::Constant(1, sig * beta); };
  s.jump = std::move(jump);
  s.reference = builtin_field("jump_linear", {{"beta", {beta}}, {"c", {c}}}, 1);
  std::ostringstream notes;
  notes.precision(17);
  notes << "lambda(t,u) = " << scale << " exp(beta u); reference v = beta x - "
        << c << " t";
  if (scale != 1.0) notes << " (lambda perturbed: identity deliberately broken)";
  s.notes = notes.str();
  s.default_x0 = r.x0(Vec::Zero(1));
  s.params = r.resolved();
  return s;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : catalog()) out.push_back(e.name);
    return out;
  }();
  return names;
}

std::string builtin_description(const std::string& name) {
  for (const auto& e : catalog()) {
    if (e.name == name) return e.description;
  }
  throw NotFoundError("unknown model '" + name + "'");
}

ModelSpec builtin(const std::string& name, const Params& params) {
  if (name == "gruschin") return gruschin(params);
  if (name == "kohn") return kohn(params, false);
  if (name == "kohn_corrected") return kohn(params, true);
  if (name == "degenerate_exp") return degenerate_exp(params);
  if (name == "heat_kernel") return heat_kernel(params);
  if (name == "two_exponential") return two_exponential(params);
  if (name == "manufactured_jump") return jump_model(params, true);
  if (name == "pure_jump") return jump_model(params, false);
  throw NotFoundError("unknown model '" + name + "'");
}

double default_kappa(double r) {
  if (r < 1.0) return std::max(1.0, std::log(1.0 / r));
  return 1.0;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

namespace {

Verdict judge(double estimate, bool sampled, double bound) {
  if (!sampled) return Verdict::inconclusive;
  if (!std::isfinite(estimate) || estimate > bound) return Verdict::fail;
  return Verdict::pass;
}

double growth_quotient(const ModelSpec& model, double t, const Vec& x) {
  const double denom = (1.0 + x.norm()) * (1.0 + x.norm());
  return (model.drift(t, x).squaredNorm() +
          model.diffusion(t, x).squaredNorm()) /
         denom;
}

double jump_moment(const ModelSpec& model, double t, const Vec& x, int q) {
  double acc = 0.0;
  for (const auto& atom : model.jump->atoms) {
    acc += std::pow(model.jump->jump_coeff(t, x, atom.mark).norm(), q) *
           atom.weight;
  }
  return acc / std::pow(1.0 + x.norm(), q);
}

}  // namespace

HypothesisProbeReport hypothesis_probe(const ModelSpec& model,
                                       std::span<const ProbePoint> probes,
                                       const ProbeSettings& settings) {
  HypothesisProbeReport rep;
  bool h1_sampled = false;
  for (const auto& p : probes) {
    for (const Vec* z : {&p.x, &p.y}) {
      rep.lambda1_est = std::max(rep.lambda1_est, growth_quotient(model, p.t, *z));
      if (model.has_jumps()) {
        rep.hf_q2 = std::max(rep.hf_q2, jump_moment(model, p.t, *z, 2));
        rep.hf_q4 = std::max(rep.hf_q4, jump_moment(model, p.t, *z, 4));
      }
    }
    ++rep.sample_count;

    const Vec diff = p.x - p.y;
    const double r = diff.norm();
    if (r == 0.0) {
      ++rep.skipped_pairs;
      continue;
    }
    const double kappa = settings.kappa(r);
    rep.kappa_profile.emplace_back(r, kappa);
    const double denom = r * r * kappa;
    const double num =
        2.0 * diff.dot(model.drift(p.t, p.x) - model.drift(p.t, p.y)) +
        (model.diffusion(p.t, p.x) - model.diffusion(p.t, p.y)).squaredNorm();
    rep.lambda0_est = std::max(rep.lambda0_est, num / denom);
    h1_sampled = true;
    if (model.has_jumps()) {
      double acc = 0.0;
      for (const auto& atom : model.jump->atoms) {
        acc += (model.jump->jump_coeff(p.t, p.x, atom.mark) -
                model.jump->jump_coeff(p.t, p.y, atom.mark))
                   .squaredNorm() *
               atom.weight;
      }
      rep.hf_lipschitz = std::max(rep.hf_lipschitz, acc / denom);
    }
  }
  std::sort(rep.kappa_profile.begin(), rep.kappa_profile.end());

  const bool any = rep.sample_count > 0;
  rep.h1 = judge(rep.lambda0_est, h1_sampled, settings.max_constant);
  rep.h2 = judge(rep.lambda1_est, any, settings.max_constant);
  if (model.has_jumps()) {
    const Verdict growth = judge(std::max(rep.hf_q2, rep.hf_q4), any,
                                 settings.max_constant);
    // Lipschitz part is bounded by 2 |lambda_0| times the same modulus.
    Verdict lip = Verdict::inconclusive;
    if (h1_sampled) {
      lip = rep.hf_lipschitz <= 2.0 * std::abs(rep.lambda0_est) + 1e-12
                ? Verdict::pass
                : Verdict::fail;
    }
    rep.hf = (growth == Verdict::fail || lip == Verdict::fail) ? Verdict::fail
             : (growth == Verdict::pass && lip != Verdict::fail)
                 ? Verdict::pass
                 : Verdict::inconclusive;
  }
  return rep;
}

}  // namespace pathind
