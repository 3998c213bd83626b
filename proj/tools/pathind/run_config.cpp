// SPDX-License-Identifier: Apache-2.0
#include "run_config.hpp"

#include <cmath>
#include <set>

#include "pathind/characterize.hpp"
#include "pathind/export.hpp"
#include "pathind/model.hpp"

namespace pathind::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

/// Reads one JSON object, remembering which keys were consumed so leftovers
/// can be reported.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
    doc_ = &doc;
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!doc_) return nullptr;
    auto it = doc_->find(key);
    if (it == doc_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string key(const std::string& k) const { return join(path_, k); }

  double number(const std::string& k, double fallback) {
    const json* v = get(k);
    if (!v) return fallback;
    return as_number(*v, key(k));
  }

  std::optional<double> optional_number(const std::string& k) {
    const json* v = get(k);
    if (!v) return std::nullopt;
    return as_number(*v, key(k));
  }

  long long integer(const std::string& k, long long fallback) {
    const json* v = get(k);
    if (!v) return fallback;
    if (!v->is_number_integer()) bad(key(k), "expected an integer");
    return v->get<long long>();
  }

  std::string string(const std::string& k, std::string fallback) {
    const json* v = get(k);
    if (!v) return fallback;
    if (!v->is_string()) bad(key(k), "expected a string");
    return v->get<std::string>();
  }

  bool boolean(const std::string& k, bool fallback) {
    const json* v = get(k);
    if (!v) return fallback;
    if (!v->is_boolean()) bad(key(k), "expected true or false");
    return v->get<bool>();
  }

  std::vector<double> numbers(const std::string& k, std::vector<double> fallback) {
    const json* v = get(k);
    if (!v) return fallback;
    return as_numbers(*v, key(k));
  }

  void finish() const {
    if (!doc_) return;
    for (auto it = doc_->begin(); it != doc_->end(); ++it) {
      if (!seen_.count(it.key())) bad(key(it.key()), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) bad(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(where, "expected a finite number");
    return x;
  }

  static std::vector<double> as_numbers(const json& v, const std::string& where) {
    if (v.is_number()) return {as_number(v, where)};
    if (!v.is_array()) bad(where, "expected a number or an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

 private:
  const json* doc_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

const json& child(const json& doc, const std::string& key) {
  static const json null;
  if (!doc.is_object()) return null;
  auto it = doc.find(key);
  return it == doc.end() ? null : *it;
}

Params read_params(const json& v, const std::string& where) {
  Params p;
  if (v.is_null()) return p;
  if (!v.is_object()) bad(where, "expected an object");
  for (auto it = v.begin(); it != v.end(); ++it) {
    p[it.key()] = Section::as_numbers(it.value(), join(where, it.key()));
  }
  return p;
}

json params_json(const Params& p) {
  json j = json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

int positive(long long v, const std::string& where) {
  if (v < 1 || v > 1'000'000'000) bad(where, "expected a positive integer");
  return static_cast<int>(v);
}

}  // namespace

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("--set: empty key in '" + path + "'");
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) {
      throw ConfigError(path.substr(0, start ? start - 1 : 0) +
                        ": cannot set a key inside a non-object");
    }
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig parse_config(const json& doc) {
  RunConfig c;
  Section root(doc, "");

  // model
  {
    Section s(child(doc, "model"), "model");
    root.get("model");
    c.model.name = s.string("name", "");
    c.model.params = read_params(s.get("params") ? *s.get("params") : json(), "model.params");
    if (const json* x0 = s.get("x0")) {
      c.model.params["x0"] = Section::as_numbers(*x0, "model.x0");
    }
    s.finish();
    if (c.model.name.empty()) bad("model.name", "required");
  }
  ModelSpec model;
  try {
    model = builtin(c.model.name, c.model.params);
  } catch (const NotFoundError& e) {
    bad("model.name", e.what());
  } catch (const ValidationError& e) {
    bad("model.params", e.what());
  }

  // field
  if (root.get("field")) {
    Section s(child(doc, "field"), "field");
    FieldSection f;
    f.name = s.string("name", "");
    f.params = read_params(s.get("params") ? *s.get("params") : json(), "field.params");
    s.finish();
    if (f.name.empty()) bad("field.name", "required");
    try {
      builtin_field(f.name, f.params, model.d);
    } catch (const NotFoundError& e) {
      bad("field.name", e.what());
    } catch (const Error& e) {
      bad("field.params", e.what());
    }
    c.field = f;
  } else if (!model.reference) {
    bad("field", "model '" + c.model.name + "' has no reference field; give one");
  }

  // transform
  if (root.get("transform")) {
    Section s(child(doc, "transform"), "transform");
    TransformSection t;
    t.name = s.string("name", "");
    t.k = static_cast<int>(s.integer("k", 1));
    s.finish();
    if (t.name.empty()) bad("transform.name", "required");
    try {
      FTransform::by_name(t.name, t.k);
    } catch (const NotFoundError& e) {
      bad("transform.name", e.what());
    } catch (const Error& e) {
      bad("transform.k", e.what());
    }
    c.transform = t;
  }

  // grid
  {
    Section s(child(doc, "grid"), "grid");
    root.get("grid");
    c.grid.T = s.number("T", c.grid.T);
    if (!(c.grid.T > 0.0)) bad("grid.T", "must be positive");
    c.grid.steps = positive(s.integer("steps", c.grid.steps), "grid.steps");
    s.finish();
  }

  // monte_carlo
  {
    Section s(child(doc, "monte_carlo"), "monte_carlo");
    root.get("monte_carlo");
    c.monte_carlo.paths = positive(s.integer("paths", c.monte_carlo.paths), "monte_carlo.paths");
    if (const json* seed = s.get("seed")) {
      if (!seed->is_number_unsigned()) bad("monte_carlo.seed", "expected a non-negative integer");
      c.monte_carlo.seed = seed->get<std::uint64_t>();
    }
    s.finish();
  }

  // domain
  {
    Section s(child(doc, "domain"), "domain");
    root.get("domain");
    c.domain.source = s.string("source", c.domain.source);
    if (c.domain.source != "grid" && c.domain.source != "paths") {
      bad("domain.source", "expected 'grid' or 'paths'");
    }
    c.domain.times = s.numbers("times", c.domain.times);
    for (double t : c.domain.times) {
      if (t < 0.0) bad("domain.times", "times must be non-negative");
    }
    std::vector<double> lo, hi;
    for (Eigen::Index i = 0; i < model.default_x0.size(); ++i) {
      lo.push_back(model.default_x0[i] - 0.5);
      hi.push_back(model.default_x0[i] + 0.5);
    }
    c.domain.lower = s.numbers("lower", lo);
    c.domain.upper = s.numbers("upper", hi);
    if (c.domain.lower.size() != static_cast<std::size_t>(model.d) ||
        c.domain.upper.size() != static_cast<std::size_t>(model.d)) {
      bad("domain", "lower and upper need " + std::to_string(model.d) + " entries");
    }
    for (std::size_t i = 0; i < c.domain.lower.size(); ++i) {
      if (c.domain.lower[i] > c.domain.upper[i]) bad("domain.lower", "exceeds upper");
    }
    c.domain.resolution = positive(s.integer("resolution", c.domain.resolution), "domain.resolution");
    c.domain.stride = positive(s.integer("stride", c.domain.stride), "domain.stride");
    s.finish();
  }

  // residuals
  {
    Section s(child(doc, "residuals"), "residuals");
    root.get("residuals");
    c.residuals.op = s.string("operator", c.residuals.op);
    c.residuals.named_case = s.string("case", c.residuals.named_case);
    c.residuals.k = static_cast<int>(s.integer("k", c.residuals.k));
    s.finish();
    try {
      ResidualOperator::parse(c.residuals.op);
    } catch (const Error& e) {
      bad("residuals.operator", e.what());
    }
    try {
      parse_named_case(c.residuals.named_case);
    } catch (const Error& e) {
      bad("residuals.case", e.what());
    }
  }

  // convergence
  {
    Section s(child(doc, "convergence"), "convergence");
    root.get("convergence");
    if (const json* lv = s.get("levels")) {
      if (!lv->is_array()) bad("convergence.levels", "expected an array of integers");
      c.convergence.levels.clear();
      for (std::size_t i = 0; i < lv->size(); ++i) {
        const std::string where = "convergence.levels[" + std::to_string(i) + "]";
        if (!(*lv)[i].is_number_integer()) bad(where, "expected an integer");
        c.convergence.levels.push_back(positive((*lv)[i].get<long long>(), where));
      }
    }
    c.convergence.expect = s.string("expect", c.convergence.expect);
    if (c.convergence.expect != "converge" && c.convergence.expect != "exact" &&
        c.convergence.expect != "diverge") {
      bad("convergence.expect", "expected 'converge', 'exact' or 'diverge'");
    }
    s.finish();
  }

  // tolerances
  {
    Section s(child(doc, "tolerances"), "tolerances");
    root.get("tolerances");
    auto& t = c.tolerances;
    t.identity_max = s.optional_number("identity_max");
    t.residual = s.optional_number("residual");
    t.exclusion_fraction = s.number("exclusion_fraction", t.exclusion_fraction);
    t.convergence_ratio = s.number("convergence_ratio", t.convergence_ratio);
    t.slope_min = s.number("slope_min", t.slope_min);
    t.slope_max = s.number("slope_max", t.slope_max);
    t.curl = s.number("curl", t.curl);
    if (t.exclusion_fraction < 0.0 || t.exclusion_fraction > 1.0) {
      bad("tolerances.exclusion_fraction", "must lie in [0, 1]");
    }
    s.finish();
  }

  // probe
  {
    Section s(child(doc, "probe"), "probe");
    root.get("probe");
    c.probe.radii = s.numbers("radii", c.probe.radii);
    for (double r : c.probe.radii) {
      if (!(r > 0.0)) bad("probe.radii", "radii must be positive");
    }
    c.probe.max_constant = s.number("max_constant", c.probe.max_constant);
    s.finish();
  }

  // output
  {
    Section s(child(doc, "output"), "output");
    root.get("output");
    c.output.directory = s.string("directory", c.output.directory);
    c.output.ledger = s.boolean("ledger", c.output.ledger);
    const long long traces = s.integer("traces", 0);
    if (traces < 0) bad("output.traces", "must be non-negative");
    c.output.traces = static_cast<int>(traces);
    s.finish();
  }
  root.finish();

  json& r = c.resolved;
  r["model"] = {{"name", c.model.name}, {"params", params_json(model.params)}};
  if (c.field) {
    r["field"] = {{"name", c.field->name}, {"params", params_json(c.field->params)}};
  }
  if (c.transform) r["transform"] = {{"name", c.transform->name}, {"k", c.transform->k}};
  r["grid"] = {{"T", c.grid.T}, {"steps", c.grid.steps}};
  r["monte_carlo"] = {{"paths", c.monte_carlo.paths}, {"seed", c.monte_carlo.seed}};
  r["domain"] = {{"source", c.domain.source},   {"times", c.domain.times},
                 {"lower", c.domain.lower},     {"upper", c.domain.upper},
                 {"resolution", c.domain.resolution}, {"stride", c.domain.stride}};
  r["residuals"] = {{"operator", c.residuals.op},
                    {"case", c.residuals.named_case},
                    {"k", c.residuals.k}};
  r["convergence"] = {{"levels", c.convergence.levels}, {"expect", c.convergence.expect}};
  json tol = {{"exclusion_fraction", c.tolerances.exclusion_fraction},
              {"convergence_ratio", c.tolerances.convergence_ratio},
              {"slope_min", c.tolerances.slope_min},
              {"slope_max", c.tolerances.slope_max},
              {"curl", c.tolerances.curl}};
  if (c.tolerances.identity_max) tol["identity_max"] = *c.tolerances.identity_max;
  if (c.tolerances.residual) tol["residual"] = *c.tolerances.residual;
  r["tolerances"] = tol;
  r["probe"] = {{"radii", c.probe.radii}, {"max_constant", c.probe.max_constant}};
  r["output"] = {{"ledger", c.output.ledger}, {"traces", c.output.traces}};
  c.hash = fnv1a_hex(r.dump());
  return c;
}

}  // namespace pathind::cli
