// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "pathind/characterize.hpp"
#include "pathind/export.hpp"
#include "pathind/ledger.hpp"
#include "pathind/model.hpp"
#include "pathind/simulate.hpp"
#include "pathind/verify.hpp"
#include "run_config.hpp"

namespace pathind::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  std::string command;
  RunConfig rc;
  fs::path dir;
  std::ostream& out;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
  if (!f) throw ConfigError("write failed for " + path.string());
}

template <class Writer>
void write_with(const fs::path& path, Writer&& w) {
  std::ostringstream os;
  w(os);
  write_file(path, os.str());
}

void write_summary(const Context& ctx, bool pass, json result) {
  json j = {{"command", ctx.command},
            {"config", ctx.rc.resolved},
            {"config_hash", ctx.rc.hash},
            {"seed", ctx.rc.monte_carlo.seed},
            {"pass", pass},
            {"result", std::move(result)}};
  write_file(ctx.dir / "summary.json", j.dump(2) + "\n");
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

int verdict(const Context& ctx, bool pass) {
  ctx.out << "result: " << (pass ? "PASS" : "FAIL") << "\n"
          << "artifacts: " << ctx.dir.string() << "\n";
  return pass ? kPass : kFail;
}

ModelSpec make_model(const RunConfig& rc) {
  return builtin(rc.model.name, rc.model.params);
}

ScalarField make_field(const RunConfig& rc, const ModelSpec& model) {
  if (rc.field) return builtin_field(rc.field->name, rc.field->params, model.d);
  return *model.reference;
}

std::optional<FTransform> make_transform(const RunConfig& rc) {
  if (!rc.transform) return std::nullopt;
  return FTransform::by_name(rc.transform->name, rc.transform->k);
}

ExperimentConfig make_experiment(const RunConfig& rc) {
  ExperimentConfig cfg;
  cfg.model = make_model(rc);
  cfg.field = make_field(rc, cfg.model);
  cfg.transform = make_transform(rc);
  cfg.x0 = cfg.model.default_x0;
  cfg.grid = {rc.grid.T, rc.grid.steps};
  cfg.n_paths = rc.monte_carlo.paths;
  cfg.seed = rc.monte_carlo.seed;
  cfg.workers = rc.workers;
  cfg.exclusion_limit = rc.tolerances.exclusion_fraction;
  cfg.max_error_tol = rc.tolerances.identity_max;
  cfg.config_hash = rc.hash;
  return cfg;
}

PathBundle simulate_path(const ModelSpec& model, const RunConfig& rc,
                         std::uint64_t index) {
  const TimeGrid grid{rc.grid.T, rc.grid.steps};
  return model.has_jumps()
             ? simulate_jump_diffusion(model, model.default_x0, grid,
                                       rc.monte_carlo.seed, index)
             : simulate_diffusion(model, model.default_x0, grid,
                                  rc.monte_carlo.seed, index);
}

void write_path_extras(const Context& ctx, const ModelSpec& model) {
  const auto& rc = ctx.rc;
  if (rc.output.ledger) {
    const PathBundle p = simulate_path(model, rc, 0);
    write_with(ctx.dir / "ledger.csv",
               [&](std::ostream& os) { write_ledger_csv(os, exponent(p, model)); });
  }
  const int traces = std::min(rc.output.traces, rc.monte_carlo.paths);
  if (traces > 0) fs::create_directories(ctx.dir / "traces");
  for (int i = 0; i < traces; ++i) {
    const PathBundle p = simulate_path(model, rc, static_cast<std::uint64_t>(i));
    std::ostringstream name;
    name << std::setw(5) << std::setfill('0') << i;
    write_with(ctx.dir / "traces" / ("path_" + name.str() + ".csv"),
               [&](std::ostream& os) { write_trace_csv(os, p); });
    if (model.has_jumps()) {
      write_with(ctx.dir / "traces" / ("jumps_" + name.str() + ".csv"),
                 [&](std::ostream& os) { write_jump_csv(os, p); });
    }
  }
}

EvaluationDomain make_domain(const RunConfig& rc, const ModelSpec& model) {
  const auto& d = rc.domain;
  if (d.source == "paths") {
    std::vector<PathBundle> paths;
    paths.reserve(static_cast<std::size_t>(rc.monte_carlo.paths));
    for (int i = 0; i < rc.monte_carlo.paths; ++i) {
      paths.push_back(simulate_path(model, rc, static_cast<std::uint64_t>(i)));
    }
    return EvaluationDomain::from_paths(paths, d.stride);
  }
  const Vec lo = Eigen::Map<const Vec>(d.lower.data(), static_cast<Eigen::Index>(d.lower.size()));
  const Vec hi = Eigen::Map<const Vec>(d.upper.data(), static_cast<Eigen::Index>(d.upper.size()));
  return EvaluationDomain::grid(d.times, lo, hi, d.resolution);
}

// ---------------------------------------------------------------------------

int list_models(std::ostream& out) {
  for (const auto& name : builtin_names()) {
    out << std::left << std::setw(20) << name << builtin_description(name) << "\n";
  }
  return kPass;
}

int check_residuals(Context& ctx) {
  const auto& rc = ctx.rc;
  const ModelSpec model = make_model(rc);
  const ScalarField v = make_field(rc, model);
  ResidualOperator op = ResidualOperator::parse(rc.residuals.op);
  op.transform = make_transform(rc);
  op.named = parse_named_case(rc.residuals.named_case);
  op.k = rc.residuals.k;
  if (op.kind == ResidualOperator::Kind::ftransform && !op.transform) {
    throw ConfigError("transform: required by the ftransform operator");
  }
  const double tol = rc.tolerances.residual.value_or(default_residual_tolerance(v));
  const EvaluationDomain domain = make_domain(rc, model);
  const ResidualReport rep = evaluate_on_domain(op, v, model, domain, tol, rc.workers);

  write_with(ctx.dir / "residuals.csv",
             [&](std::ostream& os) { write_residuals_csv(os, rep); });
  write_summary(ctx, rep.pass, to_json(rep));

  ctx.out << "check-residuals: model " << model.name << ", field " << v.name()
          << ", operator " << rep.op << "\n"
          << "  points " << rep.records.size() << ", errors " << rep.error_count
          << ", sup residual " << fmt(rep.sup_all) << " (tol " << fmt(tol) << ")\n";
  if (!rep.records.empty()) {
    const auto& w = rep.records[rep.worst_index];
    ctx.out << "  worst point " << format_point(w.t, w.x);
    if (!w.error.empty()) ctx.out << ": " << w.error;
    ctx.out << "\n";
  }
  if (!model.notes.empty()) ctx.out << "  note: " << model.notes << "\n";
  return verdict(ctx, rep.pass);
}

int run_identity(Context& ctx) {
  const ExperimentConfig cfg = make_experiment(ctx.rc);
  const ExperimentResult r = identity_experiment(cfg);
  write_with(ctx.dir / "paths.csv",
             [&](std::ostream& os) { write_paths_csv(os, r.records); });
  write_path_extras(ctx, cfg.model);
  write_summary(ctx, r.pass, to_json(r));
  ctx.out << "run-identity: model " << cfg.model.name << ", field "
          << cfg.field.name();
  if (cfg.transform) ctx.out << ", transform " << cfg.transform->name();
  ctx.out << "\n  paths " << cfg.n_paths << ", steps " << cfg.grid.steps
          << ", excluded " << r.excluded << "\n"
          << "  error max " << fmt(r.errors.max) << ", median "
          << fmt(r.errors.median) << ", mean " << fmt(r.errors.mean) << "\n";
  if (cfg.max_error_tol) ctx.out << "  tolerance " << fmt(*cfg.max_error_tol) << "\n";
  return verdict(ctx, r.pass);
}

int run_martingale(Context& ctx) {
  const ExperimentConfig cfg = make_experiment(ctx.rc);
  const ExperimentResult r = martingale_experiment(cfg);
  write_with(ctx.dir / "paths.csv",
             [&](std::ostream& os) { write_paths_csv(os, r.records); });
  write_path_extras(ctx, cfg.model);
  write_summary(ctx, r.pass, to_json(r));
  ctx.out << "run-martingale: model " << cfg.model.name << ", paths "
          << cfg.n_paths << ", steps " << cfg.grid.steps << "\n"
          << "  mean Z_T " << fmt(r.mean_Z) << ", stderr " << fmt(r.stderr_Z)
          << ", |mean - 1| / stderr "
          << (r.stderr_Z > 0 ? fmt(std::abs(r.mean_Z - 1.0) / r.stderr_Z) : "n/a")
          << "\n";
  if (r.moment && !r.moment->message.empty()) {
    ctx.out << "  warning: " << r.moment->message << "\n";
  }
  return verdict(ctx, r.pass);
}

int run_convergence(Context& ctx) {
  const auto& rc = ctx.rc;
  const ExperimentConfig cfg = make_experiment(rc);
  const auto& levels = rc.convergence.levels;
  const std::string& expect = rc.convergence.expect;

  ConvergenceTable table;
  json result;
  bool pass = false;
  if (expect == "diverge") {
    NegativeResult n = negative_experiment(cfg, levels);
    pass = n.non_convergent;
    result = to_json(n);
    table = std::move(n.table);
  } else {
    table = convergence_study(cfg, levels);
    result = to_json(table);
    const auto limit = rc.tolerances.exclusion_fraction * cfg.n_paths;
    bool excl_ok = true;
    for (const auto& row : table.rows) {
      excl_ok = excl_ok && static_cast<double>(row.excluded) <= limit;
    }
    if (expect == "exact") {
      pass = table.exact && excl_ok;
    } else {
      const auto& rows = table.rows;
      const double ratio = rows.back().median / rows[rows.size() - 2].median;
      result["finest_ratio"] = std::isfinite(ratio) ? json(ratio) : json(nullptr);
      pass = excl_ok && ratio <= rc.tolerances.convergence_ratio &&
             std::isfinite(table.slope) && table.slope >= rc.tolerances.slope_min &&
             table.slope <= rc.tolerances.slope_max;
    }
  }
  result["expect"] = expect;

  write_with(ctx.dir / "convergence.csv",
             [&](std::ostream& os) { write_convergence_csv(os, table); });
  write_with(ctx.dir / "paths.csv",
             [&](std::ostream& os) { write_paths_csv(os, table.records.back()); });
  write_summary(ctx, pass, result);

  ctx.out << "run-convergence: model " << cfg.model.name << ", paths "
          << cfg.n_paths << ", expect " << expect << "\n";
  for (const auto& row : table.rows) {
    ctx.out << "  n = " << std::setw(6) << row.steps << "  median "
            << fmt(row.median) << "  max " << fmt(row.max) << "\n";
  }
  ctx.out << "  slope " << (std::isfinite(table.slope) ? fmt(table.slope) : "exact")
          << "\n";
  return verdict(ctx, pass);
}

int curl_check(Context& ctx) {
  const ModelSpec model = make_model(ctx.rc);
  const EvaluationDomain domain = make_domain(ctx.rc, model);
  const CurlReport rep = gamma_integrability_check(model, domain);
  const bool evaluated = rep.skipped < rep.points.size();
  const bool pass = evaluated && rep.max_defect <= ctx.rc.tolerances.curl;
  write_with(ctx.dir / "curl.csv", [&](std::ostream& os) { write_curl_csv(os, rep); });
  json result = to_json(rep);
  result["tol"] = ctx.rc.tolerances.curl;
  write_summary(ctx, pass, result);
  ctx.out << "curl-check: model " << model.name << ", points "
          << rep.points.size() << ", skipped " << rep.skipped << "\n"
          << "  max defect " << fmt(rep.max_defect) << " (tol "
          << fmt(ctx.rc.tolerances.curl) << ")\n";
  if (evaluated) {
    const auto& w = rep.points[rep.worst_index];
    ctx.out << "  worst point " << format_point(w.t, w.x) << "\n";
  }
  return verdict(ctx, pass);
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

int probe_hypotheses(Context& ctx) {
  const auto& rc = ctx.rc;
  const ModelSpec model = make_model(rc);
  const EvaluationDomain domain = make_domain(rc, model);
  std::vector<ProbePoint> probes;
  std::size_t i = 0;
  for (const auto& p : domain.points) {
    for (std::size_t r = 0; r < rc.probe.radii.size(); ++r) {
      Vec y = p.x;
      y[static_cast<Eigen::Index>((i + r) % static_cast<std::size_t>(model.d))] +=
          rc.probe.radii[r];
      probes.push_back({p.t, p.x, std::move(y)});
    }
    ++i;
  }
  ProbeSettings settings;
  settings.max_constant = rc.probe.max_constant;
  const HypothesisProbeReport rep = hypothesis_probe(model, probes, settings);

  json profile = json::array();
  for (const auto& [r, k] : rep.kappa_profile) profile.push_back({r, k});
  json result = {{"lambda0_est", finite_or_null(rep.lambda0_est)},
                 {"lambda1_est", finite_or_null(rep.lambda1_est)},
                 {"hf_lipschitz", finite_or_null(rep.hf_lipschitz)},
                 {"hf_q2", finite_or_null(rep.hf_q2)},
                 {"hf_q4", finite_or_null(rep.hf_q4)},
                 {"kappa_profile", profile},
                 {"sample_count", rep.sample_count},
                 {"skipped_pairs", rep.skipped_pairs},
                 {"h1", to_string(rep.h1)},
                 {"h2", to_string(rep.h2)},
                 {"hf", to_string(rep.hf)}};
  const bool pass = rep.h1 != Verdict::fail && rep.h2 != Verdict::fail &&
                    rep.hf != Verdict::fail;
  write_summary(ctx, pass, result);
  ctx.out << "probe-hypotheses: model " << model.name << ", pairs " << probes.size()
          << "\n  H1 " << to_string(rep.h1) << " (lambda0 ~ " << fmt(rep.lambda0_est)
          << "), H2 " << to_string(rep.h2) << " (lambda1 ~ " << fmt(rep.lambda1_est)
          << ")";
  if (model.has_jumps()) ctx.out << ", Hf " << to_string(rep.hf);
  ctx.out << "\n  estimates are suprema over the probe set, not proofs\n";
  return verdict(ctx, pass);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_log(const Context& ctx, int status, const std::string& message) {
  std::ostringstream os;
  os << "time " << timestamp() << "\n"
     << "command " << ctx.command << "\n"
     << "workers " << ctx.rc.workers << "\n"
     << "config_hash " << ctx.rc.hash << "\n"
     << "exit " << status << "\n";
  if (!message.empty()) os << "message " << message << "\n";
  write_file(ctx.dir / "run.log", os.str());
}

void write_diagnostics(const Context& ctx, const std::string& kind,
                       const std::string& message) {
  json j = {{"command", ctx.command},
            {"error", kind},
            {"message", message},
            {"config", ctx.rc.resolved},
            {"config_hash", ctx.rc.hash},
            {"seed", ctx.rc.monte_carlo.seed}};
  write_file(ctx.dir / "diagnostics.json", j.dump(2) + "\n");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Path-independence checks for Girsanov exponents", "pathind"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--set", overrides, "Override a config entry, e.g. grid.steps=64")
      ->take_all();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Monte Carlo seed");
  app.add_option("--workers", workers, "Worker threads")
      ->check(CLI::PositiveNumber);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"list-models", "Print the built-in models"},
      {"check-residuals", "Evaluate characterizing-equation residuals on a domain"},
      {"run-identity", "Path-wise identity experiment"},
      {"run-martingale", "Estimate E[Z_T]"},
      {"run-convergence", "Identity errors under nested grid refinement"},
      {"curl-check", "Integrability certificate for gamma"},
      {"probe-hypotheses", "Empirical monotonicity and growth constants"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kPass : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  if (command == "list-models") return list_models(out);

  json doc = json::object();
  RunConfig rc;
  try {
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw ConfigError(config_path + ": cannot open config file");
      doc = json::parse(f, nullptr, false);
      if (doc.is_discarded()) throw ConfigError(config_path + ": malformed JSON");
    }
    for (const auto& o : overrides) apply_override(doc, o);
    if (!out_dir.empty()) apply_override(doc, "output.directory=" + json(out_dir).dump());
    if (seed) apply_override(doc, "monte_carlo.seed=" + std::to_string(*seed));
    rc = parse_config(doc);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  rc.workers = workers;

  Context ctx{command, std::move(rc), {}, out};
  ctx.dir = ctx.rc.output.directory;
  std::error_code ec;
  fs::create_directories(ctx.dir, ec);
  if (ec) {
    err << "config error: output.directory: " << ec.message() << "\n";
    return kConfigError;
  }

  int status = kFail;
  std::string message;
  try {
    if (command == "check-residuals") {
      status = check_residuals(ctx);
    } else if (command == "run-identity") {
      status = run_identity(ctx);
    } else if (command == "run-martingale") {
      status = run_martingale(ctx);
    } else if (command == "run-convergence") {
      status = run_convergence(ctx);
    } else if (command == "curl-check") {
      status = curl_check(ctx);
    } else {
      status = probe_hypotheses(ctx);
    }
  } catch (const ConfigError& e) {
    status = kConfigError;
    message = e.what();
  } catch (const ValidationError& e) {
    status = kConfigError;
    message = e.what();
  } catch (const NotFoundError& e) {
    status = kConfigError;
    message = e.what();
  } catch (const NumericError& e) {
    status = kFail;
    message = e.what();
    write_diagnostics(ctx, "numeric", message);
  } catch (const DomainError& e) {
    status = kFail;
    message = e.what();
    write_diagnostics(ctx, "domain", message);
  }
  if (!message.empty()) {
    err << (status == kConfigError ? "config error: " : "error: ") << message << "\n";
  }
  write_log(ctx, status, message);
  return status;
}

}  // namespace pathind::cli
