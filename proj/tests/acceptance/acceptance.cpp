// Acceptance suite: one line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "pathind/characterize.hpp"
#include "pathind/model.hpp"
#include "pathind/verify.hpp"

using namespace pathind;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(4) << x;
  return os.str();
}

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

// 1. heat_kernel exactness
Outcome closed_form() {
  ExperimentConfig c = experiment_for("heat_kernel");
  c.grid = {1.0, 16};
  c.n_paths = 100;
  const ExperimentResult r = identity_experiment(c);
  return {r.errors.max <= 1e-10 && r.excluded == 0,
          "max e = " + num(r.errors.max) + " (tol 1e-10)"};
}

// 2. manufactured jump model
Outcome jump_exactness() {
  const ModelSpec m = builtin("manufactured_jump");
  // c from substituting v = x - c t into the PIDE with sigma = 1, beta = 1,
  // one atom u = -1 of mass 1: c = 1/2 + (e^{-1} - 1 + e^{-1})
  const double c = 2.0 * std::exp(-1.0) - 0.5;
  const double c_model = -m.reference->value(1.0, vec({0.0}));
  double sup_pide = 0.0, sup_lambda = 0.0;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double t = i / 19.0;
      const Vec x = vec({-2.0 + 4.0 * j / 19.0});
      sup_pide = std::max(sup_pide, std::abs(pide_residual(*m.reference, m, t, x)));
      for (double r : lambda_consistency(*m.reference, m, t, x).residual) {
        sup_lambda = std::max(sup_lambda, std::abs(r));
      }
    }
  }
  ExperimentConfig cfg = experiment_for("manufactured_jump");
  cfg.grid = {1.0, 4096};
  cfg.n_paths = 1000;
  const ExperimentResult r = identity_experiment(cfg);
  const bool pass = std::abs(c - c_model) <= 1e-15 && sup_pide <= 1e-12 &&
                    sup_lambda <= 4 * std::numeric_limits<double>::epsilon() && r.errors.max <= 1e-8 && r.excluded == 0;
  return {pass, "c = " + num(c_model) + ", sup PIDE " + num(sup_pide) + ", sup lambda " +
                    num(sup_lambda) + ", max e = " + num(r.errors.max) + " at n = 4096"};
}

// 3. pure jump model
Outcome pure_jump() {
  double worst = 0.0;
  int jumps = 0;
  for (int n : {1, 5, 64, 1000}) {
    ExperimentConfig c = experiment_for("pure_jump");
    c.grid = {1.0, n};
    c.n_paths = 1000;
    const ExperimentResult r = identity_experiment(c);
    worst = std::max(worst, r.errors.max);
    for (const auto& p : r.records) jumps += p.jump_count;
  }
  return {worst <= 1e-10 && jumps > 0,
          "max e = " + num(worst) + " over n in {1, 5, 64, 1000}"};
}

// 4. two_exponential convergence
Outcome convergence() {
  ExperimentConfig c = experiment_for("two_exponential");
  c.n_paths = 1000;
  const std::vector<int> levels{256, 1024, 4096};
  const ConvergenceTable t = convergence_study(c, levels);
  const double ratio = t.rows[2].median / t.rows[1].median;
  const bool pass = ratio <= 0.6 && t.slope >= 0.4 && t.slope <= 1.1;
  return {pass, "median ratio n=4096/n=1024 " + num(ratio) + " (<= 0.6), slope " +
                    num(t.slope) + " (in [0.4, 1.1])"};
}

// 5. martingale property
Outcome martingale(const std::string& model, int steps) {
  ExperimentConfig c = experiment_for(model);
  c.grid = {1.0, steps};
  c.n_paths = 10000;
  const ExperimentResult r = martingale_experiment(c);
  return {r.pass, model + ": mean Z = " + num(r.mean_Z) + ", stderr " + num(r.stderr_Z)};
}

// 6. f-transform identities
Outcome transforms() {
  const ModelSpec m = builtin("gruschin");
  const ScalarField v = builtin_field("smooth_bump");
  struct Case {
    NamedCase named;
    int k;
  };
  const std::vector<Case> cases = {{NamedCase::a, 1}, {NamedCase::b, 1},
                                   {NamedCase::c, 1}, {NamedCase::c, 2},
                                   {NamedCase::d, 1}};
  std::mt19937_64 gen(20);
  std::uniform_real_distribution<double> X(-1.5, 1.5), T(0.0, 1.0);
  double named_gap = 0.0, compose_gap = 0.0;
  for (const auto& cs : cases) {
    const FTransform f = transform_for(cs.named, cs.k);
    const ScalarField fv = compose(f, v);
    for (int i = 0; i < 100; ++i) {
      const double t = T(gen);
      const Vec x = vec({X(gen), X(gen)});
      const TransformResidual tr = ftransform_residual(f, v, m, t, x);
      const HjbResidual named = named_residual(cs.named, v, m, t, x, cs.k);
      const HjbResidual printed = printed_counterpart(cs.named, tr);
      named_gap = std::max({named_gap, (named.r_grad - printed.r_grad).cwiseAbs().maxCoeff(),
                            std::abs(named.r_time - printed.r_time)});
      const HjbResidual h = hjb_residual(fv, m, t, x);
      compose_gap = std::max({compose_gap, (tr.r_grad - h.r_grad).cwiseAbs().maxCoeff(),
                              std::abs(tr.r_time - h.r_time)});
    }
  }
  return {named_gap <= 1e-12 && compose_gap <= 1e-12,
          "named gap " + num(named_gap) + ", compose gap " + num(compose_gap) +
              " over identity, log, x^3, x^5, tan"};
}

// 7. diagnostics of the inconsistent examples
Outcome diagnostics() {
  const ModelSpec kohn = builtin("kohn");
  const Vec r = drift_image_residual(kohn, 1.0, vec({1.0, 2.0, 3.0}));
  bool ok = r[0] == 0.0 && r[1] == 0.0 && r[2] == -1.5;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  double formula_gap = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = std::abs(U(gen)), x = U(gen), y = U(gen), z = U(gen);
    const Vec ri = drift_image_residual(kohn, t, vec({x, y, z}));
    formula_gap = std::max(formula_gap, std::abs(ri[2] - z * (x - y) * t / 2.0));
  }
  ok = ok && formula_gap <= 1e-14;

  const ModelSpec corrected = builtin("kohn_corrected");
  double corrected_sup = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) {
        const Vec x = vec({-1.0 + 0.5 * i, -1.0 + 0.5 * j, -1.0 + 0.5 * k});
        corrected_sup = std::max(
            corrected_sup, drift_image_residual(corrected, 0.75, x).cwiseAbs().maxCoeff());
      }
  ok = ok && corrected_sup == 0.0;

  EvaluationDomain point;
  point.points.push_back({1.0, vec({2.0, 3.0})});
  const CurlReport curl = gamma_integrability_check(builtin("gruschin"), point);
  const double defect = curl.points[0].defect(0, 1);
  ok = ok && std::abs(defect - 0.75) <= 1e-6;

  ExperimentConfig g = experiment_for("gruschin");
  g.n_paths = 200;
  const std::vector<int> levels{1024, 4096};
  const NegativeResult neg = negative_experiment(g, levels);
  ExperimentConfig h = experiment_for("heat_kernel");
  h.n_paths = 200;
  const NegativeResult control = negative_experiment(h, levels);
  ok = ok && neg.non_convergent && !control.non_convergent;
  return {ok, "kohn r_3 = " + num(r[2]) + ", corrected sup " + num(corrected_sup) +
                  ", curl " + num(defect) + ", gruschin medians " + num(neg.previous) +
                  " -> " + num(neg.finest) + " (baseline " + num(neg.baseline) + ")"};
}

// 8. finite-difference orders
Outcome derivative_engine() {
  const ScalarField exact = builtin_field("sin_cos");
  const Vec x = vec({0.3, 0.7});
  auto errors = [&](double h) {
    ScalarField fd("sin_cos_fd", [](double, const Vec& z) {
      return std::sin(z[0]) * std::cos(z[1]);
    });
    fd.with_steps({std::nullopt, h, h});
    const double eg = (fd.grad(0.0, x) - exact.grad(0.0, x)).cwiseAbs().maxCoeff();
    const double eh = (fd.hess(0.0, x) - exact.hess(0.0, x)).cwiseAbs().maxCoeff();
    return std::make_pair(eg, eh);
  };
  const auto [g1, h1] = errors(1e-2);
  const auto [g2, h2] = errors(5e-3);
  const double rg = g1 / g2, rh = h1 / h2;
  const bool pass = rg >= 3.2 && rg <= 4.8 && rh >= 3.2 && rh <= 4.8;
  return {pass, "gradient ratio " + num(rg) + ", Hessian ratio " + num(rh)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// 9. reproducibility across worker counts
Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "pathind_acceptance_repro";
  fs::remove_all(root);
  std::ostringstream sink;
  std::vector<int> status;
  for (const char* workers : {"1", "4"}) {
    status.push_back(cli::run({"run-convergence", "--set", "model.name=two_exponential",
                               "--set", "convergence.levels=[256,1024,4096]", "--set",
                               "monte_carlo.paths=1000", "--seed", "0", "--workers",
                               workers, "--out", (root / workers).string()},
                              sink, sink));
  }
  bool same = status[0] == 0 && status[1] == 0;
  std::string files;
  for (const char* f : {"summary.json", "paths.csv", "convergence.csv"}) {
    const std::string a = slurp(root / "1" / f);
    const std::string b = slurp(root / "4" / f);
    const bool eq = !a.empty() && a == b;
    same = same && eq;
    files += std::string(files.empty() ? "" : ", ") + f + (eq ? " identical" : " DIFFER");
  }
  fs::remove_all(root);
  return {same, files + " (workers 1 vs 4)"};
}

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "closed-form exactness", 1.0, closed_form},
      {"AC2", "jump-case exactness", 30.0, jump_exactness},
      {"AC3", "pure-jump exactness", 5.0, pure_jump},
      {"AC4", "convergence on a nonlinear field", 120.0, convergence},
      {"AC5", "martingale property (heat_kernel)", 60.0, [] { return martingale("heat_kernel", 16); }},
      {"AC5", "martingale property (manufactured_jump)", 60.0,
       [] { return martingale("manufactured_jump", 64); }},
      {"AC6", "f-transform identities", 60.0, transforms},
      {"AC7", "diagnostics of inconsistent models", 120.0, diagnostics},
      {"AC8", "derivative engine order", 1.0, derivative_engine},
      {"AC9", "reproducibility", 300.0, reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.title << ": "
              << o.detail << " [" << std::fixed << std::setprecision(2) << secs
              << " s, budget " << std::setprecision(0) << c.budget_s << " s"
              << (in_time ? "" : ", over budget") << "]" << std::defaultfloat << "\n";
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}
