// SPDX-License-Identifier: Apache-2.0
#include "pathind/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "pathind/export.hpp"

namespace pathind {
namespace {

GirsanovLedger accumulate(const PathBundle& path, const ModelSpec& model,
                          std::optional<StepRange> range, bool with_jumps) {
  const int n = path.grid.steps;
  const StepRange r = range.value_or(StepRange{0, n});
  if (r.begin < 0 || r.end > n || r.begin >= r.end) {
    throw ValidationError("step range [" + std::to_string(r.begin) + ", " +
                          std::to_string(r.end) + ") outside the grid");
  }
  if (static_cast<int>(path.states.size()) != n + 1 ||
      static_cast<int>(path.bm_increments.size()) != n) {
    throw ConfigError("path bundle does not match its grid");
  }
  const JumpSpec* jump = nullptr;
  if (with_jumps) {
    if (!model.has_jumps()) {
      throw ConfigError("model '" + model.name + "' has no jump specification");
    }
    jump = &*model.jump;
  }

  const double dt = path.grid.dt();
  const auto len = static_cast<std::size_t>(r.end - r.begin + 1);
  GirsanovLedger L;
  for (auto* series : {&L.times, &L.stoch_integral, &L.quad_term,
                       &L.jump_log_term, &L.compensator_term, &L.Y, &L.Z, &L.M}) {
    series->reserve(len);
  }

  double si = 0.0, quad = 0.0, jlog = 0.0, comp = 0.0, msum = 0.0;
  auto record = [&](int k) {
    L.times.push_back(path.grid.time(k));
    L.stoch_integral.push_back(si);
    L.quad_term.push_back(quad);
    L.jump_log_term.push_back(jlog);
    L.compensator_term.push_back(comp);
    const double y = ((si + quad) + jlog) + comp;
    L.Y.push_back(y);
    L.Z.push_back(std::exp(-y));
    L.M.push_back((-si + msum) - comp);
  };
  record(r.begin);

  auto event = path.jumps.begin();
  for (int k = r.begin; k < r.end; ++k) {
    const double t = path.grid.time(k);
    const Vec& x = path.states[static_cast<std::size_t>(k)];
    const Vec g = model.gamma(t, x);
    const Vec& dw = path.bm_increments[static_cast<std::size_t>(k)];
    if (g.size() != dw.size()) {
      throw ConfigError("gamma has " + std::to_string(g.size()) +
                        " entries but the noise dimension is " +
                        std::to_string(dw.size()));
    }
    si += g.dot(dw);
    quad += 0.5 * g.squaredNorm() * dt;

    if (jump) {
      double c = 0.0, nov = 0.0;
      for (const auto& atom : jump->atoms) {
        const double l = jump->lambda(t, atom.mark);
        c += (1.0 - l) * atom.weight;
        nov += (1.0 - l) * (1.0 - l) / l * atom.weight;
      }
      comp += dt * c;
      L.novikov_jump_term += dt * nov;

      while (event != path.jumps.end() && event->step_index < k) ++event;
      for (; event != path.jumps.end() && event->step_index == k; ++event) {
        if (!event->accepted) continue;
        const auto& atom = jump->atoms[static_cast<std::size_t>(event->atom_index)];
        const double l = jump->lambda(event->time, atom.mark);
        if (!(l > 0.0)) {
          std::ostringstream os;
          os << "accepted jump at t = " << event->time
             << " has lambda = " << l << "; log undefined";
          throw DomainError(os.str());
        }
        jlog += std::log(l);
        msum += (1.0 - l) / l;
        ++L.accepted_jumps;
      }
    }
    record(k + 1);
  }
  return L;
}

}  // namespace

GirsanovLedger exponent_continuous(const PathBundle& path,
                                   const ModelSpec& model,
                                   std::optional<StepRange> range,
                                   bool ignore_jumps) {
  if (!ignore_jumps && !path.jumps.empty()) {
    throw ValidationError(
        "path carries jump events; use exponent_jump or set ignore_jumps");
  }
  return accumulate(path, model, range, false);
}

GirsanovLedger exponent_jump(const PathBundle& path, const ModelSpec& model,
                             std::optional<StepRange> range) {
  return accumulate(path, model, range, true);
}

GirsanovLedger exponent(const PathBundle& path, const ModelSpec& model) {
  return model.has_jumps() ? exponent_jump(path, model)
                           : exponent_continuous(path, model);
}

namespace {

struct MeanResult {
  double mean = 0.0;
  bool overflow = false;
  bool heavy = false;
};

MeanResult mean_of_exp(const std::vector<double>& exponents) {
  MeanResult out;
  std::vector<double> values;
  values.reserve(exponents.size());
  double sum = 0.0;
  for (double e : exponents) {
    const double v = std::exp(e);
    if (!std::isfinite(v)) out.overflow = true;
    values.push_back(v);
    sum += v;
  }
  out.mean = sum / static_cast<double>(values.size());
  if (!std::isfinite(out.mean)) out.overflow = true;
  if (!out.overflow && values.size() >= 100 && sum > 0.0) {
    const auto top = (values.size() + 99) / 100;
    std::partial_sort(values.begin(), values.begin() + static_cast<long>(top),
                      values.end(), std::greater<>());
    double head = 0.0;
    for (std::size_t i = 0; i < top; ++i) head += values[i];
    out.heavy = head > 0.5 * sum;
  }
  return out;
}

}  // namespace

MomentProbe exponential_moment_probe(std::span<const GirsanovLedger> ledgers) {
  MomentProbe probe;
  if (ledgers.empty()) {
    probe.finite = false;
    probe.message = "no ledgers supplied";
    return probe;
  }
  std::vector<double> cont, full;
  cont.reserve(ledgers.size());
  full.reserve(ledgers.size());
  for (const auto& L : ledgers) {
    cont.push_back(L.final_quad());
    full.push_back(L.final_quad() + L.novikov_jump_term);
  }
  const MeanResult c = mean_of_exp(cont);
  const MeanResult j = mean_of_exp(full);
  probe.continuous_moment = c.mean;
  probe.jump_moment = j.mean;
  probe.overflow = c.overflow || j.overflow;
  probe.heavy_tail = c.heavy || j.heavy;
  probe.finite = !probe.overflow;
  if (probe.overflow) {
    probe.message = "exponential moment overflowed";
  } else if (probe.heavy_tail) {
    probe.message = "estimate dominated by fewer than 1% of paths";
  }
  return probe;
}

void write_ledger_csv(std::ostream& os, const GirsanovLedger& L, bool header) {
  if (header) {
    os << "t,stoch_integral,quad_term,jump_log_term,compensator_term,Y,Z\n";
  }
  for (std::size_t k = 0; k < L.times.size(); ++k) {
    os << csv_number(L.times[k]) << ',' << csv_number(L.stoch_integral[k]) << ','
       << csv_number(L.quad_term[k]) << ',' << csv_number(L.jump_log_term[k])
       << ',' << csv_number(L.compensator_term[k]) << ',' << csv_number(L.Y[k])
       << ',' << csv_number(L.Z[k]) << '\n';
  }
}

}  // namespace pathind
