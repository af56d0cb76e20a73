#include "vitalguard/threat.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace vitalguard::threat {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double delta_limit(double baseline, double threshold) {
  return threshold * std::max(std::fabs(baseline), cir::kEpsilonDiv);
}

}  // namespace

std::string to_string(Feasibility f) {
  switch (f) {
    case Feasibility::kFeasible: return "feasible";
    case Feasibility::kInfeasible: return "infeasible";
    case Feasibility::kUnknown: return "unknown";
    case Feasibility::kNotApplicable: return "not-applicable";
  }
  return "unknown";
}

std::size_t AttackVector::touched_sensors() const {
  std::size_t n = 0;
  for (const double d : deltas)
    if (d != 0.0) ++n;
  return n;
}

bool validate_attack(const AttackVector& vector, const dcm::Model& model,
                     const adm::ClusterAtlas& atlas) {
  const std::size_t n = vector.baseline.size();
  if (n == 0 || vector.deltas.size() != n || vector.altered.size() != n)
    return false;
  if (n != dcm::model_sensors(model) || n != atlas.n_sensors) return false;

  std::size_t touched = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const double d = vector.deltas[s];
    const double sum = vector.baseline[s] + d;
    if (std::fabs(vector.altered[s] - sum) >
        1e-9 * std::max(1.0, std::fabs(sum)))
      return false;
    if (d != 0.0) ++touched;
    if (std::fabs(d) >= delta_limit(vector.baseline[s], vector.capability.threshold))
      return false;
  }
  if (touched > vector.capability.max_sensors) return false;

  if (dcm::predict(model, vector.altered) != vector.target_label) return false;
  return adm::consistent(vector.altered, vector.target_label, atlas);
}

AttackOutcome find_attack(const std::vector<double>& patient, int source_label,
                          int target_label, const AttackerCapability& capability,
                          const dcm::Model& model, const adm::ClusterAtlas& atlas,
                          solve::Backend& backend) {
  const auto t0 = Clock::now();
  AttackOutcome out;

  const cir::AttackProblem problem = cir::encode_attack(
      patient, source_label, target_label, capability, model, atlas);
  const solve::SolveResult sr = solve::solve(problem.csp, backend);

  switch (sr.verdict) {
    case solve::Verdict::kUnsat:
      out.feasibility = Feasibility::kInfeasible;
      break;
    case solve::Verdict::kUnknown:
      out.feasibility = Feasibility::kUnknown;
      out.unknown_reason = sr.reason;
      out.detail = sr.detail;
      break;
    case solve::Verdict::kSat: {
      AttackVector v;
      v.baseline = patient;
      v.deltas.resize(patient.size());
      for (std::size_t s = 0; s < patient.size(); ++s)
        v.deltas[s] = sr.model.real(problem.delta_vars[s]);
      v.source_label = source_label;
      v.target_label = target_label;
      v.capability = capability;
      v.backend_name = sr.backend_name;

      const auto rebuild = [&] {
        v.altered.resize(patient.size());
        for (std::size_t s = 0; s < patient.size(); ++s)
          v.altered[s] = patient[s] + v.deltas[s];
      };
      rebuild();
      v.validated = validate_attack(v, model, atlas);
      if (!v.validated) {
        // A rational solution re-read as doubles can land exactly on the
        // strict perturbation limit; pull such deltas a hair inward once.
        bool nudged = false;
        for (std::size_t s = 0; s < patient.size(); ++s) {
          const double limit = delta_limit(patient[s], capability.threshold);
          if (v.deltas[s] != 0.0 && std::fabs(v.deltas[s]) >= limit * (1.0 - 1e-9)) {
            v.deltas[s] *= 1.0 - 1e-9;
            nudged = true;
          }
        }
        if (nudged) {
          rebuild();
          v.validated = validate_attack(v, model, atlas);
        }
      }
      if (v.validated) {
        out.feasibility = Feasibility::kFeasible;
        out.vector = std::move(v);
      } else {
        out.feasibility = Feasibility::kUnknown;
        out.unknown_reason = solve::UnknownReason::kBackendError;
        out.detail = "satisfying assignment failed live-model validation";
      }
      break;
    }
  }
  out.wall_seconds = seconds_since(t0);
  return out;
}

std::vector<AttackerCapability> default_ladder(std::size_t n_sensors) {
  static constexpr double kThresholds[] = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  std::vector<AttackerCapability> ladder;
  ladder.reserve(n_sensors * std::size(kThresholds));
  for (std::size_t ms = 1; ms <= n_sensors; ++ms)
    for (const double th : kThresholds) ladder.push_back({ms, th});
  return ladder;
}

namespace {

struct LadderScan {
  const std::vector<double>& patient;
  int source;
  int target;
  const std::vector<AttackerCapability>& ladder;
  const dcm::Model& model;
  const adm::ClusterAtlas& atlas;
  solve::Backend& backend;
  EscalationResult& result;
  std::vector<char> queried;
  // Outcome of a rung solved ahead of the walk (the whole-ladder precheck),
  // kept so the walk does not re-run the same query.
  std::optional<std::pair<std::size_t, AttackOutcome>> cache;

  AttackOutcome query(std::size_t i) {
    if (cache && cache->first == i) {
      AttackOutcome out = std::move(cache->second);
      cache.reset();
      return out;
    }
    AttackOutcome out = find_attack(patient, source, target, ladder[i],
                                    model, atlas, backend);
    ++result.solver_calls;
    queried[i] = 1;
    RungResult& r = result.rungs[i];
    r.feasibility = out.feasibility;
    r.derived = false;
    r.wall_seconds = out.wall_seconds;
    r.detail = out.detail;
    r.vector = out.vector;
    return out;
  }

  void derive_infeasible(std::size_t i, const AttackerCapability& from) {
    RungResult& r = result.rungs[i];
    r.feasibility = Feasibility::kInfeasible;
    r.derived = true;
    r.detail = "implied by unsat at max_sensors=" +
               std::to_string(from.max_sensors) +
               ", threshold=" + std::to_string(from.threshold);
  }

  void accept(std::size_t i, AttackOutcome&& out) {
    result.feasibility = Feasibility::kFeasible;
    result.capability = ladder[i];
    result.vector = std::move(out.vector);
  }

  /// Plain ascending scan over [begin, end); returns true when a feasible
  /// rung was found (and accepted).
  bool linear(std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (queried[i] || result.rungs[i].derived) continue;
      AttackOutcome out = query(i);
      if (out.feasibility == Feasibility::kFeasible) {
        accept(i, std::move(out));
        return true;
      }
    }
    return false;
  }

  /// Shortcut walk: resolve each max_sensors group by querying its weakest
  /// (largest-threshold) rung first, then bisecting the monotone threshold
  /// axis for the minimal feasible rung. Falls back to linear() on any
  /// inconclusive verdict.
  bool grouped() {
    std::size_t g = 0;
    while (g < ladder.size()) {
      std::size_t g_end = g + 1;
      while (g_end < ladder.size() &&
             ladder[g_end].max_sensors == ladder[g].max_sensors)
        ++g_end;
      const std::size_t last = g_end - 1;

      AttackOutcome top = query(last);
      if (top.feasibility == Feasibility::kInfeasible) {
        for (std::size_t i = g; i < last; ++i)
          derive_infeasible(i, ladder[last]);
        g = g_end;
        continue;
      }
      if (top.feasibility == Feasibility::kUnknown) {
        if (linear(g, last)) return true;
        g = g_end;
        continue;
      }

      // Feasible at the group's weakest rung: bisect for the minimal one.
      // Invariant: lo (when >= g) is Unsat, hi is Sat with a witness.
      std::size_t hi = last;
      AttackOutcome hi_out = std::move(top);
      std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(g) - 1;
      while (static_cast<std::ptrdiff_t>(hi) - lo > 1) {
        const std::size_t mid = static_cast<std::size_t>(lo) +
                                (hi - static_cast<std::size_t>(lo)) / 2;
        AttackOutcome out = query(mid);
        if (out.feasibility == Feasibility::kFeasible) {
          hi = mid;
          hi_out = std::move(out);
        } else if (out.feasibility == Feasibility::kInfeasible) {
          lo = static_cast<std::ptrdiff_t>(mid);
        } else {
          // Inconclusive: finish this group with direct queries.
          if (linear(g, hi)) return true;
          break;
        }
      }
      for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(g); i < lo; ++i)
        if (!queried[static_cast<std::size_t>(i)] &&
            !result.rungs[static_cast<std::size_t>(i)].derived)
          derive_infeasible(static_cast<std::size_t>(i),
                            ladder[static_cast<std::size_t>(lo)]);
      accept(hi, std::move(hi_out));
      return true;
    }
    return false;
  }
};

}  // namespace

EscalationResult escalate(const std::vector<double>& patient, int source_label,
                          int target_label,
                          const std::vector<AttackerCapability>& ladder,
                          const dcm::Model& model, const adm::ClusterAtlas& atlas,
                          solve::Backend& backend, const EscalateOptions& options) {
  if (ladder.empty()) throw EmptyLadder("capability ladder is empty");
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    const auto& a = ladder[i - 1];
    const auto& b = ladder[i];
    if (a.max_sensors > b.max_sensors ||
        (a.max_sensors == b.max_sensors && a.threshold >= b.threshold))
      throw Error("capability ladder must be strictly ascending by "
                  "(max_sensors, threshold)");
  }

  const auto t0 = Clock::now();
  EscalationResult result;
  result.rungs.resize(ladder.size());
  for (std::size_t i = 0; i < ladder.size(); ++i)
    result.rungs[i].capability = ladder[i];

  LadderScan scan{patient, source_label, target_label, ladder,
                  model,   atlas,        backend,      result,
                  std::vector<char>(ladder.size(), 0), {}};

  bool found = false;
  if (options.use_monotone_shortcuts) {
    // If the last rung covers the whole ladder (true for the default grid),
    // one Unsat there settles everything.
    const AttackerCapability& top = ladder.back();
    const bool top_covers_all =
        std::all_of(ladder.begin(), ladder.end(),
                    [&](const AttackerCapability& c) { return top.covers(c); });
    bool settled = false;
    if (top_covers_all && ladder.size() > 1) {
      const std::size_t last = ladder.size() - 1;
      AttackOutcome out = scan.query(last);
      if (out.feasibility == Feasibility::kInfeasible) {
        for (std::size_t i = 0; i < last; ++i) scan.derive_infeasible(i, top);
        settled = true;
      } else {
        // Feasible or unknown: the walk still has to find the minimal rung;
        // cache the outcome so reaching the last group costs no extra query.
        scan.cache = {last, std::move(out)};
      }
    }
    if (!settled) found = scan.grouped();
  } else {
    found = scan.linear(0, ladder.size());
  }

  // Monotone closure over the rungs the walk never visited (it stops at the
  // ladder-minimal feasible rung, leaving stronger capabilities open). A rung
  // covered by a directly-proven Unsat rung is infeasible; a rung covering a
  // directly-proven Sat rung is feasible with the same witness. Rungs that are
  // neither stay unknown -- they were simply never probed.
  for (std::size_t i = 0; i < result.rungs.size(); ++i) {
    RungResult& r = result.rungs[i];
    if (r.feasibility != Feasibility::kUnknown) continue;
    for (std::size_t j = 0; j < result.rungs.size(); ++j) {
      const RungResult& w = result.rungs[j];
      if (w.derived) continue;
      if (w.feasibility == Feasibility::kInfeasible &&
          ladder[j].covers(ladder[i])) {
        scan.derive_infeasible(i, ladder[j]);
        break;
      }
      if (w.feasibility == Feasibility::kFeasible &&
          ladder[i].covers(ladder[j])) {
        r.feasibility = Feasibility::kFeasible;
        r.derived = true;
        r.detail = "implied by sat at max_sensors=" +
                   std::to_string(ladder[j].max_sensors) +
                   ", threshold=" + std::to_string(ladder[j].threshold);
        r.vector = w.vector;
        break;
      }
    }
    if (r.feasibility == Feasibility::kUnknown && r.detail.empty())
      r.detail = "not probed: incomparable with every queried rung";
  }

  if (!found) {
    const bool all_infeasible =
        std::all_of(result.rungs.begin(), result.rungs.end(),
                    [](const RungResult& r) {
                      return r.feasibility == Feasibility::kInfeasible;
                    });
    result.feasibility =
        all_infeasible ? Feasibility::kInfeasible : Feasibility::kUnknown;
  }
  result.wall_seconds = seconds_since(t0);
  return result;
}

AttackMatrix attack_matrix(const std::vector<double>& patient,
                           const std::vector<AttackerCapability>& ladder,
                           const std::vector<std::string>& labels,
                           const dcm::Model& model, const adm::ClusterAtlas& atlas,
                           solve::Backend& backend, const MatrixOptions& options) {
  const auto t0 = Clock::now();
  const std::size_t n_labels = labels.size();

  AttackMatrix matrix;
  matrix.labels = labels;
  matrix.patient = patient;
  matrix.patient_row = dcm::predict(model, patient);
  matrix.backend_name = backend.descriptor().name;
  matrix.cells.assign(n_labels, std::vector<MatrixCell>(n_labels));

  std::vector<int> targets;
  for (std::size_t t = 0; t < n_labels; ++t)
    if (static_cast<int>(t) != matrix.patient_row)
      targets.push_back(static_cast<int>(t));

  std::size_t n_threads = options.threads != 0
                              ? options.threads
                              : std::max<std::size_t>(
                                    1, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, targets.size());
  if (n_threads == 0) n_threads = 1;

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(targets.size());
  const EscalateOptions esc_options{options.use_monotone_shortcuts};

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= targets.size()) return;
      try {
        EscalationResult esc =
            escalate(patient, matrix.patient_row, targets[i], ladder, model,
                     atlas, backend, esc_options);
        MatrixCell& cell = matrix.cells[matrix.patient_row][targets[i]];
        cell.feasibility = esc.feasibility;
        cell.witness = std::move(esc.vector);
        cell.capability = esc.capability;
        cell.rungs = std::move(esc.rungs);
        cell.solver_calls = esc.solver_calls;
        cell.wall_seconds = esc.wall_seconds;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  matrix.wall_seconds = seconds_since(t0);
  return matrix;
}

ResiliencyReport resiliency(const std::vector<double>& patient, int source_label,
                            int target_label, std::size_t max_r, double threshold,
                            const dcm::Model& model, const adm::ClusterAtlas& atlas,
                            solve::Backend& backend) {
  if (!backend.descriptor().complete)
    throw IncompleteBackend("resiliency certification requires a complete "
                            "backend; '" + backend.descriptor().name +
                            "' cannot prove infeasibility");
  const auto t0 = Clock::now();

  ResiliencyReport report;
  report.source_label = source_label;
  report.target_label = target_label;
  report.threshold = threshold;
  report.max_r = max_r;
  report.backend_name = backend.descriptor().name;

  const std::size_t n_sensors = dcm::model_sensors(model);
  const std::size_t limit = std::min(max_r, n_sensors);

  bool inconclusive = false;
  for (std::size_t ms = 1; ms <= limit; ++ms) {
    const AttackerCapability cap{ms, threshold};
    AttackOutcome out =
        find_attack(patient, source_label, target_label, cap, model, atlas,
                    backend);
    ResiliencyCertificate cert;
    cert.max_sensors = ms;
    cert.wall_seconds = out.wall_seconds;
    if (out.feasibility == Feasibility::kInfeasible) {
      cert.verdict = solve::Verdict::kUnsat;
      report.certificates.push_back(cert);
      report.r = ms;
      continue;
    }
    if (out.feasibility == Feasibility::kFeasible) {
      cert.verdict = solve::Verdict::kSat;
      report.certificates.push_back(cert);
      report.first_feasible = cap;
      report.witness = std::move(out.vector);
    } else {
      cert.verdict = solve::Verdict::kUnknown;
      report.certificates.push_back(cert);
      inconclusive = true;
    }
    break;
  }

  report.certified = !inconclusive;
  report.wall_seconds = seconds_since(t0);
  return report;
}

std::vector<std::size_t> sensor_frequency(const std::vector<AttackVector>& vectors,
                                          std::size_t n_sensors) {
  std::vector<std::size_t> counts(n_sensors, 0);
  for (const auto& v : vectors)
    for (std::size_t s = 0; s < std::min(n_sensors, v.deltas.size()); ++s)
      if (v.deltas[s] != 0.0) ++counts[s];
  return counts;
}

}  // namespace vitalguard::threat
