#include "vitalguard/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

#include <unistd.h>

#include "exact.hpp"
#include "vitalguard/smtlib.hpp"
#include "vitalguard/subprocess.hpp"

namespace vitalguard::solve {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string first_lines(const std::string& s, std::size_t max_lines) {
  std::istringstream is(s);
  std::string line, out;
  std::size_t n = 0;
  while (n < max_lines && std::getline(is, line)) {
    if (!out.empty()) out += '\n';
    out += line;
    ++n;
  }
  return out;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kSat: return "sat";
    case Verdict::kUnsat: return "unsat";
    case Verdict::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string to_string(UnknownReason r) {
  switch (r) {
    case UnknownReason::kNone: return "none";
    case UnknownReason::kTimeout: return "timeout";
    case UnknownReason::kIncomplete: return "incomplete";
    case UnknownReason::kSolverUnknown: return "solver-unknown";
    case UnknownReason::kBackendError: return "backend-error";
  }
  return "none";
}

SolveResult solve(const cir::Csp& csp, Backend& backend) {
  const auto t0 = Clock::now();
  SolveResult result = backend.run(csp);
  result.backend_name = backend.descriptor().name;

  if (result.verdict == Verdict::kUnsat && !backend.descriptor().complete) {
    result.verdict = Verdict::kUnknown;
    result.reason = UnknownReason::kIncomplete;
    result.detail = "incomplete backend cannot certify unsatisfiability";
  }

  if (result.verdict == Verdict::kSat) {
    result.model.resize(csp.vars.size());
    for (cir::VarId id = 0; id < csp.vars.size(); ++id) {
      if (result.model.has(id)) continue;
      // Variables omitted from the model are don't-cares; any value works.
      if (csp.vars.kind(id) == cir::VarKind::kReal)
        result.model.set_real(id, 0.0);
      else
        result.model.set_bool(id, false);
    }
    // Certifying backends have already validated the assignment (the process
    // backend in exact rational arithmetic, where the model actually lives);
    // re-checking their rounded doubles here would misjudge models that sit
    // exactly on a constraint boundary.
    if (!backend.descriptor().certifies_models &&
        !csp.satisfied(result.model, {}))
      throw MalformedModel("backend '" + backend.descriptor().name +
                           "' returned an assignment that fails concrete "
                           "re-evaluation");
  }

  result.wall_seconds = seconds_since(t0);
  return result;
}

// ---------------------------------------------------------------------------
// External SMT-LIB process backend
// ---------------------------------------------------------------------------

SmtLibProcessBackend::SmtLibProcessBackend(std::vector<std::string> command,
                                           double timeout_seconds)
    : command_(std::move(command)) {
  if (command_.empty())
    throw BackendUnavailable("empty solver command line");
  std::string base = command_[0];
  const std::size_t slash = base.find_last_of('/');
  if (slash != std::string::npos) base = base.substr(slash + 1);
  desc_.name = "smtlib-process(" + base + ")";
  desc_.complete = true;
  desc_.certifies_models = true;  // exact rational re-validation below
  desc_.timeout_seconds = timeout_seconds;
}

SolveResult SmtLibProcessBackend::run(const cir::Csp& csp) {
  const auto t0 = Clock::now();
  SolveResult res;
  res.backend_name = desc_.name;

  const std::string script = emit_smtlib(csp);
  proc::RunResult pr;
  try {
    pr = proc::run(command_, script, desc_.timeout_seconds);
  } catch (const proc::SpawnError& e) {
    throw BackendUnavailable(e.what());
  }
  res.wall_seconds = seconds_since(t0);

  if (pr.timed_out) {
    res.verdict = Verdict::kUnknown;
    res.reason = UnknownReason::kTimeout;
    res.detail = "solver killed after " + std::to_string(desc_.timeout_seconds) +
                 " s";
    return res;
  }

  // The verdict is the first output line that is exactly sat/unsat/unknown;
  // (error ...) lines before or after it are ignored.
  std::string verdict_token;
  {
    std::istringstream is(pr.out);
    std::string line;
    while (std::getline(is, line)) {
      const std::string t = trim(line);
      if (t == "sat" || t == "unsat" || t == "unknown") {
        verdict_token = t;
        break;
      }
    }
  }

  if (verdict_token.empty()) {
    res.verdict = Verdict::kUnknown;
    res.reason = UnknownReason::kBackendError;
    res.detail = "no verdict in solver output; stderr: " +
                 first_lines(pr.err.empty() ? pr.out : pr.err, 5);
    return res;
  }
  if (verdict_token == "unsat") {
    res.verdict = Verdict::kUnsat;
    return res;
  }
  if (verdict_token == "unknown") {
    res.verdict = Verdict::kUnknown;
    res.reason = UnknownReason::kSolverUnknown;
    res.detail = first_lines(pr.err, 3);
    return res;
  }

  try {
    const ParsedModel parsed = parse_model(pr.out);
    exact::Model em(csp.vars.size());
    res.model.resize(csp.vars.size());
    for (const auto& [name, value] : parsed.exact) {
      const auto id = csp.vars.find(name);
      if (id && csp.vars.kind(*id) == cir::VarKind::kReal) {
        exact::Rat q = exact::rat_of_string(value);
        res.model.set_real(*id, exact::nearest_double(q));
        em.set_real(*id, std::move(q));
      }
    }
    for (const auto& [name, value] : parsed.bools) {
      const auto id = csp.vars.find(name);
      if (id && csp.vars.kind(*id) == cir::VarKind::kBool) {
        res.model.set_bool(*id, value);
        em.set_bool(*id, value);
      }
    }
    for (cir::VarId id = 0; id < csp.vars.size(); ++id) {
      if (em.has(id)) continue;  // omitted => don't-care
      if (csp.vars.kind(id) == cir::VarKind::kReal) {
        em.set_real(id, exact::Rat(0));
        res.model.set_real(id, 0.0);
      } else {
        em.set_bool(id, false);
        res.model.set_bool(id, false);
      }
    }
    // The solver answered in exact rationals; check the assertions there,
    // before any rounding. This catches emission, parsing and solver bugs.
    if (const auto bad = exact::first_violation(csp, em))
      throw MalformedModel("backend '" + desc_.name +
                           "' produced a model that fails exact rational "
                           "re-evaluation at assertion #" +
                           std::to_string(*bad));
    res.verdict = Verdict::kSat;
  } catch (const ParseError& e) {
    // "sat" without a usable model is not actionable: nothing to verify.
    res.verdict = Verdict::kUnknown;
    res.reason = UnknownReason::kBackendError;
    res.detail = std::string("sat but model unreadable: ") + e.what();
  }
  return res;
}

std::vector<std::string> default_solver_command(const std::string& hint_dir) {
  if (const char* env = std::getenv("VITALGUARD_SOLVER"); env && *env) {
    std::istringstream is(env);
    std::vector<std::string> cmd;
    std::string word;
    while (is >> word) cmd.push_back(word);
    if (!cmd.empty()) return cmd;
  }
  try {
    const proc::RunResult r = proc::run({"z3", "--version"}, "", 10.0);
    if (r.exit_code == 0) return {"z3", "-in", "-smt2"};
  } catch (const proc::SpawnError&) {
  }
  if (!hint_dir.empty()) {
    const std::string wrapper = hint_dir + "/z3wasm";
    if (::access(wrapper.c_str(), X_OK) == 0) return {wrapper};
  }
  throw BackendUnavailable(
      "no SMT solver found: set VITALGUARD_SOLVER, put z3 on PATH, or pass "
      "the directory containing the bundled z3wasm wrapper");
}

// ---------------------------------------------------------------------------
// Builtin local search
// ---------------------------------------------------------------------------

namespace {

using cir::CmpOp;
using cir::ExprPtr;
using cir::Kind;

constexpr double kStrictFloor = 1e-9;

/// How far an assignment is from satisfying `e` (0 iff satisfied exactly).
/// And sums child distances, Or takes the closest child, comparisons use
/// their residual; the floor keeps strict violations visible.
double violation(const ExprPtr& e, const cir::Assignment& a) {
  switch (e->kind) {
    case Kind::kBoolConst:
      return e->bool_value ? 0.0 : 1.0;
    case Kind::kBoolVar:
      return a.boolean(e->var) ? 0.0 : 1.0;
    case Kind::kNot:
      return cir::eval_bool(e->children[0], a) ? 1.0 : 0.0;
    case Kind::kAnd: {
      double sum = 0.0;
      for (const auto& c : e->children) sum += violation(c, a);
      return sum;
    }
    case Kind::kOr: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : e->children) best = std::min(best, violation(c, a));
      return e->children.empty() ? 1.0 : best;
    }
    case Kind::kXor:
      return cir::eval_bool(e, a) ? 0.0 : 1.0;
    case Kind::kImplies:
      return cir::eval_bool(e->children[0], a) ? violation(e->children[1], a)
                                               : 0.0;
    case Kind::kCompare: {
      const double l = cir::eval_real(e->lhs, a);
      const double r = cir::eval_real(e->rhs, a);
      switch (e->op) {
        case CmpOp::kLt: return l < r ? 0.0 : (l - r) + kStrictFloor;
        case CmpOp::kLe: return l <= r ? 0.0 : l - r;
        case CmpOp::kGt: return l > r ? 0.0 : (r - l) + kStrictFloor;
        case CmpOp::kGe: return l >= r ? 0.0 : r - l;
        case CmpOp::kEq: return std::fabs(l - r);
      }
      return 0.0;
    }
    case Kind::kCardinality: {
      int count = 0;
      for (const auto& c : e->children)
        if (cir::eval_bool(c, a)) ++count;
      return count <= e->bound ? 0.0 : static_cast<double>(count - e->bound);
    }
    case Kind::kAbsRatio: {
      const double v = std::fabs(cir::eval_real(e->children[0], a));
      return v < e->limit ? 0.0 : (v - e->limit) + kStrictFloor;
    }
    case Kind::kRealConst:
    case Kind::kRealVar:
    case Kind::kLinear:
      return 0.0;  // unreachable at boolean positions
  }
  return 0.0;
}

struct SearchPlan {
  std::vector<cir::VarId> sampled;           // free vars with sampling boxes
  std::vector<double> box_limit;             // |value| < box_limit, per sampled
  // Functionally determined variables, in a safe evaluation order.
  struct Def {
    cir::VarId var;
    bool is_real;
    ExprPtr rhs;  // real expr / bool formula
  };
  std::vector<Def> defs;
  int cardinality_budget;
};

SearchPlan analyze(const cir::Csp& csp) {
  std::map<cir::VarId, double> boxes;
  std::map<cir::VarId, ExprPtr> real_defs;
  std::map<cir::VarId, ExprPtr> bool_defs;
  int budget = -1;

  for (const auto& a : csp.assertions) {
    if (a->kind == Kind::kAbsRatio && a->children[0]->kind == Kind::kRealVar) {
      const cir::VarId v = a->children[0]->var;
      const auto it = boxes.find(v);
      if (it == boxes.end())
        boxes[v] = a->limit;
      else
        it->second = std::min(it->second, a->limit);
    } else if (a->kind == Kind::kCompare && a->op == CmpOp::kEq &&
               a->lhs->kind == Kind::kRealVar) {
      real_defs.emplace(a->lhs->var, a->rhs);
    } else if (a->kind == Kind::kAnd && a->children.size() == 2 &&
               a->children[0]->kind == Kind::kImplies &&
               a->children[1]->kind == Kind::kImplies) {
      // iff(b, phi) lowered to (b => phi) and (phi => b).
      const auto& fwd = a->children[0];
      const auto& bwd = a->children[1];
      if (fwd->children[0]->kind == Kind::kBoolVar &&
          bwd->children[1]->kind == Kind::kBoolVar &&
          fwd->children[0]->var == bwd->children[1]->var) {
        bool_defs.emplace(fwd->children[0]->var, fwd->children[1]);
      }
    } else if (a->kind == Kind::kCardinality) {
      budget = budget < 0 ? a->bound : std::min(budget, a->bound);
    }
  }

  SearchPlan plan;
  for (cir::VarId id = 0; id < csp.vars.size(); ++id) {
    if (csp.vars.kind(id) == cir::VarKind::kReal) {
      if (const auto box = boxes.find(id); box != boxes.end()) {
        plan.sampled.push_back(id);
        plan.box_limit.push_back(box->second);
      } else if (!real_defs.count(id)) {
        throw NoBoxBounds("variable '" + csp.vars.name(id) +
                          "' has neither a perturbation box nor a defining "
                          "equality; use the external solver backend");
      }
    } else if (!bool_defs.count(id)) {
      throw NoBoxBounds("boolean variable '" + csp.vars.name(id) +
                        "' has no defining biconditional; use the external "
                        "solver backend");
    }
  }

  // Order the definitions so each evaluates only already-assigned variables:
  // dry-run fixpoint with the sampled variables pinned to zero.
  cir::Assignment dry(csp.vars.size());
  for (const cir::VarId v : plan.sampled) dry.set_real(v, 0.0);
  std::vector<std::pair<cir::VarId, ExprPtr>> pending;
  for (const auto& [v, rhs] : real_defs)
    if (!dry.has(v)) pending.emplace_back(v, rhs);
  std::size_t remaining_bools = 0;
  for (const auto& [v, rhs] : bool_defs) {
    (void)v;
    (void)rhs;
    ++remaining_bools;
  }

  bool progress = true;
  while (progress && !pending.empty()) {
    progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      try {
        dry.set_real(it->first, cir::eval_real(it->second, dry));
        plan.defs.push_back({it->first, true, it->second});
        it = pending.erase(it);
        progress = true;
      } catch (const cir::UnboundVariable&) {
        ++it;
      }
    }
  }
  if (!pending.empty())
    throw NoBoxBounds("cyclic variable definitions; use the external solver "
                      "backend");
  // Boolean definitions only reference real variables, so they come last.
  for (const auto& [v, rhs] : bool_defs) plan.defs.push_back({v, false, rhs});

  plan.cardinality_budget =
      budget < 0 ? static_cast<int>(plan.sampled.size()) : budget;
  return plan;
}

void propagate(const SearchPlan& plan, cir::Assignment& a) {
  for (const auto& def : plan.defs) {
    if (def.is_real)
      a.set_real(def.var, cir::eval_real(def.rhs, a));
    else
      a.set_bool(def.var, cir::eval_bool(def.rhs, a));
  }
}

double total_violation(const cir::Csp& csp, const cir::Assignment& a) {
  double sum = 0.0;
  for (const auto& e : csp.assertions) sum += violation(e, a);
  return sum;
}

}  // namespace

BuiltinSearchBackend::BuiltinSearchBackend(const BuiltinSearchParams& params,
                                           double timeout_seconds)
    : params_(params) {
  desc_.name = "builtin-search";
  desc_.complete = false;
  desc_.timeout_seconds = timeout_seconds;
}

SolveResult BuiltinSearchBackend::run(const cir::Csp& csp) {
  const auto t0 = Clock::now();
  SolveResult res;
  res.backend_name = desc_.name;

  const SearchPlan plan = analyze(csp);
  const std::size_t n_sampled = plan.sampled.size();
  const std::size_t subset_size = std::min<std::size_t>(
      n_sampled, static_cast<std::size_t>(std::max(plan.cardinality_budget, 0)));

  Rng root(params_.seed);
  cir::Assignment a(csp.vars.size());
  std::vector<std::size_t> order(n_sampled);

  double best_seen = std::numeric_limits<double>::infinity();
  bool timed_out = false;

  static constexpr double kSteps[] = {0.5,  -0.5,  0.25,  -0.25, 0.1, -0.1,
                                      0.03, -0.03, 0.01,  -0.01};

  for (std::size_t restart = 0; restart < params_.restarts && !timed_out;
       ++restart) {
    Rng rng = root.child(restart + 1);
    for (std::size_t i = 0; i < n_sampled; ++i) order[i] = i;
    deterministic_shuffle(order, rng);
    // Only the first `subset_size` variables move; the rest stay zero so the
    // access-count budget holds by construction.
    for (std::size_t i = 0; i < n_sampled; ++i)
      a.set_real(plan.sampled[order[i]], 0.0);

    cir::Assignment best = a;
    double best_v = std::numeric_limits<double>::infinity();

    const std::size_t samples = std::max<std::size_t>(params_.samples_per_restart, 1);
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t i = 0; i < subset_size; ++i) {
        const std::size_t k = order[i];
        const double limit = plan.box_limit[k] * 0.999;
        a.set_real(plan.sampled[k], (rng.uniform01() * 2.0 - 1.0) * limit);
      }
      propagate(plan, a);
      const double v = total_violation(csp, a);
      if (v < best_v) {
        best_v = v;
        best = a;
        if (v == 0.0) break;
      }
      if (seconds_since(t0) > desc_.timeout_seconds) {
        timed_out = true;
        break;
      }
    }

    // Coordinate descent from the best sample of this restart.
    a = best;
    for (std::size_t iter = 0;
         iter < params_.descent_iterations && best_v > 0.0 && !timed_out;
         ++iter) {
      bool improved = false;
      for (std::size_t i = 0; i < subset_size; ++i) {
        const std::size_t k = order[i];
        const cir::VarId var = plan.sampled[k];
        const double limit = plan.box_limit[k] * 0.999;
        const double base = a.real(var);
        double chosen = base;
        for (const double frac : kSteps) {
          const double cand =
              std::clamp(base + frac * plan.box_limit[k], -limit, limit);
          if (cand == chosen) continue;
          a.set_real(var, cand);
          propagate(plan, a);
          const double v = total_violation(csp, a);
          if (v < best_v) {
            best_v = v;
            chosen = cand;
          }
        }
        // Also try switching this sensor off entirely.
        if (base != 0.0) {
          a.set_real(var, 0.0);
          propagate(plan, a);
          const double v = total_violation(csp, a);
          if (v < best_v) {
            best_v = v;
            chosen = 0.0;
          }
        }
        if (chosen != base) improved = true;
        a.set_real(var, chosen);
        propagate(plan, a);
      }
      if (!improved) break;
      if (seconds_since(t0) > desc_.timeout_seconds) timed_out = true;
    }

    best_seen = std::min(best_seen, best_v);
    if (best_v == 0.0) {
      propagate(plan, a);
      res.verdict = Verdict::kSat;
      res.model = a;
      res.wall_seconds = seconds_since(t0);
      return res;
    }
  }

  res.verdict = Verdict::kUnknown;
  res.reason = timed_out ? UnknownReason::kTimeout : UnknownReason::kIncomplete;
  res.detail = "best residual violation " + std::to_string(best_seen);
  res.wall_seconds = seconds_since(t0);
  return res;
}

}  // namespace vitalguard::solve
