// Solver-layer tests: the builtin local search, the solve() guard wrapper,
// the SMT-LIB process backend against scripted fake solvers, and solver
// command resolution.  None of these tests needs a real SMT solver.
#include "doctest.h"

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <sys/stat.h>

#include "support/fixtures.hpp"
#include "vitalguard/cir.hpp"
#include "vitalguard/common.hpp"
#include "vitalguard/solve.hpp"

namespace vg = vitalguard;
namespace cir = vitalguard::cir;
namespace solve = vitalguard::solve;

namespace {

/// d is boxed by |d| < 5, x := 10 + d, p :<=> d > 0.  The remaining
/// assertions force d into (2, 5), so the instance is satisfiable and every
/// variable is either sampled or functionally determined -- the shape the
/// builtin search requires.
struct Toy {
  cir::Csp csp;
  cir::VarId d = 0, x = 0, p = 0;
};

Toy boxed_toy() {
  Toy t;
  t.d = t.csp.vars.add_real("d");
  t.x = t.csp.vars.add_real("x");
  t.p = t.csp.vars.add_bool("p");
  t.csp.assert_expr(cir::abs_ratio_bound(cir::real_var(t.d), 5.0));
  t.csp.assert_expr(cir::compare(cir::CmpOp::kEq, cir::real_var(t.x),
                                 cir::linear_vars({{1.0, t.d}}, 10.0)));
  t.csp.assert_expr(cir::iff(
      cir::bool_var(t.p),
      cir::compare(cir::CmpOp::kGt, cir::real_var(t.d), cir::real_const(0.0))));
  t.csp.assert_expr(cir::compare(cir::CmpOp::kGt, cir::real_var(t.x),
                                 cir::real_const(12.0)));
  t.csp.assert_expr(cir::bool_var(t.p));
  return t;
}

/// A backend that returns a canned result; used to probe solve()'s guards.
class CannedBackend final : public solve::Backend {
 public:
  CannedBackend(solve::SolveResult result, bool certifies) : result_(std::move(result)) {
    desc_.name = "canned";
    desc_.complete = false;
    desc_.certifies_models = certifies;
    desc_.timeout_seconds = 1.0;
  }
  const solve::BackendDescriptor& descriptor() const override { return desc_; }
  solve::SolveResult run(const cir::Csp&) override { return result_; }

 private:
  solve::BackendDescriptor desc_;
  solve::SolveResult result_;
};

/// Builds a process backend whose "solver" is a shell one-liner.
solve::SmtLibProcessBackend fake_solver(const std::string& shell_line,
                                        double timeout_seconds = 30.0) {
  return solve::SmtLibProcessBackend({"/bin/sh", "-c", shell_line},
                                     timeout_seconds);
}

/// Sets an environment variable for the lifetime of the object.
class ScopedEnv {
 public:
  ScopedEnv(std::string name, const char* value) : name_(std::move(name)) {
    if (const char* old = std::getenv(name_.c_str())) old_ = old;
    if (value)
      ::setenv(name_.c_str(), value, 1);
    else
      ::unsetenv(name_.c_str());
  }
  ~ScopedEnv() {
    if (old_)
      ::setenv(name_.c_str(), old_->c_str(), 1);
    else
      ::unsetenv(name_.c_str());
  }

 private:
  std::string name_;
  std::optional<std::string> old_;
};

}  // namespace

TEST_SUITE("solve") {

TEST_CASE("verdict and reason names") {
  CHECK(solve::to_string(solve::Verdict::kSat) == "sat");
  CHECK(solve::to_string(solve::Verdict::kUnsat) == "unsat");
  CHECK(solve::to_string(solve::Verdict::kUnknown) == "unknown");
  CHECK(solve::to_string(solve::UnknownReason::kNone) == "none");
  CHECK(solve::to_string(solve::UnknownReason::kTimeout) == "timeout");
  CHECK(solve::to_string(solve::UnknownReason::kIncomplete) == "incomplete");
  CHECK(solve::to_string(solve::UnknownReason::kSolverUnknown) ==
        "solver-unknown");
  CHECK(solve::to_string(solve::UnknownReason::kBackendError) ==
        "backend-error");
}

TEST_CASE("builtin search solves a boxed toy instance") {
  Toy t = boxed_toy();
  solve::BuiltinSearchBackend backend({.seed = 11}, 30.0);

  CHECK(backend.descriptor().name == "builtin-search");
  CHECK_FALSE(backend.descriptor().complete);
  CHECK_FALSE(backend.descriptor().certifies_models);

  const solve::SolveResult res = solve::solve(t.csp, backend);
  REQUIRE(res.verdict == solve::Verdict::kSat);
  CHECK(res.backend_name == "builtin-search");
  CHECK(res.wall_seconds >= 0.0);

  // The model is complete and satisfies the system with zero slack.
  for (cir::VarId id = 0; id < t.csp.vars.size(); ++id)
    CHECK(res.model.has(id));
  CHECK(t.csp.satisfied(res.model, {}));
  CHECK(res.model.real(t.d) > 2.0);
  CHECK(res.model.real(t.d) < 5.0);
  CHECK(res.model.real(t.x) == doctest::Approx(10.0 + res.model.real(t.d)));
  CHECK(res.model.boolean(t.p));
}

TEST_CASE("builtin search is deterministic for a fixed seed") {
  Toy t = boxed_toy();
  solve::BuiltinSearchBackend a({.seed = 3}, 30.0);
  solve::BuiltinSearchBackend b({.seed = 3}, 30.0);
  const auto ra = solve::solve(t.csp, a);
  const auto rb = solve::solve(t.csp, b);
  REQUIRE(ra.verdict == solve::Verdict::kSat);
  REQUIRE(rb.verdict == solve::Verdict::kSat);
  CHECK(ra.model.real(t.d) == rb.model.real(t.d));
  CHECK(ra.model.real(t.x) == rb.model.real(t.x));
}

TEST_CASE("builtin search reports unknown, never unsat, when it fails") {
  // |d| < 1 together with d > 2 is unsatisfiable; an incomplete search can
  // only say "I did not find anything".
  cir::Csp csp;
  const cir::VarId d = csp.vars.add_real("d");
  csp.assert_expr(cir::abs_ratio_bound(cir::real_var(d), 1.0));
  csp.assert_expr(cir::compare(cir::CmpOp::kGt, cir::real_var(d),
                               cir::real_const(2.0)));

  solve::BuiltinSearchBackend backend({.seed = 5}, 30.0);
  const solve::SolveResult res = solve::solve(csp, backend);
  CHECK(res.verdict == solve::Verdict::kUnknown);
  CHECK(res.reason == solve::UnknownReason::kIncomplete);
  CHECK(res.detail.find("residual") != std::string::npos);
}

TEST_CASE("builtin search refuses instances it cannot sample") {
  SUBCASE("real variable with no box and no defining equality") {
    cir::Csp csp;
    const cir::VarId x = csp.vars.add_real("x");
    csp.assert_expr(cir::compare(cir::CmpOp::kGt, cir::real_var(x),
                                 cir::real_const(3.0)));
    solve::BuiltinSearchBackend backend({.seed = 1}, 5.0);
    try {
      (void)solve::solve(csp, backend);
      FAIL("expected NoBoxBounds");
    } catch (const solve::NoBoxBounds& e) {
      CHECK(std::string(e.what()).find("perturbation box") !=
            std::string::npos);
      CHECK(std::string(e.what()).find("'x'") != std::string::npos);
    }
  }

  SUBCASE("boolean variable with no defining biconditional") {
    cir::Csp csp;
    const cir::VarId d = csp.vars.add_real("d");
    const cir::VarId p = csp.vars.add_bool("p");
    csp.assert_expr(cir::abs_ratio_bound(cir::real_var(d), 1.0));
    csp.assert_expr(cir::bool_var(p));
    solve::BuiltinSearchBackend backend({.seed = 1}, 5.0);
    try {
      (void)solve::solve(csp, backend);
      FAIL("expected NoBoxBounds");
    } catch (const solve::NoBoxBounds& e) {
      CHECK(std::string(e.what()).find("biconditional") != std::string::npos);
    }
  }

  SUBCASE("cyclically defined variables") {
    cir::Csp csp;
    const cir::VarId x = csp.vars.add_real("x");
    const cir::VarId y = csp.vars.add_real("y");
    csp.assert_expr(cir::compare(cir::CmpOp::kEq, cir::real_var(x),
                                 cir::linear_vars({{1.0, y}}, 1.0)));
    csp.assert_expr(cir::compare(cir::CmpOp::kEq, cir::real_var(y),
                                 cir::linear_vars({{1.0, x}}, -1.0)));
    solve::BuiltinSearchBackend backend({.seed = 1}, 5.0);
    try {
      (void)solve::solve(csp, backend);
      FAIL("expected NoBoxBounds");
    } catch (const solve::NoBoxBounds& e) {
      CHECK(std::string(e.what()).find("cyclic") != std::string::npos);
    }
  }
}

TEST_CASE("builtin search honours the access-count budget by construction") {
  // Two boxed deltas, at most one may be active (nonzero), and the goal needs
  // |d0| large; the search must keep d1 at exactly zero.
  cir::Csp csp;
  const cir::VarId d0 = csp.vars.add_real("d0");
  const cir::VarId d1 = csp.vars.add_real("d1");
  const cir::VarId a0 = csp.vars.add_bool("a0");
  const cir::VarId a1 = csp.vars.add_bool("a1");
  csp.assert_expr(cir::abs_ratio_bound(cir::real_var(d0), 2.0));
  csp.assert_expr(cir::abs_ratio_bound(cir::real_var(d1), 2.0));
  const auto active = [&](cir::VarId d) {
    return cir::not_expr(cir::compare(cir::CmpOp::kEq, cir::real_var(d),
                                      cir::real_const(0.0)));
  };
  csp.assert_expr(cir::iff(cir::bool_var(a0), active(d0)));
  csp.assert_expr(cir::iff(cir::bool_var(a1), active(d1)));
  csp.assert_expr(cir::cardinality_at_most(
      {cir::bool_var(a0), cir::bool_var(a1)}, 1));
  csp.assert_expr(cir::compare(cir::CmpOp::kGt, cir::real_var(d0),
                               cir::real_const(1.0)));

  solve::BuiltinSearchBackend backend({.seed = 2}, 30.0);
  const solve::SolveResult res = solve::solve(csp, backend);
  REQUIRE(res.verdict == solve::Verdict::kSat);
  CHECK(res.model.real(d0) > 1.0);
  CHECK(res.model.real(d1) == 0.0);
  CHECK(res.model.boolean(a0));
  CHECK_FALSE(res.model.boolean(a1));
}

TEST_CASE("solve() degrades unsat from an incomplete backend to unknown") {
  cir::Csp csp;
  (void)csp.vars.add_real("x");
  csp.assert_expr(cir::bool_const(true));

  solve::SolveResult canned;
  canned.verdict = solve::Verdict::kUnsat;
  CannedBackend backend(canned, /*certifies=*/false);

  const solve::SolveResult res = solve::solve(csp, backend);
  CHECK(res.verdict == solve::Verdict::kUnknown);
  CHECK(res.reason == solve::UnknownReason::kIncomplete);
  CHECK(res.detail.find("cannot certify") != std::string::npos);
}

TEST_CASE("solve() fills don't-care variables in a certified model") {
  cir::Csp csp;
  const cir::VarId x = csp.vars.add_real("x");
  const cir::VarId p = csp.vars.add_bool("p");
  csp.assert_expr(cir::bool_const(true));

  solve::SolveResult canned;
  canned.verdict = solve::Verdict::kSat;  // empty model: both vars omitted
  CannedBackend backend(canned, /*certifies=*/true);

  const solve::SolveResult res = solve::solve(csp, backend);
  REQUIRE(res.verdict == solve::Verdict::kSat);
  CHECK(res.model.has(x));
  CHECK(res.model.has(p));
  CHECK(res.model.real(x) == 0.0);
  CHECK_FALSE(res.model.boolean(p));
}

TEST_CASE("solve() rejects a bogus model from a non-certifying backend") {
  cir::Csp csp;
  const cir::VarId x = csp.vars.add_real("x");
  csp.assert_expr(cir::compare(cir::CmpOp::kLt, cir::real_var(x),
                               cir::real_const(0.0)));

  solve::SolveResult canned;
  canned.verdict = solve::Verdict::kSat;
  canned.model.resize(csp.vars.size());
  canned.model.set_real(x, 5.0);  // violates x < 0

  SUBCASE("non-certifying backends are re-checked") {
    CannedBackend backend(canned, /*certifies=*/false);
    CHECK_THROWS_AS((void)solve::solve(csp, backend), solve::MalformedModel);
  }

  SUBCASE("certifying backends are trusted as-is") {
    // The guard is the backend's own validation; solve() must not re-judge
    // exact-rational models with rounded doubles.
    CannedBackend backend(canned, /*certifies=*/true);
    const solve::SolveResult res = solve::solve(csp, backend);
    CHECK(res.verdict == solve::Verdict::kSat);
    CHECK(res.model.real(x) == 5.0);
  }
}

TEST_CASE("process backend round-trips a scripted sat answer") {
  cir::Csp csp;
  const cir::VarId x = csp.vars.add_real("x");
  csp.assert_expr(cir::compare(cir::CmpOp::kLt, cir::real_var(x),
                               cir::real_const(0.0)));

  auto backend =
      fake_solver("printf 'sat\\n((define-fun x () Real (- 1.0)))\\n'");
  CHECK(backend.descriptor().name == "smtlib-process(sh)");
  CHECK(backend.descriptor().complete);
  CHECK(backend.descriptor().certifies_models);

  const solve::SolveResult res = solve::solve(csp, backend);
  REQUIRE(res.verdict == solve::Verdict::kSat);
  CHECK(res.model.real(x) == -1.0);
  CHECK(res.backend_name == "smtlib-process(sh)");
}

TEST_CASE("process backend treats omitted variables as don't-cares") {
  // The scripted model binds only an unrelated name; x is filled with zero,
  // which satisfies x < 1.
  cir::Csp csp;
  const cir::VarId x = csp.vars.add_real("x");
  csp.assert_expr(cir::compare(cir::CmpOp::kLt, cir::real_var(x),
                               cir::real_const(1.0)));

  auto backend =
      fake_solver("printf 'sat\\n((define-fun unrelated () Real 9.0))\\n'");
  const solve::SolveResult res = solve::solve(csp, backend);
  REQUIRE(res.verdict == solve::Verdict::kSat);
  CHECK(res.model.real(x) == 0.0);
}

TEST_CASE("process backend verdicts map onto the result enum") {
  cir::Csp csp;
  const cir::VarId x = csp.vars.add_real("x");
  csp.assert_expr(cir::compare(cir::CmpOp::kLt, cir::real_var(x),
                               cir::real_const(0.0)));

  SUBCASE("unsat from a complete backend stays unsat") {
    auto backend = fake_solver("printf 'unsat\\n'");
    const solve::SolveResult res = solve::solve(csp, backend);
    CHECK(res.verdict == solve::Verdict::kUnsat);
  }

  SUBCASE("an explicit unknown is tagged solver-unknown") {
    auto backend = fake_solver("printf 'unknown\\n'");
    const solve::SolveResult res = solve::solve(csp, backend);
    CHECK(res.verdict == solve::Verdict::kUnknown);
    CHECK(res.reason == solve::UnknownReason::kSolverUnknown);
  }

  SUBCASE("garbage output is a backend error") {
    auto backend = fake_solver("printf 'banana\\n'");
    const solve::SolveResult res = solve::solve(csp, backend);
    CHECK(res.verdict == solve::Verdict::kUnknown);
    CHECK(res.reason == solve::UnknownReason::kBackendError);
    CHECK(res.detail.find("no verdict") != std::string::npos);
  }

  SUBCASE("a nonzero exit with no verdict is a backend error") {
    auto backend = fake_solver("exit 7");
    const solve::SolveResult res = solve::solve(csp, backend);
    CHECK(res.verdict == solve::Verdict::kUnknown);
    CHECK(res.reason == solve::UnknownReason::kBackendError);
  }

  SUBCASE("error lines around the verdict are ignored") {
    auto backend = fake_solver(
        "printf '(error \"warming up\")\\nsat\\n"
        "((define-fun x () Real (- 2.0)))\\n'");
    const solve::SolveResult res = solve::solve(csp, backend);
    REQUIRE(res.verdict == solve::Verdict::kSat);
    CHECK(res.model.real(x) == -2.0);
  }

  SUBCASE("sat without a readable model is a backend error, not a model") {
    auto backend = fake_solver("printf 'sat\\n'");
    const solve::SolveResult res = solve::solve(csp, backend);
    CHECK(res.verdict == solve::Verdict::kUnknown);
    CHECK(res.reason == solve::UnknownReason::kBackendError);
    CHECK(res.detail.find("model unreadable") != std::string::npos);
  }
}

TEST_CASE("process backend rejects a model that fails exact re-evaluation") {
  cir::Csp csp;
  (void)csp.vars.add_real("x");
  csp.assert_expr(cir::compare(cir::CmpOp::kLt, cir::real_var(0),
                               cir::real_const(0.0)));

  auto backend = fake_solver("printf 'sat\\n((define-fun x () Real 99.0))\\n'");
  CHECK_THROWS_AS((void)solve::solve(csp, backend), solve::MalformedModel);
}

TEST_CASE("process backend times out a hung solver") {
  cir::Csp csp;
  (void)csp.vars.add_real("x");
  csp.assert_expr(cir::bool_const(true));

  auto backend = fake_solver("sleep 30", /*timeout_seconds=*/1.0);
  const auto t0 = std::chrono::steady_clock::now();
  const solve::SolveResult res = solve::solve(csp, backend);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(res.verdict == solve::Verdict::kUnknown);
  CHECK(res.reason == solve::UnknownReason::kTimeout);
  CHECK(elapsed < 10.0);
}

TEST_CASE("process backend surfaces unstartable solvers") {
  CHECK_THROWS_AS(
      solve::SmtLibProcessBackend({}, 1.0), solve::BackendUnavailable);

  cir::Csp csp;
  (void)csp.vars.add_real("x");
  csp.assert_expr(cir::bool_const(true));
  solve::SmtLibProcessBackend backend({"/nonexistent/solver-binary"}, 1.0);
  CHECK_THROWS_AS((void)solve::solve(csp, backend),
                  solve::BackendUnavailable);
}

TEST_CASE("solver command resolution") {
  SUBCASE("the environment override wins and is whitespace-split") {
    ScopedEnv env("VITALGUARD_SOLVER", "/opt/tools/z3 -in -T:42");
    const auto cmd = solve::default_solver_command("");
    REQUIRE(cmd.size() == 3);
    CHECK(cmd[0] == "/opt/tools/z3");
    CHECK(cmd[1] == "-in");
    CHECK(cmd[2] == "-T:42");
  }

  SUBCASE("an executable wrapper in the hint directory is found") {
    ScopedEnv env("VITALGUARD_SOLVER", nullptr);
    vg::testing::TempDir tmp("solver-hint");
    // Empty PATH so a system-wide z3, if any, cannot shadow the hint.
    ScopedEnv path("PATH", tmp.path().c_str());
    const std::string wrapper = tmp.file("z3wasm");
    vg::write_file(wrapper, "#!/bin/sh\nexit 0\n");
    REQUIRE(::chmod(wrapper.c_str(), 0755) == 0);

    const auto cmd = solve::default_solver_command(tmp.path().string());
    REQUIRE(cmd.size() == 1);
    CHECK(cmd[0] == wrapper);
  }

  SUBCASE("no solver anywhere raises BackendUnavailable") {
    ScopedEnv env("VITALGUARD_SOLVER", nullptr);
    vg::testing::TempDir tmp("solver-none");  // no wrapper inside
    ScopedEnv path("PATH", tmp.path().c_str());
    try {
      (void)solve::default_solver_command(tmp.path().string());
      FAIL("expected BackendUnavailable");
    } catch (const solve::BackendUnavailable& e) {
      CHECK(std::string(e.what()).find("no SMT solver") != std::string::npos);
    }
  }
}

}  // TEST_SUITE("solve")
