#pragma once

/// Solver backends over the constraint IR: a complete external SMT-LIB
/// process backend and an incomplete seeded local search. Every satisfying
/// assignment returned by solve() has been re-validated -- in exact rational
/// arithmetic for the SMT process backend (whose models are exact rationals
/// that may sit directly on constraint boundaries), by the concrete double
/// evaluator otherwise -- so a backend bug can cost completeness, never
/// soundness.

#include <cstdint>
#include <string>
#include <vector>

#include "vitalguard/cir.hpp"
#include "vitalguard/common.hpp"

namespace vitalguard::solve {

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

/// The backend returned an assignment that fails re-validation (exact
/// rational re-evaluation for the SMT process backend, concrete double
/// re-evaluation for backends that do not certify their models).
class MalformedModel : public Error {
 public:
  using Error::Error;
};

/// builtin_search found a real variable with no derivable sampling box.
class NoBoxBounds : public Error {
 public:
  using Error::Error;
};

enum class Verdict { kSat, kUnsat, kUnknown };

enum class UnknownReason {
  kNone,
  kTimeout,          // wall-clock deadline hit
  kIncomplete,       // search budget exhausted (builtin backend)
  kSolverUnknown,    // external solver answered "unknown"
  kBackendError,     // process/parse failure
};

std::string to_string(Verdict v);
std::string to_string(UnknownReason r);

struct BackendDescriptor {
  std::string name;
  /// Complete backends may answer Unsat; incomplete ones never do.
  bool complete = false;
  /// The backend validates satisfying assignments itself before returning
  /// them (and throws MalformedModel on a failing model); solve() re-checks
  /// models from non-certifying backends with the double evaluator.
  bool certifies_models = false;
  double timeout_seconds = 300.0;
};

struct SolveResult {
  Verdict verdict = Verdict::kUnknown;
  UnknownReason reason = UnknownReason::kNone;
  std::string detail;        // solver/stderr excerpt for diagnostics
  cir::Assignment model;     // populated iff verdict == kSat
  double wall_seconds = 0.0;
  std::string backend_name;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  /// Raw solve; callers should prefer solve(csp, backend), which re-checks
  /// satisfying assignments.
  virtual SolveResult run(const cir::Csp& csp) = 0;
};

/// Runs the backend; fills variables omitted from a satisfying assignment
/// (don't-cares) with zero/false; for backends that do not certify their own
/// models, re-evaluates every assertion concretely and throws MalformedModel
/// on failure. Unsat from an incomplete backend degrades to Unknown.
SolveResult solve(const cir::Csp& csp, Backend& backend);

// -------------------------------------------------------------------------
// External SMT-LIB process backend
// -------------------------------------------------------------------------

/// Pipes the emitted script into an external solver process (stdin ->
/// stdout), e.g. `z3 -in -smt2`. Complete. A wall-clock deadline kills the
/// child and yields Unknown(timeout). Satisfying assignments are parsed as
/// exact rationals and re-validated against the assertions in exact
/// arithmetic before being rounded for the caller (MalformedModel on
/// failure), so emission, parsing and solver bugs cannot smuggle in an
/// invalid witness.
class SmtLibProcessBackend : public Backend {
 public:
  explicit SmtLibProcessBackend(std::vector<std::string> command,
                                double timeout_seconds = 300.0);

  const BackendDescriptor& descriptor() const override { return desc_; }
  SolveResult run(const cir::Csp& csp) override;

 private:
  std::vector<std::string> command_;
  BackendDescriptor desc_;
};

/// Resolves the solver command line:
///  1. the VITALGUARD_SOLVER environment variable (whitespace-split),
///  2. `z3 -in -smt2` if z3 is on PATH,
///  3. the bundled tools/smt/z3wasm wrapper if `hint_dir` is given and the
///     wrapper exists there.
/// Throws BackendUnavailable when nothing is found.
std::vector<std::string> default_solver_command(const std::string& hint_dir = "");

// -------------------------------------------------------------------------
// Builtin local search (incomplete)
// -------------------------------------------------------------------------

struct BuiltinSearchParams {
  std::uint64_t seed = 0;
  std::size_t restarts = 24;
  std::size_t samples_per_restart = 32;
  std::size_t descent_iterations = 40;
};

/// Seeded multi-start sampling plus coordinate descent on a violation
/// measure. Sampling boxes come from the |delta| < limit constraints; other
/// variables must be functionally determined by equality/biconditional
/// assertions (NoBoxBounds otherwise). Never answers Unsat.
class BuiltinSearchBackend : public Backend {
 public:
  explicit BuiltinSearchBackend(const BuiltinSearchParams& params = {},
                                double timeout_seconds = 300.0);

  const BackendDescriptor& descriptor() const override { return desc_; }
  SolveResult run(const cir::Csp& csp) override;

 private:
  BuiltinSearchParams params_;
  BackendDescriptor desc_;
};

}  // namespace vitalguard::solve
