#pragma once

/// SMT-LIB v2 wire format: deterministic script emission for QF_LRA and
/// parsing of solver verdicts/models.

#include <map>
#include <string>

#include "vitalguard/cir.hpp"
#include "vitalguard/common.hpp"

namespace vitalguard::solve {

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Exact plain-decimal rendering of a finite double (never exponent
/// notation, which SMT-LIB rejects): integers as "42.0", fractions with
/// exactly the digits required to round-trip the binary value, negatives as
/// "(- 42.0)". Throws Error on NaN/infinity.
std::string smt_number(double value);

/// Full QF_LRA script: header comment, set-logic, declarations in symbol
/// table order, one assert per assertion, check-sat, get-model. Identical
/// CSPs produce byte-identical scripts.
///
/// Lowerings: Xor becomes a balanced tree of binary `distinct`; cardinality
/// becomes a sum of `(ite b 1.0 0.0)` compared to the bound; |e| < L becomes
/// a conjunction of two strict comparisons. Strict inequalities stay strict.
std::string emit_smtlib(const cir::Csp& csp);

struct ParsedModel {
  /// Nearest double of each real value (convenience view of `exact`).
  std::map<std::string, double> reals;
  /// Exact value of each real as a canonical base-10 fraction "p" or "p/q";
  /// solvers answer in exact rational arithmetic and verification must not
  /// round before re-checking.
  std::map<std::string, std::string> exact;
  std::map<std::string, bool> bools;
};

/// Extracts every nullary define-fun from solver output. Understands plain
/// decimals, negation and rational forms such as (- (/ 3.0 2.0)), skips
/// (error ...) forms. Values are parsed exactly, never through a double.
/// Throws ParseError when no model can be found.
ParsedModel parse_model(const std::string& solver_output);

}  // namespace vitalguard::solve
