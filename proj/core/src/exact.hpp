#pragma once

/// Exact rational re-evaluation of constraint systems (internal).
///
/// An SMT solver answers in exact rational arithmetic, and its models
/// routinely sit directly on constraint boundaries (simplex vertices, points
/// exactly on a polygon-strip edge). Re-checking such a model with doubles is
/// unsound in both directions: rounding the rationals can flip a strict
/// comparison that held by a hair, while adding slack flips comparisons
/// inside non-monotone connectives (a crossing-parity membership test changes
/// verdict when one extra edge predicate turns true). The satisfiability
/// guard therefore evaluates the original expressions over GMP rationals,
/// where every constant (a double, hence a dyadic rational) and every model
/// value (a ratio of integers) is representable without loss.

#include <gmpxx.h>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vitalguard/cir.hpp"

namespace vitalguard::exact {

using Rat = mpq_class;
using VarId = cir::VarId;

/// Exact value of a finite double (doubles are dyadic rationals). Throws
/// Error on NaN/infinity.
Rat rat_of_double(double d);

/// Parses a decimal numeral: [+-]digits[.digits][(e|E)[+-]digits].
/// Throws Error on anything else.
Rat decimal_to_rat(const std::string& s);

/// Parses a canonical fraction string "p" or "p/q" (base 10, sign on the
/// numerator) as produced by Rat::get_str(). Throws Error on bad input.
Rat rat_of_string(const std::string& s);

/// Correctly rounded (nearest) double of a rational, decided by exact
/// comparison of the candidate neighbours.
double nearest_double(const Rat& q);

/// Exact counterpart of cir::Assignment: a partial map VarId -> value.
class Model {
 public:
  explicit Model(std::size_t n_vars = 0) : reals_(n_vars), bools_(n_vars) {}

  void resize(std::size_t n_vars);
  void set_real(VarId id, Rat v);
  void set_bool(VarId id, bool v);
  bool has(VarId id) const;
  const Rat& real(VarId id) const;  // throws cir::UnboundVariable
  bool boolean(VarId id) const;     // throws cir::UnboundVariable
  std::size_t size() const { return reals_.size(); }

 private:
  std::vector<std::optional<Rat>> reals_;
  std::vector<std::optional<bool>> bools_;
};

Rat eval_real(const cir::ExprPtr& e, const Model& m);
bool eval_bool(const cir::ExprPtr& e, const Model& m);

/// Index of the first assertion that does not hold exactly, or nullopt when
/// the model satisfies the whole system.
std::optional<std::size_t> first_violation(const cir::Csp& csp, const Model& m);

}  // namespace vitalguard::exact
