#include "exact.hpp"

#include <cmath>
#include <cctype>
#include <stdexcept>
#include <utility>

namespace vitalguard::exact {

Rat rat_of_double(double d) {
  if (!std::isfinite(d))
    throw Error("cannot represent a non-finite double as a rational");
  return Rat(d);  // exact: mpq_set_d performs no rounding
}

Rat decimal_to_rat(const std::string& s) {
  std::size_t i = 0;
  const std::size_t n = s.size();
  bool negative = false;
  if (i < n && (s[i] == '+' || s[i] == '-')) {
    negative = s[i] == '-';
    ++i;
  }
  std::string digits;
  long frac_digits = 0;
  bool any = false;
  while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) {
    digits += s[i++];
    any = true;
  }
  if (i < n && s[i] == '.') {
    ++i;
    while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) {
      digits += s[i++];
      ++frac_digits;
      any = true;
    }
  }
  long exp10 = 0;
  if (any && i < n && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool exp_neg = false;
    if (i < n && (s[i] == '+' || s[i] == '-')) {
      exp_neg = s[i] == '-';
      ++i;
    }
    bool exp_any = false;
    while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) {
      exp10 = exp10 * 10 + (s[i++] - '0');
      exp_any = true;
    }
    if (!exp_any) throw Error("malformed exponent in numeral '" + s + "'");
    if (exp_neg) exp10 = -exp10;
  }
  if (!any || i != n) throw Error("malformed numeral '" + s + "'");

  mpz_class num(digits.empty() ? "0" : digits, 10);
  if (negative) num = -num;
  mpz_class den(1);
  const long shift = exp10 - frac_digits;
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
  if (shift >= 0)
    num *= pow10;
  else
    den = pow10;
  Rat q(num, den);
  q.canonicalize();
  return q;
}

Rat rat_of_string(const std::string& s) {
  try {
    Rat q(s, 10);
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument&) {
    throw Error("malformed rational '" + s + "'");
  }
}

double nearest_double(const Rat& q) {
  const double d0 = q.get_d();  // within one ulp (GMP truncates toward zero)
  if (!std::isfinite(d0)) return d0;
  double best = d0;
  Rat best_err = abs(q - rat_of_double(d0));
  for (const double cand : {std::nextafter(d0, HUGE_VAL),
                            std::nextafter(d0, -HUGE_VAL)}) {
    if (!std::isfinite(cand)) continue;
    const Rat err = abs(q - rat_of_double(cand));
    if (err < best_err) {
      best_err = err;
      best = cand;
    }
  }
  return best;
}

void Model::resize(std::size_t n_vars) {
  reals_.resize(n_vars);
  bools_.resize(n_vars);
}

void Model::set_real(VarId id, Rat v) {
  reals_.at(id) = std::move(v);
  bools_.at(id).reset();
}

void Model::set_bool(VarId id, bool v) {
  bools_.at(id) = v;
  reals_.at(id).reset();
}

bool Model::has(VarId id) const {
  return reals_.at(id).has_value() || bools_.at(id).has_value();
}

const Rat& Model::real(VarId id) const {
  const auto& slot = reals_.at(id);
  if (!slot)
    throw cir::UnboundVariable("no exact real value for variable #" +
                               std::to_string(id));
  return *slot;
}

bool Model::boolean(VarId id) const {
  const auto& slot = bools_.at(id);
  if (!slot)
    throw cir::UnboundVariable("no exact boolean value for variable #" +
                               std::to_string(id));
  return *slot;
}

Rat eval_real(const cir::ExprPtr& e, const Model& m) {
  using cir::Kind;
  switch (e->kind) {
    case Kind::kRealConst:
      return rat_of_double(e->real_value);
    case Kind::kRealVar:
      return m.real(e->var);
    case Kind::kLinear: {
      Rat acc = rat_of_double(e->constant);
      for (const auto& t : e->terms)
        acc += rat_of_double(t.coef) * eval_real(t.operand, m);
      return acc;
    }
    default:
      throw cir::TypeMismatch("boolean expression in real position");
  }
}

bool eval_bool(const cir::ExprPtr& e, const Model& m) {
  using cir::CmpOp;
  using cir::Kind;
  switch (e->kind) {
    case Kind::kBoolConst:
      return e->bool_value;
    case Kind::kBoolVar:
      return m.boolean(e->var);
    case Kind::kNot:
      return !eval_bool(e->children[0], m);
    case Kind::kAnd:
      for (const auto& c : e->children)
        if (!eval_bool(c, m)) return false;
      return true;
    case Kind::kOr:
      for (const auto& c : e->children)
        if (eval_bool(c, m)) return true;
      return false;
    case Kind::kXor: {
      bool parity = false;
      for (const auto& c : e->children) parity ^= eval_bool(c, m);
      return parity;
    }
    case Kind::kImplies:
      return !eval_bool(e->children[0], m) || eval_bool(e->children[1], m);
    case Kind::kCompare: {
      const int c = cmp(eval_real(e->lhs, m), eval_real(e->rhs, m));
      switch (e->op) {
        case CmpOp::kLt: return c < 0;
        case CmpOp::kLe: return c <= 0;
        case CmpOp::kGt: return c > 0;
        case CmpOp::kGe: return c >= 0;
        case CmpOp::kEq: return c == 0;
      }
      return false;
    }
    case Kind::kCardinality: {
      int count = 0;
      for (const auto& c : e->children)
        if (eval_bool(c, m)) ++count;
      return count <= e->bound;
    }
    case Kind::kAbsRatio:
      return abs(eval_real(e->children[0], m)) < rat_of_double(e->limit);
    default:
      throw cir::TypeMismatch("real expression in boolean position");
  }
}

std::optional<std::size_t> first_violation(const cir::Csp& csp, const Model& m) {
  for (std::size_t i = 0; i < csp.assertions.size(); ++i)
    if (!eval_bool(csp.assertions[i], m)) return i;
  return std::nullopt;
}

}  // namespace vitalguard::exact
