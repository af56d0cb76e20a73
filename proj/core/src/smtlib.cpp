#include "vitalguard/smtlib.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "exact.hpp"

namespace vitalguard::solve {
namespace {

using cir::CmpOp;
using cir::Expr;
using cir::ExprPtr;
using cir::Kind;

void emit_expr(std::ostream& os, const ExprPtr& e, const cir::VarTable& vars);

/// Xor chain as a balanced tree of binary `distinct` (p xor q == p != q for
/// booleans); balancing keeps the nesting depth logarithmic.
void emit_xor(std::ostream& os, const std::vector<ExprPtr>& xs, std::size_t lo,
              std::size_t hi, const cir::VarTable& vars) {
  if (hi - lo == 1) {
    emit_expr(os, xs[lo], vars);
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  os << "(distinct ";
  emit_xor(os, xs, lo, mid, vars);
  os << ' ';
  emit_xor(os, xs, mid, hi, vars);
  os << ')';
}

void emit_expr(std::ostream& os, const ExprPtr& e, const cir::VarTable& vars) {
  switch (e->kind) {
    case Kind::kRealConst:
      os << smt_number(e->real_value);
      break;
    case Kind::kBoolConst:
      os << (e->bool_value ? "true" : "false");
      break;
    case Kind::kRealVar:
    case Kind::kBoolVar:
      os << vars.name(e->var);
      break;
    case Kind::kLinear: {
      if (e->terms.empty()) {
        os << smt_number(e->constant);
        break;
      }
      os << "(+ " << smt_number(e->constant);
      for (const auto& t : e->terms) {
        os << " (* " << smt_number(t.coef) << ' ';
        emit_expr(os, t.operand, vars);
        os << ')';
      }
      os << ')';
      break;
    }
    case Kind::kCompare: {
      const char* op = "=";
      switch (e->op) {
        case CmpOp::kLt: op = "<"; break;
        case CmpOp::kLe: op = "<="; break;
        case CmpOp::kGt: op = ">"; break;
        case CmpOp::kGe: op = ">="; break;
        case CmpOp::kEq: op = "="; break;
      }
      os << '(' << op << ' ';
      emit_expr(os, e->lhs, vars);
      os << ' ';
      emit_expr(os, e->rhs, vars);
      os << ')';
      break;
    }
    case Kind::kNot:
      os << "(not ";
      emit_expr(os, e->children[0], vars);
      os << ')';
      break;
    case Kind::kAnd:
    case Kind::kOr: {
      os << (e->kind == Kind::kAnd ? "(and" : "(or");
      for (const auto& c : e->children) {
        os << ' ';
        emit_expr(os, c, vars);
      }
      os << ')';
      break;
    }
    case Kind::kXor:
      if (e->children.empty())
        os << "false";
      else
        emit_xor(os, e->children, 0, e->children.size(), vars);
      break;
    case Kind::kImplies:
      os << "(=> ";
      emit_expr(os, e->children[0], vars);
      os << ' ';
      emit_expr(os, e->children[1], vars);
      os << ')';
      break;
    case Kind::kCardinality: {
      os << "(<= ";
      if (e->children.empty()) {
        os << "0.0";
      } else if (e->children.size() == 1) {
        os << "(ite ";
        emit_expr(os, e->children[0], vars);
        os << " 1.0 0.0)";
      } else {
        os << "(+";
        for (const auto& c : e->children) {
          os << " (ite ";
          emit_expr(os, c, vars);
          os << " 1.0 0.0)";
        }
        os << ')';
      }
      os << ' ' << smt_number(static_cast<double>(e->bound)) << ')';
      break;
    }
    case Kind::kAbsRatio: {
      os << "(and (< ";
      emit_expr(os, e->children[0], vars);
      os << ' ' << smt_number(e->limit) << ") (> ";
      emit_expr(os, e->children[0], vars);
      os << ' ' << smt_number(-e->limit) << "))";
      break;
    }
  }
}

}  // namespace

std::string smt_number(double value) {
  if (!std::isfinite(value)) throw Error("cannot emit a non-finite number");
  if (value == 0.0) return "0.0";  // merges -0.0
  if (value < 0.0) return "(- " + smt_number(-value) + ")";

  int e2 = 0;
  std::frexp(value, &e2);
  const int exp = e2 - 53;  // value = mantissa * 2^exp for an integer mantissa

  char buf[1200];
  if (exp >= 0) {
    std::snprintf(buf, sizeof(buf), "%.0f", value);
    return std::string(buf) + ".0";
  }
  // A binary fraction terminates in decimal after exactly -exp digits, so
  // this rendering is exact, never rounded.
  const int prec = std::min(-exp, 1074);
  std::snprintf(buf, sizeof(buf), "%.*f", prec, value);
  std::string s = buf;
  const std::size_t dot = s.find('.');
  std::size_t last = s.find_last_not_of('0');
  if (last == dot) last = dot + 1;
  s.erase(last + 1);
  return s;
}

std::string emit_smtlib(const cir::Csp& csp) {
  std::ostringstream os;
  if (!csp.comment.empty()) {
    std::istringstream lines(csp.comment);
    std::string line;
    while (std::getline(lines, line)) os << "; " << line << '\n';
  }
  os << "(set-logic QF_LRA)\n";
  for (cir::VarId id = 0; id < csp.vars.size(); ++id) {
    os << "(declare-const " << csp.vars.name(id) << ' '
       << (csp.vars.kind(id) == cir::VarKind::kReal ? "Real" : "Bool") << ")\n";
  }
  for (const auto& a : csp.assertions) {
    os << "(assert ";
    emit_expr(os, a, csp.vars);
    os << ")\n";
  }
  os << "(check-sat)\n(get-model)\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Model parsing
// ---------------------------------------------------------------------------

namespace {

struct Node {
  bool is_atom = true;
  std::string atom;
  std::vector<Node> list;
};

struct Reader {
  const std::string& text;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < text.size()) {
      const char c = text[pos];
      if (c == ';') {  // comment to end of line
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  bool done() {
    skip_space();
    return pos >= text.size();
  }

  Node read() {
    skip_space();
    if (pos >= text.size()) throw ParseError("unexpected end of solver output");
    const char c = text[pos];
    if (c == '(') {
      ++pos;
      Node n;
      n.is_atom = false;
      for (;;) {
        skip_space();
        if (pos >= text.size()) throw ParseError("unbalanced '(' in solver output");
        if (text[pos] == ')') {
          ++pos;
          return n;
        }
        n.list.push_back(read());
      }
    }
    if (c == ')') throw ParseError("unbalanced ')' in solver output");
    Node n;
    if (c == '"') {  // quoted string (error messages); keep verbatim
      ++pos;
      while (pos < text.size() && text[pos] != '"') {
        n.atom += text[pos];
        ++pos;
      }
      if (pos < text.size()) ++pos;
      return n;
    }
    if (c == '|') {  // quoted symbol
      ++pos;
      while (pos < text.size() && text[pos] != '|') {
        n.atom += text[pos];
        ++pos;
      }
      if (pos < text.size()) ++pos;
      return n;
    }
    while (pos < text.size()) {
      const char d = text[pos];
      if (d == '(' || d == ')' || std::isspace(static_cast<unsigned char>(d))) break;
      n.atom += d;
      ++pos;
    }
    return n;
  }
};

exact::Rat parse_value(const Node& n) {
  if (n.is_atom) {
    if (n.atom.empty()) throw ParseError("empty numeric atom in model");
    try {
      return exact::decimal_to_rat(n.atom);
    } catch (const Error&) {
      throw ParseError("cannot parse model value '" + n.atom + "'");
    }
  }
  if (n.list.empty() || !n.list[0].is_atom)
    throw ParseError("unrecognised model value form");
  const std::string& op = n.list[0].atom;
  if (op == "-" && n.list.size() == 2) return -parse_value(n.list[1]);
  if (op == "-" && n.list.size() == 3)
    return parse_value(n.list[1]) - parse_value(n.list[2]);
  if (op == "/" && n.list.size() == 3) {
    const exact::Rat den = parse_value(n.list[2]);
    if (den == 0) throw ParseError("division by zero in model value");
    return parse_value(n.list[1]) / den;
  }
  if (op == "+") {
    exact::Rat acc = 0;
    for (std::size_t i = 1; i < n.list.size(); ++i) acc += parse_value(n.list[i]);
    return acc;
  }
  if (op == "*") {
    exact::Rat acc = 1;
    for (std::size_t i = 1; i < n.list.size(); ++i) acc *= parse_value(n.list[i]);
    return acc;
  }
  throw ParseError("unrecognised model value operator '" + op + "'");
}

void collect_define_funs(const Node& n, ParsedModel& out) {
  if (n.is_atom) return;
  if (n.list.size() >= 5 && n.list[0].is_atom && n.list[0].atom == "define-fun" &&
      n.list[1].is_atom && !n.list[2].is_atom && n.list[2].list.empty() &&
      n.list[3].is_atom) {
    const std::string& name = n.list[1].atom;
    const std::string& sort = n.list[3].atom;
    const Node& val = n.list[4];
    if (sort == "Bool") {
      if (val.is_atom && (val.atom == "true" || val.atom == "false"))
        out.bools[name] = val.atom == "true";
      return;
    }
    if (sort == "Real" || sort == "Int") {
      const exact::Rat q = parse_value(val);
      out.reals[name] = exact::nearest_double(q);
      out.exact[name] = q.get_str();
      return;
    }
    return;  // other sorts are not ours
  }
  if (!n.list.empty() && n.list[0].is_atom && n.list[0].atom == "error")
    return;  // skip solver diagnostics
  for (const Node& c : n.list) collect_define_funs(c, out);
}

}  // namespace

ParsedModel parse_model(const std::string& solver_output) {
  Reader reader{solver_output};
  ParsedModel model;
  bool found_any = false;
  while (!reader.done()) {
    const Node n = reader.read();
    const std::size_t before = model.reals.size() + model.bools.size();
    collect_define_funs(n, model);
    if (model.reals.size() + model.bools.size() > before) found_any = true;
    // `model` keyword atom inside the list is handled by the recursion.
  }
  if (!found_any) throw ParseError("no define-fun forms found in solver output");
  return model;
}

}  // namespace vitalguard::solve
