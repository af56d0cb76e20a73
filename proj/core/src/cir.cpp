#include "vitalguard/cir.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace vitalguard::cir {
namespace {

std::shared_ptr<Expr> make_mut(Kind kind) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  return e;
}

void require_real(const ExprPtr& e, const char* where) {
  if (!is_real_expr(e)) throw TypeMismatch(std::string(where) + ": expected a real expression");
}

void require_bool(const ExprPtr& e, const char* where) {
  if (!is_bool_expr(e)) throw TypeMismatch(std::string(where) + ": expected a boolean expression");
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// VarTable
// ---------------------------------------------------------------------------

VarId VarTable::add(const std::string& name, VarKind kind) {
  if (name.empty()) throw Error("variable name must not be empty");
  if (find(name)) throw Error("duplicate variable name: " + name);
  names_.push_back(name);
  kinds_.push_back(kind);
  if (kind == VarKind::kReal) ++real_count_;
  return names_.size() - 1;
}

VarId VarTable::add_real(const std::string& name) { return add(name, VarKind::kReal); }
VarId VarTable::add_bool(const std::string& name) { return add(name, VarKind::kBool); }

std::optional<VarId> VarTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

bool is_real_expr(const ExprPtr& e) {
  return e && (e->kind == Kind::kRealConst || e->kind == Kind::kRealVar ||
               e->kind == Kind::kLinear);
}

bool is_bool_expr(const ExprPtr& e) { return e && !is_real_expr(e); }

ExprPtr real_const(double v) {
  auto e = make_mut(Kind::kRealConst);
  e->real_value = v;
  return e;
}

ExprPtr bool_const(bool v) {
  auto e = make_mut(Kind::kBoolConst);
  e->bool_value = v;
  return e;
}

ExprPtr real_var(VarId id) {
  auto e = make_mut(Kind::kRealVar);
  e->var = id;
  return e;
}

ExprPtr bool_var(VarId id) {
  auto e = make_mut(Kind::kBoolVar);
  e->var = id;
  return e;
}

ExprPtr linear(std::vector<LinearTerm> terms, double constant) {
  for (const auto& t : terms) {
    if (!t.operand || (t.operand->kind != Kind::kRealVar && t.operand->kind != Kind::kRealConst))
      throw TypeMismatch("linear: operands must be real variables or constants");
  }
  auto e = make_mut(Kind::kLinear);
  e->terms = std::move(terms);
  e->constant = constant;
  return e;
}

ExprPtr linear_vars(const std::vector<std::pair<double, VarId>>& terms, double constant) {
  std::vector<LinearTerm> ts;
  ts.reserve(terms.size());
  for (const auto& [c, v] : terms) ts.push_back({c, real_var(v)});
  return linear(std::move(ts), constant);
}

ExprPtr compare(CmpOp op, ExprPtr lhs, ExprPtr rhs) {
  require_real(lhs, "compare lhs");
  require_real(rhs, "compare rhs");
  auto e = make_mut(Kind::kCompare);
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

ExprPtr not_expr(ExprPtr x) {
  require_bool(x, "not");
  auto e = make_mut(Kind::kNot);
  e->children = {std::move(x)};
  return e;
}

namespace {
std::shared_ptr<Expr> nary(Kind kind, std::vector<ExprPtr> children, const char* where) {
  for (const auto& c : children) require_bool(c, where);
  auto e = make_mut(kind);
  e->children = std::move(children);
  return e;
}
}  // namespace

ExprPtr and_expr(std::vector<ExprPtr> children) {
  if (children.empty()) return bool_const(true);
  if (children.size() == 1) {
    require_bool(children[0], "and");
    return children[0];
  }
  return nary(Kind::kAnd, std::move(children), "and");
}

ExprPtr or_expr(std::vector<ExprPtr> children) {
  if (children.empty()) return bool_const(false);
  if (children.size() == 1) {
    require_bool(children[0], "or");
    return children[0];
  }
  return nary(Kind::kOr, std::move(children), "or");
}

ExprPtr xor_expr(std::vector<ExprPtr> children) {
  if (children.empty()) return bool_const(false);
  return nary(Kind::kXor, std::move(children), "xor");
}

ExprPtr implies(ExprPtr a, ExprPtr b) {
  require_bool(a, "implies");
  require_bool(b, "implies");
  auto e = make_mut(Kind::kImplies);
  e->children = {std::move(a), std::move(b)};
  return e;
}

ExprPtr iff(ExprPtr a, ExprPtr b) {
  return and_expr({implies(a, b), implies(b, a)});
}

ExprPtr cardinality_at_most(std::vector<ExprPtr> bools, int bound) {
  if (bound < 0) throw TypeMismatch("cardinality: bound must be >= 0");
  auto e = nary(Kind::kCardinality, std::move(bools), "cardinality");
  e->bound = bound;
  return e;
}

ExprPtr abs_ratio_bound(ExprPtr real, double limit) {
  require_real(real, "abs_ratio_bound");
  if (!(limit > 0.0)) throw TypeMismatch("abs_ratio_bound: limit must be > 0");
  auto e = make_mut(Kind::kAbsRatio);
  e->children = {std::move(real)};
  e->limit = limit;
  return e;
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

std::string to_sexpr(const ExprPtr& e, const VarTable& vars) {
  if (!e) return "<null>";
  std::ostringstream os;
  switch (e->kind) {
    case Kind::kRealConst:
      os << fmt_num(e->real_value);
      break;
    case Kind::kBoolConst:
      os << (e->bool_value ? "true" : "false");
      break;
    case Kind::kRealVar:
    case Kind::kBoolVar:
      os << vars.name(e->var);
      break;
    case Kind::kLinear: {
      os << "(+ " << fmt_num(e->constant);
      for (const auto& t : e->terms)
        os << " (* " << fmt_num(t.coef) << ' ' << to_sexpr(t.operand, vars) << ')';
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
      os << '(' << op << ' ' << to_sexpr(e->lhs, vars) << ' ' << to_sexpr(e->rhs, vars)
         << ')';
      break;
    }
    case Kind::kNot:
      os << "(not " << to_sexpr(e->children[0], vars) << ')';
      break;
    case Kind::kAnd:
    case Kind::kOr:
    case Kind::kXor: {
      os << '(' << (e->kind == Kind::kAnd ? "and" : e->kind == Kind::kOr ? "or" : "xor");
      for (const auto& c : e->children) os << ' ' << to_sexpr(c, vars);
      os << ')';
      break;
    }
    case Kind::kImplies:
      os << "(=> " << to_sexpr(e->children[0], vars) << ' '
         << to_sexpr(e->children[1], vars) << ')';
      break;
    case Kind::kCardinality: {
      os << "(at-most " << e->bound;
      for (const auto& c : e->children) os << ' ' << to_sexpr(c, vars);
      os << ')';
      break;
    }
    case Kind::kAbsRatio:
      os << "(abs< " << to_sexpr(e->children[0], vars) << ' ' << fmt_num(e->limit) << ')';
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Assignment / evaluation
// ---------------------------------------------------------------------------

void Assignment::resize(std::size_t n_vars) {
  reals_.resize(n_vars);
  bools_.resize(n_vars);
}

void Assignment::set_real(VarId id, double v) {
  if (id >= reals_.size()) resize(id + 1);
  reals_[id] = v;
}

void Assignment::set_bool(VarId id, bool v) {
  if (id >= bools_.size()) resize(id + 1);
  bools_[id] = v;
}

bool Assignment::has(VarId id) const {
  return (id < reals_.size() && reals_[id].has_value()) ||
         (id < bools_.size() && bools_[id].has_value());
}

double Assignment::real(VarId id) const {
  if (id >= reals_.size() || !reals_[id])
    throw UnboundVariable("real variable #" + std::to_string(id) + " is unbound");
  return *reals_[id];
}

bool Assignment::boolean(VarId id) const {
  if (id >= bools_.size() || !bools_[id])
    throw UnboundVariable("boolean variable #" + std::to_string(id) + " is unbound");
  return *bools_[id];
}

double eval_real(const ExprPtr& e, const Assignment& a) {
  switch (e->kind) {
    case Kind::kRealConst:
      return e->real_value;
    case Kind::kRealVar:
      return a.real(e->var);
    case Kind::kLinear: {
      double acc = e->constant;
      for (const auto& t : e->terms) acc += t.coef * eval_real(t.operand, a);
      return acc;
    }
    default:
      throw TypeMismatch("eval_real on a boolean expression");
  }
}

bool eval_bool(const ExprPtr& e, const Assignment& a, const EvalOptions& opts) {
  switch (e->kind) {
    case Kind::kBoolConst:
      return e->bool_value;
    case Kind::kBoolVar:
      return a.boolean(e->var);
    case Kind::kCompare: {
      const double l = eval_real(e->lhs, a);
      const double r = eval_real(e->rhs, a);
      const double s = opts.slack;
      switch (e->op) {
        case CmpOp::kLt: return l < r + s;
        case CmpOp::kLe: return l <= r + s;
        case CmpOp::kGt: return l > r - s;
        case CmpOp::kGe: return l >= r - s;
        case CmpOp::kEq: return std::fabs(l - r) <= s;
      }
      return false;
    }
    case Kind::kNot:
      return !eval_bool(e->children[0], a, opts);
    case Kind::kAnd:
      for (const auto& c : e->children)
        if (!eval_bool(c, a, opts)) return false;
      return true;
    case Kind::kOr:
      for (const auto& c : e->children)
        if (eval_bool(c, a, opts)) return true;
      return false;
    case Kind::kXor: {
      bool parity = false;
      for (const auto& c : e->children)
        if (eval_bool(c, a, opts)) parity = !parity;
      return parity;
    }
    case Kind::kImplies:
      return !eval_bool(e->children[0], a, opts) || eval_bool(e->children[1], a, opts);
    case Kind::kCardinality: {
      int n = 0;
      for (const auto& c : e->children)
        if (eval_bool(c, a, opts)) ++n;
      return n <= e->bound;
    }
    case Kind::kAbsRatio:
      return std::fabs(eval_real(e->children[0], a)) < e->limit + opts.slack;
    default:
      throw TypeMismatch("eval_bool on a real expression");
  }
}

// ---------------------------------------------------------------------------
// Csp
// ---------------------------------------------------------------------------

void Csp::assert_expr(ExprPtr e) {
  require_bool(e, "assert");
  assertions.push_back(std::move(e));
}

bool Csp::satisfied(const Assignment& a, const EvalOptions& opts) const {
  for (const auto& e : assertions)
    if (!eval_bool(e, a, opts)) return false;
  return true;
}

namespace {

std::size_t count_nodes(const ExprPtr& e) {
  if (!e) return 0;
  std::size_t n = 1;
  if (e->lhs) n += count_nodes(e->lhs);
  if (e->rhs) n += count_nodes(e->rhs);
  for (const auto& c : e->children) n += count_nodes(c);
  for (const auto& t : e->terms) n += count_nodes(t.operand);
  return n;
}

std::size_t count_clauses(const ExprPtr& e) {
  if (e->kind != Kind::kAnd) return 1;
  std::size_t n = 0;
  for (const auto& c : e->children) n += count_clauses(c);
  return n;
}

}  // namespace

CspStats csp_stats(const Csp& csp) {
  CspStats st;
  st.real_vars = csp.vars.real_count();
  st.bool_vars = csp.vars.bool_count();
  st.assertions = csp.assertions.size();
  for (const auto& e : csp.assertions) {
    st.clauses += count_clauses(e);
    st.nodes += count_nodes(e);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Encoders
// ---------------------------------------------------------------------------

namespace {

void collect_paths(const dcm::DecisionTreeModel& model, int node_idx, int target,
                   const std::vector<VarId>& vars, std::vector<ExprPtr>& conjuncts,
                   std::vector<ExprPtr>& paths) {
  const dcm::DtNode& node = model.nodes[static_cast<std::size_t>(node_idx)];
  if (node.is_leaf()) {
    if (node.leaf_label == target) paths.push_back(and_expr(conjuncts));
    return;
  }
  conjuncts.push_back(
      compare(CmpOp::kLe, real_var(vars[node.attr]), real_const(node.threshold)));
  collect_paths(model, node.left, target, vars, conjuncts, paths);
  conjuncts.back() =
      compare(CmpOp::kGt, real_var(vars[node.attr]), real_const(node.threshold));
  collect_paths(model, node.right, target, vars, conjuncts, paths);
  conjuncts.pop_back();
}

void check_target(std::size_t n_labels, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= n_labels)
    throw InvalidGoal("target label " + std::to_string(target) + " out of range");
}

void check_vars(std::size_t got, std::size_t want) {
  if (got != want)
    throw TypeMismatch("expected " + std::to_string(want) + " measurement variables, got " +
                       std::to_string(got));
}

}  // namespace

ExprPtr encode_dt(const dcm::DecisionTreeModel& model,
                  const std::vector<VarId>& measurement_vars, int target) {
  model.validate();
  check_target(model.n_labels, target);
  check_vars(measurement_vars.size(), model.n_sensors);
  std::vector<ExprPtr> conjuncts;
  std::vector<ExprPtr> paths;
  collect_paths(model, model.root, target, measurement_vars, conjuncts, paths);
  return or_expr(std::move(paths));
}

namespace {

/// Dominance constraint "logit(target) beats logit(g)" given raw-unit
/// affine forms of both logits; strict for g < target (lowest index wins
/// ties), weak for g > target.
ExprPtr dominance(const std::vector<double>& coef_diff, double const_diff,
                  const std::vector<VarId>& vars, bool strict) {
  std::vector<std::pair<double, VarId>> terms;
  for (std::size_t i = 0; i < coef_diff.size(); ++i)
    if (coef_diff[i] != 0.0) terms.push_back({coef_diff[i], vars[i]});
  return compare(strict ? CmpOp::kGt : CmpOp::kGe, linear_vars(terms, const_diff),
                 real_const(0.0));
}

}  // namespace

ExprPtr encode_lr(const dcm::LogisticRegressionModel& model,
                  const std::vector<VarId>& measurement_vars, int target) {
  model.validate();
  check_target(model.n_labels, target);
  check_vars(measurement_vars.size(), model.n_sensors);

  const auto t = static_cast<std::size_t>(target);
  std::vector<ExprPtr> parts;
  for (std::size_t g = 0; g < model.n_labels; ++g) {
    if (g == t) continue;
    std::vector<double> coef(model.n_sensors, 0.0);
    double cst = model.intercept[t] - model.intercept[g];
    for (std::size_t i = 0; i < model.n_sensors; ++i) {
      const double dw = model.weights[t][i] - model.weights[g][i];
      coef[i] = dw / model.scaler.stddev[i];
      cst -= dw * model.scaler.mean[i] / model.scaler.stddev[i];
    }
    parts.push_back(dominance(coef, cst, measurement_vars, /*strict=*/g < t));
  }
  return and_expr(std::move(parts));
}

ExprPtr encode_nn(const dcm::NeuralNetworkModel& model,
                  const std::vector<VarId>& measurement_vars, int target,
                  VarTable& vars) {
  model.validate();
  check_target(model.n_labels, target);
  check_vars(measurement_vars.size(), model.n_sensors);

  std::vector<ExprPtr> parts;
  std::vector<VarId> prev = measurement_vars;

  for (std::size_t m = 0; m < model.hidden.size(); ++m) {
    std::vector<VarId> post_ids(model.hidden[m]);
    for (std::size_t o = 0; o < model.hidden[m]; ++o) {
      const std::string suffix = std::to_string(m) + "_" + std::to_string(o);
      const VarId pre = vars.add_real("nn_pre_" + suffix);
      const VarId post = vars.add_real("nn_post_" + suffix);
      post_ids[o] = post;

      // Affine map into the pre-activation. The first layer folds the
      // scaler so the constraint ranges over raw measurements.
      std::vector<std::pair<double, VarId>> terms;
      double cst = model.biases[m][o];
      for (std::size_t i = 0; i < prev.size(); ++i) {
        double w = model.weights[m][o][i];
        if (m == 0) {
          cst -= w * model.scaler.mean[i] / model.scaler.stddev[i];
          w /= model.scaler.stddev[i];
        }
        if (w != 0.0) terms.push_back({w, prev[i]});
      }
      parts.push_back(compare(CmpOp::kEq, real_var(pre), linear_vars(terms, cst)));

      // Exact ReLU case split.
      parts.push_back(or_expr(
          {and_expr({compare(CmpOp::kLe, real_var(pre), real_const(0.0)),
                     compare(CmpOp::kEq, real_var(post), real_const(0.0))}),
           and_expr({compare(CmpOp::kGt, real_var(pre), real_const(0.0)),
                     compare(CmpOp::kEq, real_var(post), real_var(pre))})}));
    }
    prev = std::move(post_ids);
  }

  const std::size_t L = model.hidden.size();
  const auto t = static_cast<std::size_t>(target);
  for (std::size_t g = 0; g < model.n_labels; ++g) {
    if (g == t) continue;
    std::vector<double> coef(prev.size(), 0.0);
    for (std::size_t i = 0; i < prev.size(); ++i)
      coef[i] = model.weights[L][t][i] - model.weights[L][g][i];
    parts.push_back(dominance(coef, model.biases[L][t] - model.biases[L][g], prev,
                              /*strict=*/g < t));
  }
  return and_expr(std::move(parts));
}

ExprPtr encode_membership(const adm::Polygon& polygon, VarId x, VarId y) {
  polygon.validate();
  std::vector<ExprPtr> crossings;
  for (const adm::LineSegment& s : polygon.segments()) {
    if (s.horizontal()) {
      // The half-open range a.y < y <= b.y is empty for horizontal edges.
      crossings.push_back(bool_const(false));
      continue;
    }
    ExprPtr in_range = and_expr({compare(CmpOp::kGt, real_var(y), real_const(s.a.y)),
                                 compare(CmpOp::kLe, real_var(y), real_const(s.b.y))});
    // Strictly left of the upward segment: (b.x-a.x)(y-a.y) - (b.y-a.y)(x-a.x) > 0.
    const double dx = s.b.x - s.a.x;
    const double dy = s.b.y - s.a.y;
    ExprPtr left = compare(
        CmpOp::kGt,
        linear_vars({{-dy, x}, {dx, y}}, dy * s.a.x - dx * s.a.y),
        real_const(0.0));
    crossings.push_back(and_expr({std::move(in_range), std::move(left)}));
  }
  return xor_expr(std::move(crossings));
}

ExprPtr encode_consistency(const adm::ClusterAtlas& atlas, int label,
                           const std::vector<VarId>& measurement_vars) {
  if (label < 0 || static_cast<std::size_t>(label) >= atlas.n_labels)
    throw InvalidGoal("label " + std::to_string(label) + " not in atlas");
  check_vars(measurement_vars.size(), atlas.n_sensors);

  std::vector<ExprPtr> pairs;
  for (std::size_t a = 0; a < atlas.n_sensors; ++a) {
    for (std::size_t b = a + 1; b < atlas.n_sensors; ++b) {
      const adm::AtlasEntry& entry = atlas.at({label, a, b});
      if (entry.degenerate) continue;  // vacuously consistent
      std::vector<ExprPtr> members;
      members.reserve(entry.polygons.size());
      for (const adm::Polygon& poly : entry.polygons)
        members.push_back(encode_membership(poly, measurement_vars[a], measurement_vars[b]));
      pairs.push_back(or_expr(std::move(members)));
    }
  }
  return and_expr(std::move(pairs));
}

void AttackerCapability::validate(std::size_t n_sensors) const {
  if (max_sensors < 1 || max_sensors > n_sensors)
    throw InvalidCapability("max_sensors must lie in [1, " + std::to_string(n_sensors) +
                            "], got " + std::to_string(max_sensors));
  if (!(threshold > 0.0) || !(threshold < 1.0))
    throw InvalidCapability("threshold must lie in (0, 1), got " +
                            std::to_string(threshold));
}

AttackProblem encode_attack(const std::vector<double>& baseline, int source_label,
                            int target_label, const AttackerCapability& capability,
                            const dcm::Model& model, const adm::ClusterAtlas& atlas) {
  const std::size_t n = dcm::model_sensors(model);
  if (baseline.size() != n)
    throw TypeMismatch("baseline has " + std::to_string(baseline.size()) +
                       " measurements, model expects " + std::to_string(n));
  if (atlas.n_sensors != n)
    throw TypeMismatch("atlas sensor count mismatch");
  const std::size_t L = dcm::model_labels(model);
  check_target(L, target_label);
  check_target(L, source_label);
  if (source_label == target_label)
    throw InvalidGoal("attack goal must differ from the source label");
  capability.validate(n);

  if (dcm::predict(model, baseline) != source_label)
    throw BaselineInconsistent("model does not classify the baseline as label " +
                               std::to_string(source_label));
  if (!adm::consistent(baseline, source_label, atlas))
    throw BaselineInconsistent("baseline is not pairwise consistent with label " +
                               std::to_string(source_label));

  AttackProblem prob;
  prob.baseline = baseline;
  prob.source_label = source_label;
  prob.target_label = target_label;
  prob.capability = capability;
  prob.csp.comment = "attack " + std::to_string(source_label) + "->" +
                     std::to_string(target_label) +
                     " max_sensors=" + std::to_string(capability.max_sensors) +
                     " threshold=" + std::to_string(capability.threshold);

  VarTable& vars = prob.csp.vars;
  for (std::size_t s = 0; s < n; ++s)
    prob.measurement_vars.push_back(vars.add_real("pb_" + std::to_string(s)));
  for (std::size_t s = 0; s < n; ++s)
    prob.delta_vars.push_back(vars.add_real("d_" + std::to_string(s)));
  for (std::size_t s = 0; s < n; ++s)
    prob.access_vars.push_back(vars.add_bool("a_" + std::to_string(s)));

  // measurement = baseline + delta
  for (std::size_t s = 0; s < n; ++s)
    prob.csp.assert_expr(compare(CmpOp::kEq, real_var(prob.measurement_vars[s]),
                                 linear_vars({{1.0, prob.delta_vars[s]}}, baseline[s])));

  // The classifier reaches the goal on the perturbed measurements.
  if (const auto* dt = std::get_if<dcm::DecisionTreeModel>(&model)) {
    prob.csp.assert_expr(encode_dt(*dt, prob.measurement_vars, target_label));
  } else if (const auto* lr = std::get_if<dcm::LogisticRegressionModel>(&model)) {
    prob.csp.assert_expr(encode_lr(*lr, prob.measurement_vars, target_label));
  } else {
    prob.csp.assert_expr(encode_nn(std::get<dcm::NeuralNetworkModel>(model),
                                   prob.measurement_vars, target_label, vars));
  }

  // The perturbed measurements stay pairwise plausible for the goal label.
  prob.csp.assert_expr(encode_consistency(atlas, target_label, prob.measurement_vars));

  // access_s <-> delta_s != 0
  for (std::size_t s = 0; s < n; ++s) {
    ExprPtr touched = not_expr(
        compare(CmpOp::kEq, real_var(prob.delta_vars[s]), real_const(0.0)));
    prob.csp.assert_expr(iff(bool_var(prob.access_vars[s]), std::move(touched)));
  }

  // At most max_sensors sensors are touched.
  std::vector<ExprPtr> access;
  for (VarId id : prob.access_vars) access.push_back(bool_var(id));
  prob.csp.assert_expr(cardinality_at_most(std::move(access),
                                           static_cast<int>(capability.max_sensors)));

  // Per-sensor relative perturbation bound.
  for (std::size_t s = 0; s < n; ++s) {
    const double limit =
        capability.threshold * std::max(std::fabs(baseline[s]), kEpsilonDiv);
    prob.csp.assert_expr(abs_ratio_bound(real_var(prob.delta_vars[s]), limit));
  }
  return prob;
}

}  // namespace vitalguard::cir
