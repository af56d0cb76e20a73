#pragma once

/// Constraint intermediate representation: typed expression trees over real
/// and boolean variables, a concrete evaluator, and the encoders that turn
/// classifiers, cluster polygons and attacker limits into constraints.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vitalguard/atlas.hpp"
#include "vitalguard/common.hpp"
#include "vitalguard/dcm.hpp"
#include "vitalguard/geometry.hpp"

namespace vitalguard::cir {

/// Divisor floor for relative perturbation limits: |delta| < threshold *
/// max(|baseline|, kEpsilonDiv), so near-zero baselines stay attackable
/// without dividing by zero.
inline constexpr double kEpsilonDiv = 1e-6;

class TypeMismatch : public Error {
 public:
  using Error::Error;
};

class UnboundVariable : public Error {
 public:
  using Error::Error;
};

class InvalidGoal : public Error {
 public:
  using Error::Error;
};

class InvalidCapability : public Error {
 public:
  using Error::Error;
};

class BaselineInconsistent : public Error {
 public:
  using Error::Error;
};

// -------------------------------------------------------------------------
// Variables
// -------------------------------------------------------------------------

using VarId = std::size_t;

enum class VarKind { kReal, kBool };

/// Symbol table owning every variable of a constraint system. Ids are dense
/// indices in declaration order, which keeps emission deterministic.
class VarTable {
 public:
  VarId add_real(const std::string& name);
  VarId add_bool(const std::string& name);

  std::size_t size() const { return names_.size(); }
  const std::string& name(VarId id) const { return names_.at(id); }
  VarKind kind(VarId id) const { return kinds_.at(id); }
  std::optional<VarId> find(const std::string& name) const;

  std::size_t real_count() const { return real_count_; }
  std::size_t bool_count() const { return names_.size() - real_count_; }

 private:
  VarId add(const std::string& name, VarKind kind);
  std::vector<std::string> names_;
  std::vector<VarKind> kinds_;
  std::size_t real_count_ = 0;
};

// -------------------------------------------------------------------------
// Expressions
// -------------------------------------------------------------------------

enum class Kind {
  kRealConst,
  kBoolConst,
  kRealVar,
  kBoolVar,
  kLinear,       // c0 + sum(coef_i * operand_i), operands are real vars/consts
  kCompare,      // lhs op rhs over real expressions
  kNot,
  kAnd,          // n-ary
  kOr,           // n-ary
  kXor,          // n-ary (odd parity)
  kImplies,      // binary
  kCardinality,  // sum of boolean children as 0/1 <= bound
  kAbsRatio,     // |child| < limit  (strict)
};

enum class CmpOp { kLt, kLe, kGt, kGe, kEq };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct LinearTerm {
  double coef = 0.0;
  ExprPtr operand;  // RealVar or RealConst
};

struct Expr {
  Kind kind;
  double real_value = 0.0;          // kRealConst
  bool bool_value = false;          // kBoolConst
  VarId var = 0;                    // kRealVar / kBoolVar
  std::vector<LinearTerm> terms;    // kLinear
  double constant = 0.0;            // kLinear
  CmpOp op = CmpOp::kEq;            // kCompare
  ExprPtr lhs, rhs;                 // kCompare
  std::vector<ExprPtr> children;    // connectives / cardinality / abs-ratio
  int bound = 0;                    // kCardinality
  double limit = 0.0;               // kAbsRatio
};

bool is_real_expr(const ExprPtr& e);
bool is_bool_expr(const ExprPtr& e);

// Factories (each validates operand types and throws TypeMismatch).
ExprPtr real_const(double v);
ExprPtr bool_const(bool v);
ExprPtr real_var(VarId id);
ExprPtr bool_var(VarId id);
ExprPtr linear(std::vector<LinearTerm> terms, double constant);
/// Convenience: c0 + sum coef_i * var_i.
ExprPtr linear_vars(const std::vector<std::pair<double, VarId>>& terms, double constant);
ExprPtr compare(CmpOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr not_expr(ExprPtr e);
ExprPtr and_expr(std::vector<ExprPtr> children);  // empty => true
ExprPtr or_expr(std::vector<ExprPtr> children);   // empty => false
ExprPtr xor_expr(std::vector<ExprPtr> children);  // odd parity; empty => false
ExprPtr implies(ExprPtr a, ExprPtr b);
/// a <-> b, lowered to (a -> b) and (b -> a).
ExprPtr iff(ExprPtr a, ExprPtr b);
ExprPtr cardinality_at_most(std::vector<ExprPtr> bools, int bound);
ExprPtr abs_ratio_bound(ExprPtr real, double limit);

/// s-expression dump (for debugging and structural assertions in tests).
std::string to_sexpr(const ExprPtr& e, const VarTable& vars);

// -------------------------------------------------------------------------
// Assignments and evaluation
// -------------------------------------------------------------------------

/// Partial map VarId -> value. Evaluating an unset variable throws
/// UnboundVariable.
class Assignment {
 public:
  explicit Assignment(std::size_t n_vars = 0) : reals_(n_vars), bools_(n_vars) {}

  void resize(std::size_t n_vars);
  void set_real(VarId id, double v);
  void set_bool(VarId id, bool v);
  bool has(VarId id) const;
  double real(VarId id) const;
  bool boolean(VarId id) const;
  std::size_t size() const { return reals_.size(); }

 private:
  std::vector<std::optional<double>> reals_;
  std::vector<std::optional<bool>> bools_;
};

struct EvalOptions {
  /// Slack added in favour of satisfaction on every comparison:
  /// lt/le pass when lhs < / <= rhs + slack, gt/ge when lhs > / >= rhs -
  /// slack, eq when |lhs - rhs| <= slack, |e| < limit when |e| < limit +
  /// slack. Zero means exact floating-point semantics.
  double slack = 0.0;
};

double eval_real(const ExprPtr& e, const Assignment& a);
bool eval_bool(const ExprPtr& e, const Assignment& a, const EvalOptions& opts = {});

// -------------------------------------------------------------------------
// Constraint systems
// -------------------------------------------------------------------------

struct Csp {
  VarTable vars;
  std::vector<ExprPtr> assertions;  // boolean, conjunctive
  std::string comment;              // emitted as a header remark

  /// Adds a boolean assertion (TypeMismatch otherwise).
  void assert_expr(ExprPtr e);

  /// All assertions hold under `a`.
  bool satisfied(const Assignment& a, const EvalOptions& opts = {}) const;
};

struct CspStats {
  std::size_t real_vars = 0;
  std::size_t bool_vars = 0;
  std::size_t assertions = 0;
  /// Assertions after flattening nested conjunctions at the root.
  std::size_t clauses = 0;
  /// Total expression-tree nodes across assertions.
  std::size_t nodes = 0;
};

CspStats csp_stats(const Csp& csp);

// -------------------------------------------------------------------------
// Encoders
// -------------------------------------------------------------------------

/// Decision tree reaching `target`: one conjunction of edge tests per
/// root-to-leaf path labelled `target` (x[attr] <= th on the left edge,
/// x[attr] > th on the right), disjoined. No such leaf yields `false`.
ExprPtr encode_dt(const dcm::DecisionTreeModel& model,
                  const std::vector<VarId>& measurement_vars, int target);

/// Logistic regression predicting `target` under lowest-index tie-breaking:
/// the target logit strictly exceeds every lower-indexed logit and weakly
/// exceeds every higher-indexed one. Weights are composed with the scaler so
/// the constraints range over raw measurements.
ExprPtr encode_lr(const dcm::LogisticRegressionModel& model,
                  const std::vector<VarId>& measurement_vars, int target);

/// ReLU network predicting `target`: introduces one pre/post real pair per
/// hidden unit in `vars`, asserts the affine layer maps, the exact ReLU case
/// split (pre <= 0 and post = 0, or pre > 0 and post = pre), and output
/// dominance with the same tie-breaking as encode_lr.
ExprPtr encode_nn(const dcm::NeuralNetworkModel& model,
                  const std::vector<VarId>& measurement_vars, int target,
                  VarTable& vars);

/// Point (x, y) inside the polygon: odd parity over per-segment crossing
/// terms. Each term is (a.y < y <= b.y) and strict-left-of-segment, with the
/// left test expanded to a linear form; horizontal segments contribute the
/// constant false.
ExprPtr encode_membership(const adm::Polygon& polygon, VarId x, VarId y);

/// Conjunction over all non-degenerate pair entries of `label`: the pair
/// projection lies in at least one of the entry's polygons.
ExprPtr encode_consistency(const adm::ClusterAtlas& atlas, int label,
                           const std::vector<VarId>& measurement_vars);

/// What the attacker may do: touch at most max_sensors sensors, each by
/// strictly less than threshold * max(|baseline|, kEpsilonDiv) in absolute
/// value.
struct AttackerCapability {
  std::size_t max_sensors = 1;
  double threshold = 0.1;  // relative perturbation bound, e.g. 0.1 = 10%

  /// Throws InvalidCapability unless 1 <= max_sensors <= n_sensors and
  /// 0 < threshold < 1.
  void validate(std::size_t n_sensors) const;

  /// Componentwise order: a capability covers another when every attack
  /// admissible under the smaller one is admissible under it.
  bool covers(const AttackerCapability& other) const {
    return max_sensors >= other.max_sensors && threshold >= other.threshold;
  }

  bool operator==(const AttackerCapability&) const = default;
};

/// A ready-to-solve attack problem: the CSP plus the variable ids needed to
/// read a solution back.
struct AttackProblem {
  Csp csp;
  std::vector<VarId> measurement_vars;  // attacked measurements
  std::vector<VarId> delta_vars;        // per-sensor perturbations
  std::vector<VarId> access_vars;       // per-sensor "was touched" booleans
  std::vector<double> baseline;
  int source_label = 0;
  int target_label = 0;
  AttackerCapability capability;
};

/// Builds the attack constraint system for one patient:
///   measurement = baseline + delta            (per sensor)
///   model classifies the measurements as target_label
///   measurements are pairwise consistent with target_label
///   access_s <-> delta_s != 0                 (per sensor)
///   sum(access) <= max_sensors
///   |delta_s| < threshold * max(|baseline_s|, kEpsilonDiv)
///
/// Requires target != source, a valid capability, and a baseline the model
/// classifies as `source` and the atlas accepts for `source`
/// (BaselineInconsistent otherwise).
AttackProblem encode_attack(const std::vector<double>& baseline, int source_label,
                            int target_label, const AttackerCapability& capability,
                            const dcm::Model& model, const adm::ClusterAtlas& atlas);

}  // namespace vitalguard::cir
