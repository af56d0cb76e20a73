#pragma once

/// Attacker-facing analysis: single attack queries, capability escalation
/// ladders, full attack matrices, resiliency certification and sensor
/// statistics. Every feasible answer carries a witness that has already been
/// validated against the live models -- never only against the solver.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vitalguard/atlas.hpp"
#include "vitalguard/cir.hpp"
#include "vitalguard/dcm.hpp"
#include "vitalguard/solve.hpp"

namespace vitalguard::threat {

class EmptyLadder : public Error {
 public:
  using Error::Error;
};

/// Resiliency demands conclusive Unsat answers, which only a complete
/// backend can give.
class IncompleteBackend : public Error {
 public:
  using Error::Error;
};

using cir::AttackerCapability;

enum class Feasibility { kFeasible, kInfeasible, kUnknown, kNotApplicable };
std::string to_string(Feasibility f);

/// One concrete attack: the perturbation the attacker injects and the state
/// it produces.
struct AttackVector {
  std::vector<double> baseline;  // patient measurements before the attack
  std::vector<double> deltas;    // per-sensor injected change
  std::vector<double> altered;   // baseline + deltas
  int source_label = 0;
  int target_label = 0;
  AttackerCapability capability;
  std::string backend_name;
  bool validated = false;

  std::size_t touched_sensors() const;
};

/// True iff the vector actually works against the live models: the altered
/// measurements classify as the target label, stay consistent with the
/// anomaly atlas for it, respect the capability limits, and add up. Direct
/// evaluation only -- no solver involved.
bool validate_attack(const AttackVector& vector, const dcm::Model& model,
                     const adm::ClusterAtlas& atlas);

/// Result of one feasibility query at a fixed capability.
struct AttackOutcome {
  Feasibility feasibility = Feasibility::kUnknown;
  std::optional<AttackVector> vector;  // present iff feasible
  solve::UnknownReason unknown_reason = solve::UnknownReason::kNone;
  std::string detail;
  double wall_seconds = 0.0;
};

/// Solves one attack instance. Preconditions (checked by the encoder):
/// target != source, the model classifies the baseline as `source` and the
/// atlas accepts it. Feasible outcomes always carry a validated vector; a
/// solver model that fails validation degrades to Unknown.
AttackOutcome find_attack(const std::vector<double>& patient, int source_label,
                          int target_label, const AttackerCapability& capability,
                          const dcm::Model& model, const adm::ClusterAtlas& atlas,
                          solve::Backend& backend);

/// The paper-shaped evaluation grid: max_sensors 1..n_sensors outer,
/// threshold {5, 10, 15, 20, 25, 30}% inner; ascending in both.
std::vector<AttackerCapability> default_ladder(std::size_t n_sensors);

/// How one ladder rung was resolved. `derived` marks verdicts obtained from
/// capability monotonicity (an Unsat at a covering rung) rather than a
/// dedicated solver call.
struct RungResult {
  AttackerCapability capability;
  Feasibility feasibility = Feasibility::kUnknown;
  bool derived = false;
  double wall_seconds = 0.0;
  std::string detail;
  /// Present for every feasible rung: the validated perturbation returned by
  /// the solver for directly-queried rungs, or -- for rungs whose feasibility
  /// is derived from a covered rung -- that rung's witness, which stays valid
  /// because it touches no more sensors and no larger fractions than the
  /// covering capability allows.
  std::optional<AttackVector> vector;
};

struct EscalateOptions {
  /// Exploit capability monotonicity: an Unsat at a capability certifies
  /// Unsat at every capability it covers, so the scan can prove whole ladder
  /// prefixes infeasible with a handful of queries. Verdicts stay exact;
  /// only the number of solver calls changes.
  bool use_monotone_shortcuts = true;
};

/// Outcome of walking a capability ladder for one (source, target) goal.
struct EscalationResult {
  /// kFeasible with the ladder-minimal feasible rung; kInfeasible only when
  /// every rung is conclusively Unsat; kUnknown otherwise.
  Feasibility feasibility = Feasibility::kUnknown;
  std::optional<AttackVector> vector;
  std::optional<AttackerCapability> capability;  // rung that succeeded
  std::vector<RungResult> rungs;                 // one per ladder rung, in order
  std::size_t solver_calls = 0;
  double wall_seconds = 0.0;
};

/// Walks `ladder` in order and stops at the first feasible rung. The ladder
/// must be non-empty (EmptyLadder) and sorted ascending by
/// (max_sensors, threshold).
EscalationResult escalate(const std::vector<double>& patient, int source_label,
                          int target_label,
                          const std::vector<AttackerCapability>& ladder,
                          const dcm::Model& model, const adm::ClusterAtlas& atlas,
                          solve::Backend& backend,
                          const EscalateOptions& options = {});

struct MatrixCell {
  Feasibility feasibility = Feasibility::kNotApplicable;
  std::optional<AttackVector> witness;
  std::optional<AttackerCapability> capability;
  std::vector<RungResult> rungs;
  std::size_t solver_calls = 0;
  double wall_seconds = 0.0;
};

/// All attack goals for one patient: cells[source][target]. Only the row of
/// the patient's own label holds real queries; other rows and the diagonal
/// are kNotApplicable.
struct AttackMatrix {
  std::vector<std::string> labels;
  int patient_row = 0;
  std::vector<double> patient;
  std::vector<std::vector<MatrixCell>> cells;
  std::string backend_name;
  double wall_seconds = 0.0;
};

struct MatrixOptions {
  std::size_t threads = 0;  // 0 = hardware concurrency, capped at the row size
  bool use_monotone_shortcuts = true;
};

/// Runs escalate() for every target other than the patient's own label.
/// Cells are independent solver queries and run concurrently; the backend's
/// run() must therefore be safe to call from several threads (both shipped
/// backends are).
AttackMatrix attack_matrix(const std::vector<double>& patient,
                           const std::vector<AttackerCapability>& ladder,
                           const std::vector<std::string>& labels,
                           const dcm::Model& model, const adm::ClusterAtlas& atlas,
                           solve::Backend& backend,
                           const MatrixOptions& options = {});

/// One per-max_sensors verdict backing a resiliency claim.
struct ResiliencyCertificate {
  std::size_t max_sensors = 0;
  solve::Verdict verdict = solve::Verdict::kUnknown;
  double wall_seconds = 0.0;
};

/// "The goal is r-resilient": every attack touching at most r sensors (at
/// the stated threshold) is conclusively infeasible.
struct ResiliencyReport {
  int source_label = 0;
  int target_label = 0;
  double threshold = 0.0;
  std::size_t max_r = 0;  // how far certification was requested
  /// Largest r <= max_r with an explicit Unsat certificate at every
  /// max_sensors <= r. Zero means even single-sensor attacks exist (or the
  /// very first query was inconclusive).
  std::size_t r = 0;
  /// True when the scan ended conclusively: either a feasible capability was
  /// found at r + 1 or every max_sensors up to max_r is Unsat. False means
  /// the scan stopped on an inconclusive verdict, so the true resiliency may
  /// exceed the reported r (which is still fully certificate-backed).
  bool certified = false;
  std::optional<AttackerCapability> first_feasible;
  std::optional<AttackVector> witness;
  std::vector<ResiliencyCertificate> certificates;
  std::string backend_name;
  double wall_seconds = 0.0;
};

/// Certifies resiliency by scanning max_sensors = 1, 2, ... up to max_r,
/// collecting an explicit solver verdict at each step; stops at the first
/// Sat (which becomes first_feasible + witness) or inconclusive answer.
/// Requires a complete backend (IncompleteBackend otherwise).
ResiliencyReport resiliency(const std::vector<double>& patient, int source_label,
                            int target_label, std::size_t max_r, double threshold,
                            const dcm::Model& model, const adm::ClusterAtlas& atlas,
                            solve::Backend& backend);

/// counts[s] = number of vectors whose delta on sensor s is nonzero.
std::vector<std::size_t> sensor_frequency(const std::vector<AttackVector>& vectors,
                                          std::size_t n_sensors);

}  // namespace vitalguard::threat
