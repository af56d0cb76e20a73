/// Acceptance gate: ten end-to-end criteria, one pass/fail line each.
///
/// Every criterion re-derives its expected answers from an independent oracle
/// (exact rational evaluation, crossing-number ray cast, brute-force
/// clustering, central finite differences, live-model re-validation) rather
/// than from the code under test. Tolerances and budgets are pinned as named
/// constants below. The process exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vitalguard/atlas.hpp"
#include "vitalguard/cir.hpp"
#include "vitalguard/clustering.hpp"
#include "vitalguard/data.hpp"
#include "vitalguard/dcm.hpp"
#include "vitalguard/geometry.hpp"
#include "vitalguard/solve.hpp"
#include "vitalguard/threat.hpp"

#include "exact.hpp"
#include "support/oracles.hpp"

namespace vg = vitalguard;
using vg::testing::bind_network_definitions;
using Clock = std::chrono::steady_clock;

namespace {

#ifndef VITALGUARD_SMT_DIR
#define VITALGUARD_SMT_DIR ""
#endif

// ---------------------------------------------------------------------------
// Pinned constants (tolerances, budgets, sample sizes)
// ---------------------------------------------------------------------------

constexpr std::uint64_t kSeed = 7;
constexpr std::size_t kCohortRows = 1700;   // 8 sensors x 6 labels
constexpr double kTestFraction = 0.2;

// 1: encoder-model equivalence
constexpr std::size_t kEquivSamples = 10000;           // per model kind
constexpr double kBoundaryBand = 1e-6;                 // excluded margin
constexpr double kEquivBudgetSeconds = 120.0;

// 2: geometry equivalence
constexpr std::size_t kPolygonTrials = 1000;
constexpr std::size_t kPointsPerPolygon = 100;
constexpr double kGeomBand = vg::adm::kGeomEpsilon;    // excluded edge band

// 3: attack-matrix round trip
constexpr double kMatrixBudgetSeconds = 600.0;

// 5/6: banded reproductions
constexpr double kCoverageFloor = 0.75;
constexpr double kDtAccuracyFloor = 0.85;

// 7: resiliency falsification attempts
constexpr std::size_t kResiliencyProbes = 10000;
constexpr double kResiliencyThreshold = 0.30;

// 8: gradient check (3 inputs, 3 hidden units, 2 outputs)
constexpr double kGradStep = 1e-5;
constexpr double kGradTolerance = 1e-4;
// Relative error denominator floor: gradients below this magnitude are
// compared against it instead of against ~0, so exact zeros cannot divide
// the check into noise.
constexpr double kGradFloor = 1e-6;

// 9: clustering oracles
constexpr std::size_t kClusterInstances = 100;
constexpr std::size_t kClusterMaxPoints = 300;
constexpr std::size_t kKmeansInstances = 50;
constexpr double kCentroidTolerance = 1e-9;

// 10: cross-backend consistency
constexpr std::size_t kCrossBackendTarget = 50;   // satisfiable instances
constexpr std::size_t kCrossBackendAttempts = 250;
constexpr double kSolverTimeout = 120.0;          // per query, seconds

// ---------------------------------------------------------------------------
// Shared artifacts
// ---------------------------------------------------------------------------

struct Artifacts {
  vg::data::Dataset cohort;
  vg::data::Dataset train;
  vg::data::Dataset test;
  vg::dcm::Model dt;
  vg::dcm::Model lr;
  vg::dcm::Model nn;
  vg::adm::ClusterAtlas atlas;           // density clustering
  std::vector<double> patient;           // median patient of label 0
  int patient_label = 0;
  std::unique_ptr<vg::solve::Backend> solver;   // external, complete
  vg::threat::AttackMatrix matrix;       // filled by criterion 3
  bool matrix_ready = false;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

/// Median patient: per-sensor median over the label's records (the same
/// construction the CLI's --patient median:<label> uses).
std::vector<double> median_patient(const vg::data::Dataset& ds, int label) {
  const auto idx = ds.indices_of_label(label);
  std::vector<double> out(ds.schema.n_sensors());
  std::vector<double> column(idx.size());
  for (std::size_t s = 0; s < out.size(); ++s) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      column[i] = ds.records[idx[i]].measurements[s];
    std::sort(column.begin(), column.end());
    out[s] = column[column.size() / 2];
  }
  return out;
}

Artifacts build_artifacts() {
  Artifacts a;
  a.cohort = vg::data::generate_synthetic(
      vg::data::default_synthetic_config(kCohortRows), kSeed);
  vg::data::SplitResult split =
      vg::data::stratified_split(a.cohort, kTestFraction, kSeed);
  a.train = std::move(split.train);
  a.test = std::move(split.test);

  a.dt = vg::dcm::train_dt(a.train);
  a.lr = vg::dcm::train_lr(a.train);
  vg::dcm::NnParams nn_params;
  nn_params.seed = kSeed;
  a.nn = vg::dcm::train_nn(a.train, nn_params);

  vg::adm::AtlasParams params;
  params.seed = kSeed;
  params.threads = 1;
  a.atlas = vg::adm::build_atlas(a.train, vg::adm::Algorithm::kDbscan, params);

  a.patient_label = 0;
  a.patient = median_patient(a.train, a.patient_label);

  a.solver = std::make_unique<vg::solve::SmtLibProcessBackend>(
      vg::solve::default_solver_command(VITALGUARD_SMT_DIR), kSolverTimeout);
  return a;
}

// ---------------------------------------------------------------------------
// Criterion 1: encoder-model equivalence
// ---------------------------------------------------------------------------

struct EquivSample {
  std::vector<double> x;
  int predicted = 0;
};

/// Margin of the decision-tree walk: the smallest |x[attr] - threshold| along
/// the root-to-leaf path actually taken.
double dt_path_margin(const vg::dcm::DecisionTreeModel& m,
                      const std::vector<double>& x) {
  double margin = std::numeric_limits<double>::infinity();
  int node = m.root;
  while (!m.nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const vg::dcm::DtNode& nd = m.nodes[static_cast<std::size_t>(node)];
    margin = std::min(margin, std::fabs(x[nd.attr] - nd.threshold));
    node = x[nd.attr] <= nd.threshold ? nd.left : nd.right;
  }
  return margin;
}

double top2_margin(const std::vector<double>& scores) {
  double best = -std::numeric_limits<double>::infinity();
  double second = best;
  for (double s : scores) {
    if (s > best) {
      second = best;
      best = s;
    } else if (s > second) {
      second = s;
    }
  }
  return best - second;
}

/// Uniform in-range samples whose prediction sits outside the 1e-6 band
/// around every decision boundary the encoding reifies: argmax margins for
/// all models, axis-test margins for the tree, unit activation boundaries
/// for the network.
template <typename ModelT, typename MarginFn>
std::vector<EquivSample> draw_equiv_samples(const ModelT& model,
                                            const vg::data::Dataset& ds,
                                            std::uint64_t tag,
                                            MarginFn margin_of) {
  std::vector<double> lo(ds.schema.n_sensors(),
                         std::numeric_limits<double>::infinity());
  std::vector<double> hi(ds.schema.n_sensors(),
                         -std::numeric_limits<double>::infinity());
  for (const auto& rec : ds.records)
    for (std::size_t s = 0; s < lo.size(); ++s) {
      lo[s] = std::min(lo[s], rec.measurements[s]);
      hi[s] = std::max(hi[s], rec.measurements[s]);
    }

  vg::Rng rng(kSeed);
  vg::Rng child = rng.child(tag);
  std::vector<EquivSample> out;
  out.reserve(kEquivSamples);
  std::vector<double> x(lo.size());
  while (out.size() < kEquivSamples) {
    for (std::size_t s = 0; s < x.size(); ++s) x[s] = child.uniform(lo[s], hi[s]);
    if (margin_of(model, x) <= kBoundaryBand) continue;  // resample
    out.push_back({x, vg::dcm::predict(model, x)});
  }
  return out;
}

/// Exact truth of "the encoding claims label j" for every sample, checked
/// against the concrete prediction. `bind_defs` resolves the auxiliary
/// pre/post unit variables a network encoding introduces.
template <typename EncodeFn>
std::size_t count_equiv_disagreements(const std::vector<EquivSample>& samples,
                                      std::size_t n_sensors, std::size_t n_labels,
                                      bool bind_defs, EncodeFn encode) {
  std::size_t bad = 0;
  for (std::size_t j = 0; j < n_labels; ++j) {
    vg::cir::VarTable vars;
    std::vector<vg::cir::VarId> mvars(n_sensors);
    for (std::size_t s = 0; s < n_sensors; ++s)
      mvars[s] = vars.add_real("pb_" + std::to_string(s));
    const vg::cir::ExprPtr expr = encode(mvars, static_cast<int>(j), vars);

    for (const EquivSample& sample : samples) {
      vg::exact::Model em(vars.size());
      for (std::size_t s = 0; s < n_sensors; ++s)
        em.set_real(mvars[s], vg::exact::rat_of_double(sample.x[s]));
      if (bind_defs) bind_network_definitions(expr, em);
      const bool claimed = vg::exact::eval_bool(expr, em);
      if (claimed != (sample.predicted == static_cast<int>(j))) ++bad;
    }
  }
  return bad;
}

bool criterion_1(const Artifacts& a, std::string& summary) {
  const auto t0 = Clock::now();
  const std::size_t n = a.train.schema.n_sensors();
  const std::size_t labels = a.train.schema.n_labels();

  const auto& dt = std::get<vg::dcm::DecisionTreeModel>(a.dt);
  const auto& lr = std::get<vg::dcm::LogisticRegressionModel>(a.lr);
  const auto& nn = std::get<vg::dcm::NeuralNetworkModel>(a.nn);

  const auto dt_samples = draw_equiv_samples(
      dt, a.train, 101,
      [](const auto& m, const std::vector<double>& x) {
        return dt_path_margin(m, x);
      });
  const auto lr_samples = draw_equiv_samples(
      lr, a.train, 102,
      [](const auto& m, const std::vector<double>& x) {
        return top2_margin(m.logits(x));
      });
  const auto nn_samples = draw_equiv_samples(
      nn, a.train, 103,
      [](const auto& m, const std::vector<double>& x) {
        const auto trace = m.forward_trace(x);
        double margin = top2_margin(trace.output);
        for (const auto& layer : trace.pre)
          for (double pre : layer) margin = std::min(margin, std::fabs(pre));
        return margin;
      });

  const std::size_t dt_bad = count_equiv_disagreements(
      dt_samples, n, labels, false,
      [&](const std::vector<vg::cir::VarId>& mv, int j, vg::cir::VarTable&) {
        return vg::cir::encode_dt(dt, mv, j);
      });
  const std::size_t lr_bad = count_equiv_disagreements(
      lr_samples, n, labels, false,
      [&](const std::vector<vg::cir::VarId>& mv, int j, vg::cir::VarTable&) {
        return vg::cir::encode_lr(lr, mv, j);
      });
  const std::size_t nn_bad = count_equiv_disagreements(
      nn_samples, n, labels, true,
      [&](const std::vector<vg::cir::VarId>& mv, int j, vg::cir::VarTable& vt) {
        return vg::cir::encode_nn(nn, mv, j, vt);
      });

  const double secs = seconds_since(t0);
  const std::size_t total = 3 * kEquivSamples * labels;
  const std::size_t bad = dt_bad + lr_bad + nn_bad;
  summary = std::to_string(total - bad) + "/" + std::to_string(total) +
            " (sample, label) checks agree exactly (dt " +
            std::to_string(dt_bad) + " off, lr " + std::to_string(lr_bad) +
            " off, nn " + std::to_string(nn_bad) + " off) in " + fmt(secs) +
            " s (budget " + fmt(kEquivBudgetSeconds, 0) + " s)";
  return bad == 0 && secs < kEquivBudgetSeconds;
}

// ---------------------------------------------------------------------------
// Criterion 2: geometry equivalence
// ---------------------------------------------------------------------------

bool criterion_2(std::string& summary) {
  vg::Rng rng(kSeed);
  vg::Rng poly_rng = rng.child(201);
  vg::Rng point_rng = rng.child(202);

  std::size_t checked = 0;
  std::size_t skipped_band = 0;
  std::size_t disagreements = 0;
  std::size_t polygons = 0;

  while (polygons < kPolygonTrials) {
    // Random simple polygon: the hull (concave or convex, occasionally
    // simplified) of a random point cloud at a random scale and offset.
    const std::size_t n_pts = 8 + poly_rng.below(53);
    const double scale = std::pow(10.0, poly_rng.uniform(-2.0, 2.0));
    const double ox = poly_rng.uniform(-5.0, 5.0) * scale;
    const double oy = poly_rng.uniform(-5.0, 5.0) * scale;
    std::vector<vg::adm::Point2D> cloud(n_pts);
    for (auto& p : cloud) {
      p.x = ox + poly_rng.uniform(0.0, scale);
      p.y = oy + poly_rng.uniform(0.0, scale);
    }
    vg::adm::Polygon poly;
    try {
      const auto mode = poly_rng.below(3);
      poly = (mode == 0) ? vg::adm::convex_hull(cloud)
                         : vg::adm::concave_hull(cloud, 3);
      if (mode == 2) poly = vg::adm::simplify_polygon(poly, 0.05);
    } catch (const vg::adm::DegenerateGeometry&) {
      continue;  // collinear cloud; draw another
    }
    ++polygons;

    vg::cir::VarTable vars;
    const vg::cir::VarId vx = vars.add_real("x");
    const vg::cir::VarId vy = vars.add_real("y");
    const vg::cir::ExprPtr member = vg::cir::encode_membership(poly, vx, vy);

    const vg::adm::BoundingBox box = poly.bbox();
    const double pad_x = 0.2 * (box.max_x - box.min_x);
    const double pad_y = 0.2 * (box.max_y - box.min_y);
    for (std::size_t k = 0; k < kPointsPerPolygon; ++k) {
      vg::adm::Point2D p{point_rng.uniform(box.min_x - pad_x, box.max_x + pad_x),
                         point_rng.uniform(box.min_y - pad_y, box.max_y + pad_y)};
      if (vg::adm::normalized_boundary_distance(p, poly) <= kGeomBand) {
        ++skipped_band;
        continue;
      }
      const bool oracle = vg::testing::crossing_number_inside(p, poly);
      const bool parity = vg::adm::point_in_polygon_parity(p, poly);
      const bool within = vg::adm::within_cluster(p, poly, vg::adm::kGeomEpsilon);
      vg::exact::Model em(vars.size());
      em.set_real(vx, vg::exact::rat_of_double(p.x));
      em.set_real(vy, vg::exact::rat_of_double(p.y));
      const bool encoded = vg::exact::eval_bool(member, em);
      ++checked;
      if (parity != oracle || within != oracle || encoded != oracle)
        ++disagreements;
    }
  }

  summary = std::to_string(checked) + " points across " +
            std::to_string(polygons) + " polygons agree with the crossing-number"
            " oracle (" + std::to_string(disagreements) + " disagreements, " +
            std::to_string(skipped_band) + " inside the edge band skipped)";
  return disagreements == 0;
}

// ---------------------------------------------------------------------------
// Criterion 3: attack-matrix round trip
// ---------------------------------------------------------------------------

bool criterion_3(Artifacts& a, std::string& summary) {
  const auto ladder = vg::threat::default_ladder(a.train.schema.n_sensors());
  vg::threat::MatrixOptions options;
  options.threads = 1;
  a.matrix = vg::threat::attack_matrix(a.patient, ladder,
                                       a.train.schema.label_names, a.dt,
                                       a.atlas, *a.solver, options);
  a.matrix_ready = true;

  std::size_t witnesses = 0;
  std::size_t failures = 0;
  std::size_t feasible_cells = 0;
  for (const auto& row : a.matrix.cells)
    for (const auto& cell : row) {
      if (cell.feasibility == vg::threat::Feasibility::kFeasible)
        ++feasible_cells;
      if (cell.witness) {
        ++witnesses;
        if (!vg::threat::validate_attack(*cell.witness, a.dt, a.atlas))
          ++failures;
      }
      for (const auto& rung : cell.rungs)
        if (rung.vector) {
          ++witnesses;
          if (!vg::threat::validate_attack(*rung.vector, a.dt, a.atlas))
            ++failures;
        }
    }

  summary = std::to_string(witnesses) + " witnesses across " +
            std::to_string(feasible_cells) + " feasible goals all re-validate (" +
            std::to_string(failures) + " failures); full matrix in " +
            fmt(a.matrix.wall_seconds, 1) + " s (budget " +
            fmt(kMatrixBudgetSeconds, 0) + " s)";
  return failures == 0 && witnesses > 0 && feasible_cells > 0 &&
         a.matrix.wall_seconds < kMatrixBudgetSeconds;
}

// ---------------------------------------------------------------------------
// Criterion 4: feasibility monotonicity over the capability grid
// ---------------------------------------------------------------------------

bool criterion_4(const Artifacts& a, std::string& summary) {
  if (!a.matrix_ready) {
    summary = "skipped: criterion 3 did not produce a matrix";
    return false;
  }
  // counts[rung] = feasible targets at that rung; a grid cell is conclusive
  // when no target's rung result is unknown there.
  const auto& row = a.matrix.cells[static_cast<std::size_t>(a.matrix.patient_row)];
  std::vector<vg::threat::AttackerCapability> grid;
  std::map<std::pair<std::size_t, double>, std::pair<std::size_t, bool>> cells;
  for (const auto& cell : row) {
    for (const auto& rung : cell.rungs) {
      const auto key = std::make_pair(rung.capability.max_sensors,
                                      rung.capability.threshold);
      auto [it, inserted] = cells.try_emplace(key, 0u, true);
      if (inserted)
        grid.push_back(rung.capability);
      if (rung.feasibility == vg::threat::Feasibility::kFeasible)
        ++it->second.first;
      if (rung.feasibility == vg::threat::Feasibility::kUnknown)
        it->second.second = false;
    }
  }

  const auto at = [&](const vg::threat::AttackerCapability& c) {
    return cells.at({c.max_sensors, c.threshold});
  };
  std::size_t violations = 0;
  std::size_t conclusive = 0;
  std::size_t max_count = 0;
  for (const auto& c : grid)
    if (at(c).second) {
      ++conclusive;
      max_count = std::max(max_count, at(c).first);
    }
  for (const auto& weak : grid)
    for (const auto& strong : grid) {
      if (!strong.covers(weak) || strong == weak) continue;
      const auto [weak_count, weak_ok] = at(weak);
      const auto [strong_count, strong_ok] = at(strong);
      if (weak_ok && strong_ok && strong_count < weak_count) ++violations;
    }

  const vg::threat::AttackerCapability top{8, 0.30};
  const bool top_is_max = at(top).second && at(top).first == max_count;

  summary = std::to_string(violations) + " monotonicity violations among " +
            std::to_string(conclusive) + "/" + std::to_string(grid.size()) +
            " conclusive grid cells; count at (8, 30%) = " +
            std::to_string(at(top).first) + " = grid maximum " +
            std::to_string(max_count);
  return violations == 0 && top_is_max;
}

// ---------------------------------------------------------------------------
// Criterion 5 and 6: banded reproductions
// ---------------------------------------------------------------------------

bool criterion_5(const Artifacts& a, std::string& summary) {
  const vg::adm::CoverageStats cov = vg::adm::coverage(a.train, a.atlas);
  summary = "density-atlas coverage " + fmt(cov.fraction, 4) + " over " +
            std::to_string(cov.records) + " training records (floor " +
            fmt(kCoverageFloor, 2) + ")";
  return cov.fraction >= kCoverageFloor;
}

bool criterion_6(const Artifacts& a, std::string& summary) {
  const vg::dcm::Metrics m = vg::dcm::evaluate(a.dt, a.test);
  summary = "decision-tree held-out accuracy " + fmt(m.accuracy, 4) + " on " +
            std::to_string(a.test.size()) + " records (floor " +
            fmt(kDtAccuracyFloor, 2) + ")";
  return m.accuracy >= kDtAccuracyFloor;
}

// ---------------------------------------------------------------------------
// Criterion 7: resiliency soundness
// ---------------------------------------------------------------------------

bool criterion_7(const Artifacts& a, std::string& summary) {
  if (!a.matrix_ready) {
    summary = "skipped: criterion 3 did not produce a matrix";
    return false;
  }
  // Find a goal whose certified resiliency is at least 1 (Unsat for all
  // max_sensors <= r, Sat at r + 1 at the pinned threshold).
  const auto& row = a.matrix.cells[static_cast<std::size_t>(a.matrix.patient_row)];
  std::optional<vg::threat::ResiliencyReport> chosen;
  for (std::size_t target = 0; target < row.size(); ++target) {
    if (row[target].feasibility != vg::threat::Feasibility::kFeasible) continue;
    vg::threat::ResiliencyReport report = vg::threat::resiliency(
        a.patient, a.patient_label, static_cast<int>(target),
        a.train.schema.n_sensors(), kResiliencyThreshold, a.dt, a.atlas,
        *a.solver);
    if (report.certified && report.r >= 1 && report.first_feasible) {
      chosen = std::move(report);
      break;
    }
  }
  if (!chosen) {
    summary = "no goal with certified resiliency >= 1 at threshold " +
              fmt(kResiliencyThreshold, 2);
    return false;
  }
  if (!chosen->witness ||
      !vg::threat::validate_attack(*chosen->witness, a.dt, a.atlas)) {
    summary = "the feasible witness at r + 1 failed live re-validation";
    return false;
  }

  // Try to falsify the certificate: random perturbations within capability
  // (r, threshold) must all fail against the live models.
  const vg::threat::AttackerCapability cap{chosen->r, kResiliencyThreshold};
  const std::size_t n = a.patient.size();
  vg::Rng rng(kSeed);
  vg::Rng probe_rng = rng.child(701);
  std::size_t falsified = 0;
  for (std::size_t trial = 0; trial < kResiliencyProbes; ++trial) {
    vg::threat::AttackVector v;
    v.baseline = a.patient;
    v.deltas.assign(n, 0.0);
    const std::size_t touch = 1 + probe_rng.below(cap.max_sensors);
    std::vector<std::size_t> sensors(n);
    std::iota(sensors.begin(), sensors.end(), std::size_t{0});
    vg::deterministic_shuffle(sensors, probe_rng);
    for (std::size_t i = 0; i < touch; ++i) {
      const std::size_t s = sensors[i];
      const double limit = cap.threshold *
                           std::max(std::fabs(a.patient[s]), vg::cir::kEpsilonDiv);
      v.deltas[s] = probe_rng.uniform(-limit, limit) * (1.0 - 1e-12);
    }
    v.altered.resize(n);
    for (std::size_t s = 0; s < n; ++s) v.altered[s] = v.baseline[s] + v.deltas[s];
    v.source_label = chosen->source_label;
    v.target_label = chosen->target_label;
    v.capability = cap;
    if (vg::threat::validate_attack(v, a.dt, a.atlas)) ++falsified;
  }

  summary = "goal " + std::to_string(chosen->source_label) + " -> " +
            std::to_string(chosen->target_label) + " certified " +
            std::to_string(chosen->r) + "-resilient at " +
            fmt(kResiliencyThreshold, 2) + ", feasible at " +
            std::to_string(chosen->first_feasible->max_sensors) + " sensors; " +
            std::to_string(falsified) + "/" + std::to_string(kResiliencyProbes) +
            " random in-capability perturbations succeeded";
  return falsified == 0;
}

// ---------------------------------------------------------------------------
// Criterion 8: gradient check
// ---------------------------------------------------------------------------

bool criterion_8(std::string& summary) {
  // A 3-3-2 network trained briefly on a random 3-sensor problem, checked on
  // a fresh random batch.
  vg::data::SyntheticConfig config;
  config.schema.sensor_names = {"a", "b", "c"};
  config.schema.label_names = {"neg", "pos"};
  config.distributions = {
      {{1.0, 0.8, -3.0, 5.0}, {2.0, 0.8, -2.0, 6.0}, {0.0, 0.8, -4.0, 4.0}},
      {{3.0, 0.8, -1.0, 7.0}, {0.5, 0.8, -3.5, 4.5}, {1.5, 0.8, -2.5, 5.5}},
  };
  config.counts = {40, 40};
  const vg::data::Dataset ds = vg::data::generate_synthetic(config, kSeed);

  vg::dcm::NnParams params;
  params.hidden = {3};
  params.epochs = 8;
  params.seed = kSeed;
  const vg::dcm::NeuralNetworkModel model = vg::dcm::train_nn(ds, params);

  std::vector<std::vector<double>> batch;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 16; ++i) {
    batch.push_back(ds.records[i * 5 % ds.size()].measurements);
    labels.push_back(ds.records[i * 5 % ds.size()].label);
  }

  const vg::dcm::NnGradients analytic =
      vg::dcm::nn_loss_and_gradients(model, batch, labels);
  const vg::testing::NumericGradients numeric =
      vg::testing::finite_difference_gradients(model, batch, labels, kGradStep);

  double worst = 0.0;
  double largest = 0.0;
  const auto update = [&](double a, double n) {
    largest = std::max(largest, std::fabs(a));
    worst = std::max(worst,
                     std::fabs(a - n) / std::max(std::fabs(a) + std::fabs(n),
                                                 kGradFloor));
  };
  for (std::size_t m = 0; m < analytic.d_weights.size(); ++m)
    for (std::size_t o = 0; o < analytic.d_weights[m].size(); ++o) {
      for (std::size_t i = 0; i < analytic.d_weights[m][o].size(); ++i)
        update(analytic.d_weights[m][o][i], numeric.d_weights[m][o][i]);
      update(analytic.d_biases[m][o], numeric.d_biases[m][o]);
    }

  summary = "3-3-2 network: max relative gradient error " + fmt(worst, 10) +
            " (tolerance " + fmt(kGradTolerance, 6) + ", largest gradient " +
            fmt(largest, 4) + ")";
  // `largest` guards against a vacuous pass on an all-dead network.
  return worst < kGradTolerance && largest > 1e-3;
}

// ---------------------------------------------------------------------------
// Criterion 9: clustering oracles
// ---------------------------------------------------------------------------

bool criterion_9(std::string& summary) {
  vg::Rng rng(kSeed);
  vg::Rng inst_rng = rng.child(901);

  std::size_t dbscan_mismatches = 0;
  for (std::size_t trial = 0; trial < kClusterInstances; ++trial) {
    const std::size_t n = 20 + inst_rng.below(kClusterMaxPoints - 20 + 1);
    const std::size_t blobs = 1 + inst_rng.below(4);
    std::vector<vg::adm::Point2D> pts;
    pts.reserve(n);
    std::vector<vg::adm::Point2D> centres(blobs);
    for (auto& c : centres) {
      c.x = inst_rng.uniform(-10.0, 10.0);
      c.y = inst_rng.uniform(-10.0, 10.0);
    }
    while (pts.size() < n) {
      if (inst_rng.below(10) == 0) {  // 10% background noise
        pts.push_back({inst_rng.uniform(-12.0, 12.0), inst_rng.uniform(-12.0, 12.0)});
      } else {
        const auto& c = centres[inst_rng.below(blobs)];
        pts.push_back({c.x + inst_rng.gaussian() * 0.7,
                       c.y + inst_rng.gaussian() * 0.7});
      }
    }
    const double epsilon = inst_rng.uniform(0.3, 1.5);
    const std::size_t min_points = 2 + inst_rng.below(7);

    const vg::adm::ClusterResult got = vg::adm::dbscan(pts, epsilon, min_points);
    const vg::adm::ClusterResult want =
        vg::testing::brute_dbscan(pts, epsilon, min_points);
    if (got.assignment != want.assignment || got.n_clusters != want.n_clusters)
      ++dbscan_mismatches;
  }

  std::size_t kmeans_violations = 0;
  vg::Rng km_rng = rng.child(902);
  for (std::size_t trial = 0; trial < kKmeansInstances; ++trial) {
    const std::size_t n = 10 + km_rng.below(191);
    std::vector<vg::adm::Point2D> pts(n);
    for (auto& p : pts) {
      p.x = km_rng.uniform(-5.0, 5.0);
      p.y = km_rng.uniform(-5.0, 5.0);
    }
    const std::size_t k = 2 + km_rng.below(std::min<std::size_t>(5, n - 1));
    const vg::adm::ClusterResult res = vg::adm::kmeans(pts, k, trial);

    // At convergence the centroids are exactly the assigned-point means, so
    // every point must already sit closest to its own cluster's mean.
    const auto groups = res.groups();
    std::vector<vg::adm::Point2D> means(groups.size());
    for (std::size_t c = 0; c < groups.size(); ++c) {
      if (groups[c].empty()) continue;
      double sx = 0.0, sy = 0.0;
      for (std::size_t i : groups[c]) {
        sx += pts[i].x;
        sy += pts[i].y;
      }
      means[c] = {sx / static_cast<double>(groups[c].size()),
                  sy / static_cast<double>(groups[c].size())};
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int own = res.assignment[i];
      const auto d2 = [&](const vg::adm::Point2D& m) {
        const double dx = pts[i].x - m.x;
        const double dy = pts[i].y - m.y;
        return dx * dx + dy * dy;
      };
      const double own_d = d2(means[static_cast<std::size_t>(own)]);
      for (std::size_t c = 0; c < groups.size(); ++c)
        if (!groups[c].empty() && own_d > d2(means[c]) + kCentroidTolerance)
          ++kmeans_violations;
    }
  }

  summary = std::to_string(kClusterInstances) + " density instances match the "
            "brute-force oracle exactly (" + std::to_string(dbscan_mismatches) +
            " mismatches); " + std::to_string(kKmeansInstances) +
            " centroid instances at the assigned-mean fixpoint (" +
            std::to_string(kmeans_violations) + " violations at " +
            fmt(kCentroidTolerance, 12) + ")";
  return dbscan_mismatches == 0 && kmeans_violations == 0;
}

// ---------------------------------------------------------------------------
// Criterion 10: cross-backend consistency
// ---------------------------------------------------------------------------

bool criterion_10(const Artifacts& a, std::string& summary) {
  vg::Rng rng(kSeed);
  vg::Rng pick = rng.child(1001);

  std::size_t satisfiable = 0;
  std::size_t attempts = 0;
  std::size_t builtin_sat = 0;
  std::size_t revalidation_failures = 0;
  std::size_t contradictions = 0;

  while (satisfiable < kCrossBackendTarget && attempts < kCrossBackendAttempts) {
    ++attempts;
    const auto& rec = a.cohort.records[pick.below(a.cohort.size())];
    const vg::dcm::Model& model = (attempts % 2 == 0) ? a.dt : a.lr;
    const int source = vg::dcm::predict(model, rec.measurements);
    if (!vg::adm::consistent(rec.measurements, source, a.atlas)) continue;
    int target = static_cast<int>(pick.below(a.cohort.schema.n_labels()));
    if (target == source) target = (target + 1) % static_cast<int>(a.cohort.schema.n_labels());
    vg::cir::AttackerCapability cap;
    cap.max_sensors = 4 + pick.below(5);
    cap.threshold = 0.20 + 0.05 * static_cast<double>(pick.below(3));

    vg::cir::AttackProblem prob;
    try {
      prob = vg::cir::encode_attack(rec.measurements, source, target, cap,
                                    model, a.atlas);
    } catch (const vg::cir::BaselineInconsistent&) {
      continue;
    }

    const vg::solve::SolveResult external = vg::solve::solve(prob.csp, *a.solver);
    if (external.verdict != vg::solve::Verdict::kSat) continue;
    ++satisfiable;

    vg::solve::BuiltinSearchParams params;
    params.seed = kSeed + attempts;
    vg::solve::BuiltinSearchBackend builtin(params, kSolverTimeout);
    try {
      const vg::solve::SolveResult local = vg::solve::solve(prob.csp, builtin);
      if (local.verdict == vg::solve::Verdict::kSat) {
        ++builtin_sat;
        if (!prob.csp.satisfied(local.model, {})) ++revalidation_failures;
      } else if (local.verdict == vg::solve::Verdict::kUnsat) {
        ++contradictions;  // incomplete search may never answer Unsat
      }
    } catch (const vg::solve::MalformedModel&) {
      ++revalidation_failures;
    }
  }

  summary = std::to_string(satisfiable) + " externally-satisfiable attack systems"
            " (from " + std::to_string(attempts) + " drawn): local search found " +
            std::to_string(builtin_sat) + " models, " +
            std::to_string(revalidation_failures) + " re-validation failures, " +
            std::to_string(contradictions) + " verdict contradictions";
  return satisfiable == kCrossBackendTarget && revalidation_failures == 0 &&
         contradictions == 0;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    bool pass = false;
    std::string summary;
    double seconds = 0.0;
  };

  Artifacts artifacts;
  try {
    artifacts = build_artifacts();
  } catch (const std::exception& e) {
    std::cout << "[FAIL] shared artifacts could not be built: " << e.what()
              << "\n";
    return 1;
  }

  std::vector<Criterion> results = {
      {1, "encoder-model equivalence"},
      {2, "geometry oracle equivalence"},
      {3, "attack-matrix round trip"},
      {4, "feasibility monotonicity"},
      {5, "pairwise-coverage band"},
      {6, "classifier sanity band"},
      {7, "resiliency soundness"},
      {8, "gradient check"},
      {9, "clustering oracles"},
      {10, "cross-backend consistency"},
  };

  for (Criterion& c : results) {
    const auto t0 = Clock::now();
    try {
      switch (c.id) {
        case 1: c.pass = criterion_1(artifacts, c.summary); break;
        case 2: c.pass = criterion_2(c.summary); break;
        case 3: c.pass = criterion_3(artifacts, c.summary); break;
        case 4: c.pass = criterion_4(artifacts, c.summary); break;
        case 5: c.pass = criterion_5(artifacts, c.summary); break;
        case 6: c.pass = criterion_6(artifacts, c.summary); break;
        case 7: c.pass = criterion_7(artifacts, c.summary); break;
        case 8: c.pass = criterion_8(c.summary); break;
        case 9: c.pass = criterion_9(c.summary); break;
        case 10: c.pass = criterion_10(artifacts, c.summary); break;
      }
    } catch (const std::exception& e) {
      c.pass = false;
      c.summary = std::string("exception: ") + e.what();
    }
    c.seconds = seconds_since(t0);
  }

  bool all = true;
  for (const Criterion& c : results) {
    all = all && c.pass;
    std::cout << (c.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": "
              << c.name << " -- " << c.summary << " [" << fmt(c.seconds, 1)
              << " s]\n";
  }
  std::cout << (all ? "acceptance: all 10 criteria passed\n"
                    : "acceptance: at least one criterion failed\n");
  return all ? 0 : 1;
}
