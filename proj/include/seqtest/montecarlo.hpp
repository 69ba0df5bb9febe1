#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqtest/asymptotics.hpp"
#include "seqtest/engines.hpp"
#include "seqtest/hypotheses.hpp"
#include "seqtest/numerics.hpp"
#include "seqtest/observation_model.hpp"

namespace seqtest {

// True parameter a batch of trials is simulated from.
struct SimulationPoint {
  std::string id;
  Param theta;
};

struct EngineSettings {
  EngineKind kind = EngineKind::msprt;
  // Mixture engine: grid resolution per parameter axis and the prior box the
  // uniform prior lives on.  The box defaults to the hull of the hypothesis
  // regions and must be bounded.
  std::vector<int> grid_points;
  std::optional<Region> prior_box;
  // Adaptive engine: plug-in used until the estimator is defined.  Defaults
  // to the hull midpoint when that is finite.
  std::optional<Param> adaptive_initial;
};

struct ExperimentPlan {
  std::shared_ptr<const ObservationModel> model;
  HypothesisLayout layout;
  ErrorBudget budget;
  EngineSettings engine;
  std::vector<SimulationPoint> points;
  long trials = 10000;
  long horizon = 1000000;
  std::vector<int> moment_orders = {1, 2};
  std::uint64_t master_seed = 1;
  int workers = 1;
  PsiSpec psi;

  void validate() const;  // throws std::invalid_argument
};

// Hull of the hypothesis regions (and indifference region when present):
// per-axis [min lo, max hi].
Region layout_hull(const HypothesisLayout& layout);

// One (true hypothesis i, accepted j != i) error estimate with its 99%
// Wilson interval and the exp(-a(i, j)) bound it is checked against.
struct ErrorCell {
  int true_hypothesis = -1;
  int accepted = -1;
  long count = 0;
  double alpha_hat = 0.0;
  WilsonInterval wilson;
  double bound = 0.0;
  double margin = 0.0;  // bound - alpha_hat
  bool bound_ok = true; // wilson.lower <= bound
};

struct MomentCell {
  int order = 1;
  long decided = 0;        // trials the decided statistics are over
  double decided_mean = 0.0;
  double decided_se = 0.0;
  double truncated_mean = 0.0;  // E[(T ^ horizon)^r] over all trials
  double truncated_se = 0.0;
};

struct PointReport {
  std::string id;
  Param theta;
  std::optional<int> true_hypothesis;  // from layout.locate
  long trials = 0;
  long decided = 0;
  long censored = 0;   // includes invalid trials
  long invalid = 0;
  long ambiguous = 0;
  std::vector<long> accept_counts;  // per hypothesis index
  std::vector<ErrorCell> errors;    // present when the true hypothesis is known
  std::vector<MomentCell> moments;
  EssPrediction predicted;
  std::vector<double> ess_ratio;    // decided_mean / predicted, per order
};

struct MonteCarloReport {
  std::string engine;
  std::uint64_t master_seed = 0;
  long trials = 0;
  long horizon = 0;
  std::vector<PointReport> points;
  bool all_bounds_ok = true;
  long invalid_total = 0;
};

// Runs plan.trials independent trials at every simulation point.  Trial k of
// point p draws from a random stream keyed by (master_seed, p, k), results
// land in preallocated per-trial slots, and aggregation walks the slots in
// trial order, so the report is bit-identical for any worker count.
MonteCarloReport run_experiment(const ExperimentPlan& plan);

struct BoundCheckEntry {
  std::string point_id;
  int i = -1;
  int j = -1;
  double alpha_hat = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool pass = true;
};

// Flattened per-(i, j) bound verdicts: pass iff the Wilson lower bound of
// alpha_hat does not exceed exp(-a(i, j)).
std::vector<BoundCheckEntry> bound_check(const MonteCarloReport& report);
bool all_bounds_pass(const MonteCarloReport& report);

struct EssTrendLevel {
  double alpha = 0.0;
  EssPrediction predicted;
  std::vector<MomentCell> moments;
  std::vector<double> ratio;  // decided_mean / predicted, per order
};

struct EssTrendReport {
  std::vector<int> orders;
  std::vector<EssTrendLevel> levels;
};

// Re-runs the plan's first simulation point under uniform error budgets
// alpha, one level per entry; the observed/predicted moment ratios should
// tighten as alpha shrinks.
EssTrendReport ess_ratio_trend(const ExperimentPlan& base,
                               std::span<const double> alphas);

struct SllnReport {
  double information = 0.0;  // I(theta, vartheta)
  long n_max = 0;
  long reps = 0;
  long within_band = 0;   // |lambda(n_max)/psi(n_max) - I| <= band * I
  double fraction = 0.0;
  double band = 0.05;
  bool degenerate = false;  // theta == vartheta, zero information
};

// Almost-sure convergence diagnostic for the pairwise LLR under the true
// parameter theta: fraction of trajectories whose normalized statistic sits
// within the +/- band around I(theta, vartheta) at n_max.
SllnReport slln_diagnostic(const ObservationModel& model, const PsiSpec& psi,
                           const Param& theta, const Param& vartheta,
                           long n_max, long reps, std::uint64_t seed,
                           double band = 0.05);

struct MartingaleCheck {
  long n = 0;
  double mean = 0.0;
  double se = 0.0;
};

// Samples under vartheta and averages the adaptive likelihood ratio (the
// one-step-delayed plug-in numerator against the fixed vartheta density) at
// the checkpoints; each mean should sit within sampling error of 1.
std::vector<MartingaleCheck> adaptive_martingale_check(
    const ObservationModel& model, const Param& initial_estimate,
    const Param& vartheta, std::span<const long> checkpoints, long trials,
    std::uint64_t seed);

}  // namespace seqtest
