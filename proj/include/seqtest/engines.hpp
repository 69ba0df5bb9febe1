#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "seqtest/hypotheses.hpp"
#include "seqtest/observation_model.hpp"

namespace seqtest {

// ---------------------------------------------------------------------------
// Matrix sequential probability ratio test over pairwise LLR statistics.
// Hypothesis i is accepted at the first n with
//   min_{j != i} [ lambda_ij(n) - a(j, i) ] >= 0.
// ---------------------------------------------------------------------------

struct MsprtState {
  long n = 0;
  Eigen::MatrixXd lambda;  // pairwise statistics, diagonal unused
  bool invalid = false;
};

MsprtState make_msprt_state(int hypotheses);

// Accumulates one matrix of pairwise LLR increments (diagonal ignored) and
// applies the acceptance rule.  Returns a decision when a hypothesis is
// accepted, the horizon is reached (censored), or a non-finite statistic
// appears (invalid); nullopt while sampling continues.
std::optional<Decision> msprt_step(MsprtState& state,
                                   const Eigen::MatrixXd& increments,
                                   const ThresholdMatrix& thresholds,
                                   long horizon);

// Model-driven wrapper: accumulates per-hypothesis scores from the model
// and feeds pairwise differences through msprt_step, so the statistics are
// antisymmetric by construction.
class MsprtEngine {
 public:
  MsprtEngine(const ObservationModel& model, const HypothesisLayout& layout,
              ThresholdMatrix thresholds, long horizon);

  struct State {
    std::unique_ptr<TrajectoryState> traj;
    std::vector<double> scores;  // cumulative per-hypothesis scores
    MsprtState core;
  };

  State make_state() const;
  std::optional<Decision> step(State& state, double x) const;

  const std::vector<Param>& hypotheses() const { return points_; }

 private:
  const ObservationModel& model_;
  std::vector<Param> points_;
  ThresholdMatrix thresholds_;
  long horizon_;
};

// ---------------------------------------------------------------------------
// Mixture-numerator test: the numerator integrates the likelihood over a
// proper discretized prior, the per-region denominators are restricted
// supremum likelihoods.  Hypothesis i is accepted at the first n with
//   log g(n) - log g_j(n) >= a(j, i) for all j != i.
// ---------------------------------------------------------------------------

struct MixtureGrid {
  std::vector<Param> points;
  std::vector<double> log_weight;  // normalized: sum of weights is 1
};

// Uniform density on a bounded box, discretized with product trapezoid
// weights; counts are per dimension.
MixtureGrid make_uniform_grid(const Region& range,
                              const std::vector<int>& points_per_dim);

class MmsprtEngine {
 public:
  MmsprtEngine(const ObservationModel& model, HypothesisLayout layout,
               ThresholdMatrix thresholds, MixtureGrid grid, long horizon);

  struct State {
    std::unique_ptr<TrajectoryState> traj;
    std::vector<double> grid_cum;  // per-grid-point cumulative log-likelihood
    std::vector<double> lambda;    // per-region mixture statistics
    std::vector<double> scratch;
    double log_g = 0.0;
    long n = 0;
  };

  State make_state() const;
  std::optional<Decision> step(State& state, double x) const;

  const MixtureGrid& grid() const { return grid_; }

 private:
  const ObservationModel& model_;
  HypothesisLayout layout_;
  ThresholdMatrix thresholds_;
  MixtureGrid grid_;
  long horizon_;
  std::vector<std::vector<int>> region_points_;  // grid fallback membership
  std::vector<bool> need_grid_sup_;
};

// ---------------------------------------------------------------------------
// Adaptive-numerator test: the numerator accumulates the conditional log
// density evaluated at the one-step-delayed estimate, refreshed after each
// observation; denominators and the acceptance rule match the mixture test.
// ---------------------------------------------------------------------------

class AmsprtEngine {
 public:
  AmsprtEngine(const ObservationModel& model, HypothesisLayout layout,
               ThresholdMatrix thresholds, Param initial_estimate,
               long horizon);

  struct State {
    std::unique_ptr<TrajectoryState> traj;
    Param estimate;          // evaluated on the next observation
    double adaptive = 0.0;   // cumulative adaptive log-likelihood
    std::vector<double> lambda;
    long fallback_steps = 0;
  };

  State make_state() const;
  std::optional<Decision> step(State& state, double x) const;

  // log of the adaptive likelihood ratio against a fixed parameter; a
  // unit-mean martingale under that parameter.
  double adaptive_loglik(const State& state) const { return state.adaptive; }

 private:
  const ObservationModel& model_;
  HypothesisLayout layout_;
  ThresholdMatrix thresholds_;
  Param init_;
  long horizon_;
};

// Shared acceptance rule: accepted index for the candidate margins
//   margin(i) = min_{j != i} [ stat_j - a(j, i) ],
// smallest index wins ties; returns nullopt when no candidate qualifies.
std::optional<int> accept_candidate(std::span<const double> margins,
                                    bool& ambiguous_tie);

}  // namespace seqtest
