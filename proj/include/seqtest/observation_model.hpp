#pragma once

#include <memory>
#include <span>
#include <string>

#include "seqtest/hypotheses.hpp"
#include "seqtest/random.hpp"

namespace seqtest {

// Per-trajectory sufficient statistics.  A state is owned by exactly one
// run; models downcast to their concrete state type.
class TrajectoryState {
 public:
  virtual ~TrajectoryState() = default;
  virtual std::unique_ptr<TrajectoryState> clone() const = 0;
  long n() const { return n_; }

 protected:
  friend class ObservationModel;
  long n_ = 0;
};

// Observation model contract shared by the sequential test engines, the
// Monte Carlo harness and the asymptotic predictors.
//
// Step protocol: given a state holding n observations, sample() draws
// x_{n+1} under a true parameter, conditional_logpdf() evaluates candidate
// parameters on x_{n+1} before it is absorbed, and absorb() then folds
// x_{n+1} into the state.
class ObservationModel {
 public:
  virtual ~ObservationModel() = default;

  virtual std::string name() const = 0;
  virtual int param_dim() const = 0;
  // Throws std::invalid_argument when theta is outside the model domain.
  virtual void validate_param(const Param& theta) const;

  virtual std::unique_ptr<TrajectoryState> make_state() const = 0;
  virtual double sample(const Param& theta, const TrajectoryState& history,
                        RandomStream& rng) const = 0;
  virtual double conditional_logpdf(const Param& theta,
                                    const TrajectoryState& history,
                                    double x) const = 0;
  virtual void absorb(TrajectoryState& state, double x) const = 0;

  // Per-step information number I(theta, vartheta); strictly positive for
  // theta != vartheta, zero on the diagonal.
  virtual double kl(const Param& theta, const Param& vartheta) const = 0;

  // Models whose hypothesis statistics are whole-sample functionals (not
  // sums of per-observation terms) override hypothesis_scores(); engines
  // then recompute scores each step instead of accumulating increments.
  virtual bool whole_sample_scores() const { return false; }
  virtual void hypothesis_scores(const TrajectoryState& state,
                                 std::span<const Param> hypotheses,
                                 std::span<double> out) const;

  // sup over the region of the full-sample log density, when the model has
  // a closed form; returns false otherwise (engines fall back to a grid
  // maximum over the mixture grid).
  virtual bool restricted_sup_logdensity(const TrajectoryState& state,
                                         const Region& region,
                                         double& out) const;

  // Full-sample maximum likelihood estimate; false while undefined (too few
  // observations or a degenerate sample).
  virtual bool estimate(const TrajectoryState& state, Param& out) const;

  // Closed-form inf over the region of kl(theta, .), when available.
  virtual bool kl_infimum_closed_form(const Param& theta, const Region& region,
                                      double& out) const;

 protected:
  static void bump(TrajectoryState& state) { ++state.n_; }
};

}  // namespace seqtest
