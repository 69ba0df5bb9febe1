#pragma once

#include "seqtest/observation_model.hpp"

namespace seqtest {

// iid Bernoulli observations; the parameter is the success probability.
class BernoulliModel : public ObservationModel {
 public:
  std::string name() const override { return "bernoulli"; }
  int param_dim() const override { return 1; }
  void validate_param(const Param& theta) const override;

  std::unique_ptr<TrajectoryState> make_state() const override;
  double sample(const Param& theta, const TrajectoryState& history,
                RandomStream& rng) const override;
  double conditional_logpdf(const Param& theta, const TrajectoryState& history,
                            double x) const override;
  void absorb(TrajectoryState& state, double x) const override;

  double kl(const Param& theta, const Param& vartheta) const override;
  bool restricted_sup_logdensity(const TrajectoryState& state,
                                 const Region& region,
                                 double& out) const override;
  bool estimate(const TrajectoryState& state, Param& out) const override;
};

}  // namespace seqtest
