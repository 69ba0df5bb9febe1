#pragma once

#include <span>

#include "seqtest/observation_model.hpp"

namespace seqtest {

// iid N(mu, sigma^2) with both parameters unknown; hypotheses separate the
// mean at mu0 < mu1 with sigma^2 a free nuisance.  Parameter vectors are
// (mu, sigma2).
class UnknownVarianceModel : public ObservationModel {
 public:
  UnknownVarianceModel(double mu0, double mu1);
  UnknownVarianceModel(double mu0, double mu1, Param initial_estimate);

  std::string name() const override { return "unknown_variance"; }
  int param_dim() const override { return 2; }
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
  bool kl_infimum_closed_form(const Param& theta, const Region& region,
                              double& out) const override;

  double mu0() const { return mu0_; }
  double mu1() const { return mu1_; }
  const Param& initial_estimate() const { return init_; }

 private:
  double mu0_;
  double mu1_;
  Param init_;  // (mu, sigma2) used while the sample estimate is undefined
};

struct UvStatistics {
  double ell = 0.0;        // adaptive numerator, one-step-delayed estimates
  double ell0 = 0.0;       // restricted fit, mean <= mu0
  double ell1 = 0.0;       // restricted fit, mean >= mu1
  double lambda_pi = 0.0;  // scale-free mixture statistic
  long fallback_steps = 0; // steps evaluated at the initial estimate
  bool degenerate = false; // constant sample, lambda_pi undefined
};

// Running statistics of a sample prefix:
//   ell(n)  = sum_t [ log(1/v2_{t-1}) + (2*mean_{t-1} x_t - x_t^2
//                      - mean_{t-1}^2)/v2_{t-1} ] / 2,
//   ell_i(n) = n/2 (log(1/s2_i) - 1) at the region-restricted fit,
//   lambda_pi(n) = n/2 log(1 + mean^2/v2) - log(n)/2,
// with the configured initial estimate substituted wherever the one-step-
// delayed estimate is undefined.
UvStatistics uv_statistics(const UnknownVarianceModel& model,
                           std::span<const double> xs);

}  // namespace seqtest
