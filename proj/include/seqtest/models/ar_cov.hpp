#pragma once

#include <Eigen/Dense>

#include "seqtest/observation_model.hpp"

namespace seqtest {

// AR(p) coefficient testing with unit-variance Gaussian innovations:
//   X_n = sum_k theta_k X_{n-k} + w_n,  w_n iid N(0, 1),
// zero initial conditions.  Parameters must be stable (companion matrix
// spectral radius < 1).
class ArCovModel : public ObservationModel {
 public:
  explicit ArCovModel(int order);

  std::string name() const override { return "ar_cov"; }
  int param_dim() const override { return order_; }
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

  int order() const { return order_; }

 private:
  int order_;
};

// Companion matrix of the coefficient vector.
Eigen::MatrixXd ar_companion_matrix(const Param& theta);

double ar_spectral_radius(const Param& theta);

// Stationary covariance F(theta) = sum_k L^k B (L^T)^k, B = e1 e1^T,
// truncated when the term max-norm falls below tol (default 1e-14, capped
// at 1e5 terms).  Throws for unstable parameters.
Eigen::MatrixXd ar_cov_stationary_covariance(const Param& theta,
                                             double tol = 1e-14,
                                             long max_terms = 100000);

// I(theta, vartheta) = (theta - vartheta)^T F(theta) (theta - vartheta) / 2.
double ar_cov_kl(const Param& theta, const Param& vartheta);

}  // namespace seqtest
