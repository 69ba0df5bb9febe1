#pragma once

#include <utility>
#include <vector>

#include "seqtest/observation_model.hpp"

namespace seqtest {

// Mean testing in additive AR(p) Gaussian noise:
//   X_n = theta * S_n + xi_n,   xi_n = sum_t rho_t xi_{n-t} + w_n,
// w_n iid N(0, sigma^2), zero initial conditions.  The whitened residuals
//   Xt_n = X_n - sum_t rho_t X_{n-t},  St_n = S_n - sum_t rho_t S_{n-t}
// satisfy Xt_n = theta * St_n + w_n, so per-step densities are Gaussian in
// the whitened pair.  With rho empty this is the iid Gaussian mean model.
class ArMeanModel : public ObservationModel {
 public:
  // signal holds S_1..S_m and is held at its last value for n > m; a
  // single-element signal is the constant-signal case.
  ArMeanModel(std::vector<double> rho, double sigma,
              std::vector<double> signal = {1.0});

  std::string name() const override { return "ar_mean"; }
  int param_dim() const override { return 1; }

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

  int order() const { return static_cast<int>(rho_.size()); }
  double sigma() const { return sigma_; }
  const std::vector<double>& rho() const { return rho_; }

  // Limiting signal-to-noise rate (1 - sum rho)^2 * S^2 / sigma^2 of the
  // whitened energy sum_t St_t^2 / (sigma^2 n).
  double q_squared() const;

  double signal_at(long t) const;   // S_t, zero for t <= 0
  double whitened_signal(long t) const;  // St_t

 private:
  std::vector<double> rho_;
  double sigma_;
  std::vector<double> signal_;
};

// Whitened pairs (St_t, Xt_t) for a raw observation prefix.
std::vector<std::pair<double, double>> whiten(const ArMeanModel& model,
                                              std::span<const double> xs);

// Pairwise log-likelihood ratio increment of theta against vartheta at one
// whitened pair.
double ar_mean_llr_increment(const ArMeanModel& model, double theta,
                             double vartheta, double s_tilde, double x_tilde);

}  // namespace seqtest
