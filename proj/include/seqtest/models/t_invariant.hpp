#pragma once

#include "seqtest/observation_model.hpp"

namespace seqtest {

// Scale-invariant mean-to-noise testing for iid N(mu, sigma^2) with both
// parameters unknown: hypotheses fix q = mu/sigma and statistics depend on
// the data only through n and the normalized statistic
//   t_n = mean_n / sqrt(m2_n),  m2_n = (1/n) sum x_t^2,  |t_n| <= 1.
// Hypothesis scores are either the Laplace form n*(phi(q t_n) - q^2/2) or
// the quadrature-exact log J_n(q t_n) - n q^2/2; pairwise differences give
// the invariant log-likelihood ratios.
class TInvariantModel : public ObservationModel {
 public:
  enum class ScoreMode { laplace, quadrature };

  explicit TInvariantModel(ScoreMode mode = ScoreMode::laplace);

  std::string name() const override { return "t_invariant"; }
  int param_dim() const override { return 1; }

  std::unique_ptr<TrajectoryState> make_state() const override;
  double sample(const Param& theta, const TrajectoryState& history,
                RandomStream& rng) const override;
  double conditional_logpdf(const Param& theta, const TrajectoryState& history,
                            double x) const override;
  void absorb(TrajectoryState& state, double x) const override;

  double kl(const Param& theta, const Param& vartheta) const override;

  bool whole_sample_scores() const override { return true; }
  void hypothesis_scores(const TrajectoryState& state,
                         std::span<const Param> hypotheses,
                         std::span<double> out) const override;

  // t statistic of the absorbed sample.
  double t_statistic(const TrajectoryState& state) const;

  ScoreMode mode() const { return mode_; }

 private:
  ScoreMode mode_;
};

// phi(z) = z (z + sqrt(4 + z^2)) / 4 + log(z + sqrt(4 + z^2)); phi(0) = log 2.
double t_phi(double z);

// Per-step score difference g_ij(t) = [phi(qi t) - qi^2/2] - [phi(qj t) - qj^2/2].
double t_g(double qi, double qj, double t);

// Limit of t_n under the hypothesis q: q / sqrt(1 + q^2).
double t_limit_statistic(double q);

// Laplace-approximate invariant LLR n * g_ij(t).
double t_llr_approx(long n, double qi, double qj, double t);

struct QuadratureValue {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = false;
};

// log J_n(z), J_n(z) = int_0^inf u^{-1} exp(n(-u^2/2 + z u + log u)) du,
// by adaptive composite Simpson on a window around the integrand peak.
QuadratureValue t_log_j(long n, double z, double tol = 1e-11);

// Quadrature-exact invariant LLR
//   [log J_n(qi t) - n qi^2/2] - [log J_n(qj t) - n qj^2/2].
double t_llr_exact(long n, double qi, double qj, double t, double tol = 1e-11);

}  // namespace seqtest
