#pragma once

#include <span>
#include <vector>

#include "seqtest/hypotheses.hpp"
#include "seqtest/observation_model.hpp"

namespace seqtest {

// Sample-size normalization psi(t) = t^beta with inverse Psi(t) = t^(1/beta).
struct PsiSpec {
  double beta = 1.0;

  void validate() const;
  double psi(double t) const;
  double inverse(double t) const;
};

// inf over the region of kl(theta, .); closed forms where the model has
// them, otherwise a grid scan with golden-section refinement per axis.
double kl_infimum(const ObservationModel& model, const Param& theta,
                  const Region& region);

struct EssPrediction {
  double base = 0.0;             // first-order expected sample size
  std::vector<int> orders;       // requested moment orders r
  std::vector<double> values;    // base^r, matching orders
};

// First-order predicted stopping-time moments at the true parameter theta:
//   base = Psi( max_{j != i} |log alpha_ji| / I_j(theta) )
// when theta lies in hypothesis region i, and the min over candidates i of
// the same expression when theta lies between regions.
EssPrediction predict_ess(const HypothesisLayout& layout,
                          const ErrorBudget& budget,
                          const ObservationModel& model, const PsiSpec& psi,
                          const Param& theta, std::span<const int> orders);

// Parameter in (theta0, theta1) equalizing the two stopping branches for
// quadratic information (theta - theta_j)^2 * q2 / 2;
// c = |log alpha_01| / |log alpha_10|.
double worst_point_quadratic(double theta0, double theta1, double c);

// Same point computed by bisection on the equalization equation; used as a
// cross-check of the closed form.
double worst_point_quadratic_bisect(double theta0, double theta1, double c,
                                    double tol = 1e-10);

// Worst point for logarithmic information (1/2) log(1 + (q - q_j)^2):
// solves [1 + (q1 - q)^2]^c = 1 + (q - q0)^2 on (q0, q1) by bisection;
// c == 1 returns the midpoint exactly.
double worst_point_log_snr(double q0, double q1, double c, double tol = 1e-10);

}  // namespace seqtest
