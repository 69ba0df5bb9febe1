#pragma once

#include <Eigen/Dense>
#include <vector>

#include "seqtest/hypotheses.hpp"

namespace seqtest {

// Finite-alphabet specification for exact enumeration: probs[i][k] is the
// probability hypothesis i assigns to symbol k (strictly positive, each row
// summing to 1 within 1e-12).  The horizon is capped at 20 and the total
// path count K^H at 1e8.
struct FiniteAlphabetSpec {
  std::vector<std::vector<double>> probs;
  ThresholdMatrix thresholds;
  int horizon = 0;
  std::vector<int> moment_orders = {1, 2};

  int hypotheses() const { return static_cast<int>(probs.size()); }
  int alphabet() const {
    return probs.empty() ? 0 : static_cast<int>(probs[0].size());
  }
  void validate() const;
};

struct ExactEnumeration {
  Eigen::MatrixXd alpha;              // alpha(i, j) = P_i(accept H_j)
  Eigen::MatrixXd truncated_moments;  // (i, idx) = E_i[(T ^ H)^r_idx]
  std::vector<double> p_past_horizon; // P_i(T > H)
  std::vector<double> total_probability;  // conservation check, 1 per i
};

// Exhaustive tree walk of the matrix test over all K^H observation paths,
// pruning at stopping nodes; probabilities accumulate in compensated
// extended precision.
ExactEnumeration enumerate_exact(const FiniteAlphabetSpec& spec);

}  // namespace seqtest
