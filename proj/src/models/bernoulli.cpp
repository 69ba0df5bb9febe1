#include "seqtest/models/bernoulli.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seqtest {

namespace {

struct BernoulliState : TrajectoryState {
  long ones = 0;
  std::unique_ptr<TrajectoryState> clone() const override {
    return std::make_unique<BernoulliState>(*this);
  }
};

}  // namespace

void BernoulliModel::validate_param(const Param& theta) const {
  ObservationModel::validate_param(theta);
  if (!(theta[0] > 0.0) || !(theta[0] < 1.0))
    throw std::invalid_argument("bernoulli: probability must lie in (0, 1)");
}

std::unique_ptr<TrajectoryState> BernoulliModel::make_state() const {
  return std::make_unique<BernoulliState>();
}

double BernoulliModel::sample(const Param& theta, const TrajectoryState&,
                              RandomStream& rng) const {
  return rng.bernoulli(theta[0]) ? 1.0 : 0.0;
}

double BernoulliModel::conditional_logpdf(const Param& theta,
                                          const TrajectoryState&,
                                          double x) const {
  return x != 0.0 ? std::log(theta[0]) : std::log1p(-theta[0]);
}

void BernoulliModel::absorb(TrajectoryState& state, double x) const {
  auto& st = static_cast<BernoulliState&>(state);
  if (x != 0.0) ++st.ones;
  bump(st);
}

double BernoulliModel::kl(const Param& theta, const Param& vartheta) const {
  const double p = theta[0], q = vartheta[0];
  if (p == q) return 0.0;
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

bool BernoulliModel::restricted_sup_logdensity(const TrajectoryState& state,
                                               const Region& region,
                                               double& out) const {
  const auto& st = static_cast<const BernoulliState&>(state);
  const double n = static_cast<double>(st.n());
  const double k = static_cast<double>(st.ones);
  double p = n > 0.0 ? k / n : 0.5;
  p = std::clamp(p, std::max(region.lo[0], 1e-12),
                 std::min(region.hi[0], 1.0 - 1e-12));
  out = (k > 0.0 ? k * std::log(p) : 0.0) +
        (n - k > 0.0 ? (n - k) * std::log1p(-p) : 0.0);
  return true;
}

bool BernoulliModel::estimate(const TrajectoryState& state, Param& out) const {
  const auto& st = static_cast<const BernoulliState&>(state);
  if (st.n() == 0) return false;
  const double p =
      static_cast<double>(st.ones) / static_cast<double>(st.n());
  if (p <= 0.0 || p >= 1.0) return false;  // degenerate sample
  out = {p};
  return true;
}

}  // namespace seqtest
