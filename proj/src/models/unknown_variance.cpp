#include "seqtest/models/unknown_variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqtest {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kVarFloor = 1e-300;

struct UvState : TrajectoryState {
  double sum_x = 0.0;
  double sum_xx = 0.0;

  double mean() const { return n() > 0 ? sum_x / static_cast<double>(n()) : 0.0; }
  double m2() const { return n() > 0 ? sum_xx / static_cast<double>(n()) : 0.0; }
  double v2() const {
    const double m = mean();
    return std::max(0.0, m2() - m * m);
  }

  std::unique_ptr<TrajectoryState> clone() const override {
    return std::make_unique<UvState>(*this);
  }
};

double gaussian_logpdf(double x, double mu, double sigma2) {
  const double r = x - mu;
  return -0.5 * (kLog2Pi + std::log(sigma2) + r * r / sigma2);
}

}  // namespace

UnknownVarianceModel::UnknownVarianceModel(double mu0, double mu1)
    : UnknownVarianceModel(mu0, mu1, Param{0.5 * (mu0 + mu1), 1.0}) {}

UnknownVarianceModel::UnknownVarianceModel(double mu0, double mu1,
                                           Param initial_estimate)
    : mu0_(mu0), mu1_(mu1), init_(std::move(initial_estimate)) {
  if (!(mu0_ < mu1_))
    throw std::invalid_argument("unknown_variance: need mu0 < mu1");
  if (init_.size() != 2 || !(init_[1] > 0.0))
    throw std::invalid_argument(
        "unknown_variance: initial estimate must be (mu, sigma2>0)");
}

void UnknownVarianceModel::validate_param(const Param& theta) const {
  ObservationModel::validate_param(theta);
  if (!(theta[1] > 0.0))
    throw std::invalid_argument("unknown_variance: sigma2 must be positive");
}

std::unique_ptr<TrajectoryState> UnknownVarianceModel::make_state() const {
  return std::make_unique<UvState>();
}

double UnknownVarianceModel::sample(const Param& theta, const TrajectoryState&,
                                    RandomStream& rng) const {
  return theta[0] + std::sqrt(theta[1]) * rng.normal();
}

double UnknownVarianceModel::conditional_logpdf(const Param& theta,
                                                const TrajectoryState&,
                                                double x) const {
  return gaussian_logpdf(x, theta[0], theta[1]);
}

void UnknownVarianceModel::absorb(TrajectoryState& state, double x) const {
  auto& st = static_cast<UvState&>(state);
  st.sum_x += x;
  st.sum_xx += x * x;
  bump(st);
}

double UnknownVarianceModel::kl(const Param& theta,
                                const Param& vartheta) const {
  if (theta == vartheta) return 0.0;
  const double dm = theta[0] - vartheta[0];
  return 0.5 * ((dm * dm + theta[1]) / vartheta[1] - 1.0 +
                std::log(vartheta[1] / theta[1]));
}

bool UnknownVarianceModel::restricted_sup_logdensity(
    const TrajectoryState& state, const Region& region, double& out) const {
  const auto& st = static_cast<const UvState&>(state);
  const double n = static_cast<double>(st.n());
  const double xbar = st.mean();
  const double mu = std::clamp(xbar, region.lo[0], region.hi[0]);
  const double a =
      std::max(st.m2() - 2.0 * mu * xbar + mu * mu, kVarFloor);
  const double s2 =
      std::clamp(a, std::max(region.lo[1], kVarFloor), region.hi[1]);
  out = -0.5 * n * (kLog2Pi + std::log(s2)) - 0.5 * n * a / s2;
  return true;
}

bool UnknownVarianceModel::estimate(const TrajectoryState& state,
                                    Param& out) const {
  const auto& st = static_cast<const UvState&>(state);
  if (st.n() < 2) return false;
  const double v2 = st.v2();
  if (!(v2 > 0.0)) return false;
  out = {st.mean(), v2};
  return true;
}

bool UnknownVarianceModel::kl_infimum_closed_form(const Param& theta,
                                                  const Region& region,
                                                  double& out) const {
  // closed form requires a free variance dimension
  if (region.lo[1] > kVarFloor || std::isfinite(region.hi[1])) return false;
  const double mu = std::clamp(theta[0], region.lo[0], region.hi[0]);
  const double d = theta[0] - mu;
  out = 0.5 * std::log1p(d * d / theta[1]);
  return true;
}

UvStatistics uv_statistics(const UnknownVarianceModel& model,
                           std::span<const double> xs) {
  UvStatistics st;
  const double n = static_cast<double>(xs.size());
  if (xs.empty()) return st;

  double sum_x = 0.0, sum_xx = 0.0;
  long t = 0;
  for (double x : xs) {
    double m = model.initial_estimate()[0];
    double s2 = model.initial_estimate()[1];
    bool fallback = true;
    if (t >= 2) {
      const double mean = sum_x / static_cast<double>(t);
      const double v2 = sum_xx / static_cast<double>(t) - mean * mean;
      if (v2 > 0.0) {
        m = mean;
        s2 = v2;
        fallback = false;
      }
    }
    if (fallback) ++st.fallback_steps;
    st.ell +=
        0.5 * (std::log(1.0 / s2) + (2.0 * m * x - x * x - m * m) / s2);
    sum_x += x;
    sum_xx += x * x;
    ++t;
  }

  const double xbar = sum_x / n;
  const double m2 = sum_xx / n;
  const double v2 = std::max(0.0, m2 - xbar * xbar);

  const double mu0 = std::min(model.mu0(), xbar);
  const double mu1 = std::max(model.mu1(), xbar);
  const double s20 = std::max(m2 - 2.0 * mu0 * xbar + mu0 * mu0, kVarFloor);
  const double s21 = std::max(m2 - 2.0 * mu1 * xbar + mu1 * mu1, kVarFloor);
  st.ell0 = 0.5 * n * (std::log(1.0 / s20) - 1.0);
  st.ell1 = 0.5 * n * (std::log(1.0 / s21) - 1.0);

  if (v2 > 0.0) {
    st.lambda_pi =
        0.5 * n * std::log1p(xbar * xbar / v2) - 0.5 * std::log(n);
  } else {
    st.degenerate = true;
    st.lambda_pi = std::numeric_limits<double>::quiet_NaN();
  }
  return st;
}

}  // namespace seqtest
