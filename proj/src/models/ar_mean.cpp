#include "seqtest/models/ar_mean.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace seqtest {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct ArMeanState : TrajectoryState {
  std::vector<double> last_x;  // most recent observation at the back
  double sum_sx = 0.0;         // sum St * Xt
  double sum_ss = 0.0;         // sum St^2
  double sum_xx = 0.0;         // sum Xt^2

  std::unique_ptr<TrajectoryState> clone() const override {
    return std::make_unique<ArMeanState>(*this);
  }
};

}  // namespace

ArMeanModel::ArMeanModel(std::vector<double> rho, double sigma,
                         std::vector<double> signal)
    : rho_(std::move(rho)), sigma_(sigma), signal_(std::move(signal)) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
    throw std::invalid_argument("ar_mean: sigma must be positive");
  if (signal_.empty())
    throw std::invalid_argument("ar_mean: signal must be non-empty");
  for (double s : signal_)
    if (!std::isfinite(s)) throw std::invalid_argument("ar_mean: bad signal");
  for (double r : rho_)
    if (!std::isfinite(r))
      throw std::invalid_argument("ar_mean: bad AR coefficient");
}

double ArMeanModel::signal_at(long t) const {
  if (t <= 0) return 0.0;
  const long m = static_cast<long>(signal_.size());
  return t <= m ? signal_[t - 1] : signal_.back();
}

double ArMeanModel::whitened_signal(long t) const {
  double s = signal_at(t);
  for (std::size_t k = 0; k < rho_.size(); ++k)
    s -= rho_[k] * signal_at(t - static_cast<long>(k) - 1);
  return s;
}

double ArMeanModel::q_squared() const {
  const double rho_sum = std::accumulate(rho_.begin(), rho_.end(), 0.0);
  const double s = signal_.back();
  const double num = (1.0 - rho_sum) * s;
  return num * num / (sigma_ * sigma_);
}

std::unique_ptr<TrajectoryState> ArMeanModel::make_state() const {
  return std::make_unique<ArMeanState>();
}

double ArMeanModel::sample(const Param& theta, const TrajectoryState& history,
                           RandomStream& rng) const {
  const auto& st = static_cast<const ArMeanState&>(history);
  const long n = st.n() + 1;
  double mean = theta[0] * whitened_signal(n);
  for (std::size_t k = 0; k < rho_.size() && k < st.last_x.size(); ++k)
    mean += rho_[k] * st.last_x[st.last_x.size() - 1 - k];
  return mean + sigma_ * rng.normal();
}

double ArMeanModel::conditional_logpdf(const Param& theta,
                                       const TrajectoryState& history,
                                       double x) const {
  const auto& st = static_cast<const ArMeanState&>(history);
  const long n = st.n() + 1;
  double xt = x;
  for (std::size_t k = 0; k < rho_.size() && k < st.last_x.size(); ++k)
    xt -= rho_[k] * st.last_x[st.last_x.size() - 1 - k];
  const double resid = xt - theta[0] * whitened_signal(n);
  return -0.5 * (kLog2Pi + 2.0 * std::log(sigma_)) -
         resid * resid / (2.0 * sigma_ * sigma_);
}

void ArMeanModel::absorb(TrajectoryState& state, double x) const {
  auto& st = static_cast<ArMeanState&>(state);
  const long n = st.n() + 1;
  double xt = x;
  for (std::size_t k = 0; k < rho_.size() && k < st.last_x.size(); ++k)
    xt -= rho_[k] * st.last_x[st.last_x.size() - 1 - k];
  const double s = whitened_signal(n);
  st.sum_sx += s * xt;
  st.sum_ss += s * s;
  st.sum_xx += xt * xt;
  st.last_x.push_back(x);
  if (st.last_x.size() > rho_.size()) st.last_x.erase(st.last_x.begin());
  bump(st);
}

double ArMeanModel::kl(const Param& theta, const Param& vartheta) const {
  const double d = theta[0] - vartheta[0];
  return 0.5 * d * d * q_squared();
}

bool ArMeanModel::restricted_sup_logdensity(const TrajectoryState& state,
                                            const Region& region,
                                            double& out) const {
  const auto& st = static_cast<const ArMeanState&>(state);
  const double n = static_cast<double>(st.n());
  double rss = st.sum_xx;
  if (st.sum_ss > 0.0) {
    const double theta =
        std::clamp(st.sum_sx / st.sum_ss, region.lo[0], region.hi[0]);
    rss = st.sum_xx - 2.0 * theta * st.sum_sx + theta * theta * st.sum_ss;
  }
  out = -0.5 * n * (kLog2Pi + 2.0 * std::log(sigma_)) -
        rss / (2.0 * sigma_ * sigma_);
  return true;
}

bool ArMeanModel::estimate(const TrajectoryState& state, Param& out) const {
  const auto& st = static_cast<const ArMeanState&>(state);
  if (!(st.sum_ss > 0.0)) return false;
  out = {st.sum_sx / st.sum_ss};
  return true;
}

bool ArMeanModel::kl_infimum_closed_form(const Param& theta,
                                         const Region& region,
                                         double& out) const {
  const double v = std::clamp(theta[0], region.lo[0], region.hi[0]);
  const double d = theta[0] - v;
  out = 0.5 * d * d * q_squared();
  return true;
}

std::vector<std::pair<double, double>> whiten(const ArMeanModel& model,
                                              std::span<const double> xs) {
  std::vector<std::pair<double, double>> out;
  out.reserve(xs.size());
  const auto& rho = model.rho();
  for (std::size_t t = 0; t < xs.size(); ++t) {
    double xt = xs[t];
    for (std::size_t k = 0; k < rho.size(); ++k) {
      const long lag = static_cast<long>(t) - static_cast<long>(k) - 1;
      if (lag >= 0) xt -= rho[k] * xs[lag];
    }
    out.emplace_back(model.whitened_signal(static_cast<long>(t) + 1), xt);
  }
  return out;
}

double ar_mean_llr_increment(const ArMeanModel& model, double theta,
                             double vartheta, double s_tilde, double x_tilde) {
  const double s2 = model.sigma() * model.sigma();
  return (theta - vartheta) / s2 * s_tilde * x_tilde -
         (theta * theta - vartheta * vartheta) / (2.0 * s2) * s_tilde * s_tilde;
}

}  // namespace seqtest
