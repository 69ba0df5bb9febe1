#include "seqtest/models/t_invariant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "seqtest/numerics.hpp"

namespace seqtest {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct TState : TrajectoryState {
  double sum_x = 0.0;
  double sum_xx = 0.0;
  std::unique_ptr<TrajectoryState> clone() const override {
    return std::make_unique<TState>(*this);
  }
};

// z + sqrt(4 + z^2) without cancellation for z < 0
double peak_w(double z) {
  const double r = std::sqrt(4.0 + z * z);
  return z >= 0.0 ? z + r : 4.0 / (r - z);
}

double integrand_log(long n, double z, double u) {
  // n f(u, z) - log u, f(u, z) = -u^2/2 + z u + log u
  return static_cast<double>(n) * (-0.5 * u * u + z * u + std::log(u)) -
         std::log(u);
}

}  // namespace

double t_phi(double z) {
  const double w = peak_w(z);
  return 0.25 * z * w + std::log(w);
}

double t_g(double qi, double qj, double t) {
  return (t_phi(qi * t) - 0.5 * qi * qi) - (t_phi(qj * t) - 0.5 * qj * qj);
}

double t_limit_statistic(double q) { return q / std::sqrt(1.0 + q * q); }

double t_llr_approx(long n, double qi, double qj, double t) {
  return static_cast<double>(n) * t_g(qi, qj, t);
}

QuadratureValue t_log_j(long n, double z, double tol) {
  if (n < 1) throw std::invalid_argument("t_log_j: need n >= 1");
  const double u_star = 0.5 * peak_w(z);
  // |d2/du2 n f| at the peak is n (1 + 1/u*^2)
  const double width =
      1.0 / std::sqrt(static_cast<double>(n) * (1.0 + 1.0 / (u_star * u_star)));
  const double lo = std::max(u_star - 12.0 * width, u_star * 0x1.0p-12);
  const double hi = u_star + 12.0 * width;

  // composite Simpson in log space, doubling panels until stable
  const auto eval = [&](long panels) {
    const long m = 2 * panels;  // node intervals
    const double h = (hi - lo) / static_cast<double>(m);
    std::vector<double> logs;
    logs.reserve(m + 1);
    for (long k = 0; k <= m; ++k) {
      const double u = lo + h * static_cast<double>(k);
      double w = (k == 0 || k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      logs.push_back(integrand_log(n, z, u) + std::log(w * h / 3.0));
    }
    return log_sum_exp(logs);
  };

  QuadratureValue out;
  long panels = 32;
  double prev = eval(panels);
  for (int it = 0; it < 14; ++it) {
    panels *= 2;
    const double cur = eval(panels);
    out.error_estimate = std::abs(cur - prev);
    out.value = cur;
    if (out.error_estimate < tol * (1.0 + std::abs(cur))) {
      out.converged = true;
      return out;
    }
    prev = cur;
  }
  return out;
}

double t_llr_exact(long n, double qi, double qj, double t, double tol) {
  const double nn = static_cast<double>(n);
  const QuadratureValue ji = t_log_j(n, qi * t, tol);
  const QuadratureValue jj = t_log_j(n, qj * t, tol);
  if (!ji.converged || !jj.converged)
    throw std::runtime_error("t_llr_exact: quadrature did not converge");
  return (ji.value - 0.5 * nn * qi * qi) - (jj.value - 0.5 * nn * qj * qj);
}

TInvariantModel::TInvariantModel(ScoreMode mode) : mode_(mode) {}

std::unique_ptr<TrajectoryState> TInvariantModel::make_state() const {
  return std::make_unique<TState>();
}

double TInvariantModel::sample(const Param& theta, const TrajectoryState&,
                               RandomStream& rng) const {
  // representative distribution at unit scale
  return theta[0] + rng.normal();
}

double TInvariantModel::conditional_logpdf(const Param& theta,
                                           const TrajectoryState&,
                                           double x) const {
  const double r = x - theta[0];
  return -0.5 * (kLog2Pi + r * r);
}

void TInvariantModel::absorb(TrajectoryState& state, double x) const {
  auto& st = static_cast<TState&>(state);
  st.sum_x += x;
  st.sum_xx += x * x;
  bump(st);
}

double TInvariantModel::kl(const Param& theta, const Param& vartheta) const {
  if (theta == vartheta) return 0.0;
  return t_g(theta[0], vartheta[0], t_limit_statistic(theta[0]));
}

double TInvariantModel::t_statistic(const TrajectoryState& state) const {
  const auto& st = static_cast<const TState&>(state);
  if (st.n() == 0 || st.sum_xx <= 0.0) return 0.0;
  const double t =
      st.sum_x / std::sqrt(static_cast<double>(st.n()) * st.sum_xx);
  return std::clamp(t, -1.0, 1.0);
}

void TInvariantModel::hypothesis_scores(const TrajectoryState& state,
                                        std::span<const Param> hypotheses,
                                        std::span<double> out) const {
  const auto& st = static_cast<const TState&>(state);
  const long n = st.n();
  const double t = t_statistic(state);
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const double q = hypotheses[i][0];
    if (mode_ == ScoreMode::laplace) {
      out[i] = nn * (t_phi(q * t) - 0.5 * q * q);
    } else {
      const QuadratureValue j = t_log_j(n, q * t);
      out[i] = j.value - 0.5 * nn * q * q;
    }
  }
}

}  // namespace seqtest
