#include "seqtest/models/ar_cov.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seqtest {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct ArCovState : TrajectoryState {
  Eigen::VectorXd lags;   // lags(k) = X_{n-k-1}, zero initial conditions
  Eigen::MatrixXd gram;   // sum lag lag^T
  Eigen::VectorXd cross;  // sum lag * x
  double sum_xx = 0.0;

  explicit ArCovState(int p)
      : lags(Eigen::VectorXd::Zero(p)),
        gram(Eigen::MatrixXd::Zero(p, p)),
        cross(Eigen::VectorXd::Zero(p)) {}

  std::unique_ptr<TrajectoryState> clone() const override {
    return std::make_unique<ArCovState>(*this);
  }
};

// Maximizes -(sum_xx - 2 theta.b + theta^T G theta)/2 over a box by cyclic
// coordinate ascent; exact in one pass for p = 1.
Eigen::VectorXd box_ls_solution(const Eigen::MatrixXd& G,
                                const Eigen::VectorXd& b, const Region& region) {
  const int p = static_cast<int>(b.size());
  Eigen::VectorXd theta(p);
  for (int k = 0; k < p; ++k)
    theta(k) = std::clamp(0.0, region.lo[k], region.hi[k]);
  for (int pass = 0; pass < 200; ++pass) {
    double delta = 0.0;
    for (int k = 0; k < p; ++k) {
      if (G(k, k) <= 0.0) continue;
      double t = b(k);
      for (int m = 0; m < p; ++m)
        if (m != k) t -= G(k, m) * theta(m);
      t /= G(k, k);
      t = std::clamp(t, region.lo[k], region.hi[k]);
      delta = std::max(delta, std::abs(t - theta(k)));
      theta(k) = t;
    }
    if (delta < 1e-13) break;
  }
  return theta;
}

}  // namespace

ArCovModel::ArCovModel(int order) : order_(order) {
  if (order_ < 1) throw std::invalid_argument("ar_cov: order must be >= 1");
}

void ArCovModel::validate_param(const Param& theta) const {
  ObservationModel::validate_param(theta);
  if (!(ar_spectral_radius(theta) < 1.0))
    throw std::invalid_argument("ar_cov: parameter is not stable");
}

std::unique_ptr<TrajectoryState> ArCovModel::make_state() const {
  return std::make_unique<ArCovState>(order_);
}

double ArCovModel::sample(const Param& theta, const TrajectoryState& history,
                          RandomStream& rng) const {
  const auto& st = static_cast<const ArCovState&>(history);
  double mean = 0.0;
  for (int k = 0; k < order_; ++k) mean += theta[k] * st.lags(k);
  return mean + rng.normal();
}

double ArCovModel::conditional_logpdf(const Param& theta,
                                      const TrajectoryState& history,
                                      double x) const {
  const auto& st = static_cast<const ArCovState&>(history);
  double mean = 0.0;
  for (int k = 0; k < order_; ++k) mean += theta[k] * st.lags(k);
  const double r = x - mean;
  return -0.5 * (kLog2Pi + r * r);
}

void ArCovModel::absorb(TrajectoryState& state, double x) const {
  auto& st = static_cast<ArCovState&>(state);
  st.gram.noalias() += st.lags * st.lags.transpose();
  st.cross.noalias() += st.lags * x;
  st.sum_xx += x * x;
  for (int k = order_ - 1; k > 0; --k) st.lags(k) = st.lags(k - 1);
  st.lags(0) = x;
  bump(st);
}

double ArCovModel::kl(const Param& theta, const Param& vartheta) const {
  return ar_cov_kl(theta, vartheta);
}

bool ArCovModel::restricted_sup_logdensity(const TrajectoryState& state,
                                           const Region& region,
                                           double& out) const {
  const auto& st = static_cast<const ArCovState&>(state);
  const Eigen::VectorXd theta = box_ls_solution(st.gram, st.cross, region);
  const double rss = st.sum_xx - 2.0 * theta.dot(st.cross) +
                     theta.dot(st.gram * theta);
  out = -0.5 * static_cast<double>(st.n()) * kLog2Pi - 0.5 * rss;
  return true;
}

bool ArCovModel::estimate(const TrajectoryState& state, Param& out) const {
  const auto& st = static_cast<const ArCovState&>(state);
  if (st.n() < order_ + 1) return false;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(st.gram);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd theta = lu.solve(st.cross);
  out.assign(theta.data(), theta.data() + order_);
  // keep the plug-in estimate inside the stable domain
  const double r = ar_spectral_radius(out);
  if (r >= 0.999) {
    const double shrink = 0.999 / r;
    double scale = shrink;
    for (int k = 0; k < order_; ++k) {
      out[k] *= scale;
      scale *= shrink;
    }
  }
  return true;
}

bool ArCovModel::kl_infimum_closed_form(const Param& theta,
                                        const Region& region,
                                        double& out) const {
  if (order_ != 1) return false;
  const double v = std::clamp(theta[0], region.lo[0], region.hi[0]);
  const double d = theta[0] - v;
  out = 0.5 * d * d * ar_cov_stationary_covariance(theta)(0, 0);
  return true;
}

Eigen::MatrixXd ar_companion_matrix(const Param& theta) {
  const int p = static_cast<int>(theta.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
  for (int k = 0; k < p; ++k) L(0, k) = theta[k];
  for (int k = 1; k < p; ++k) L(k, k - 1) = 1.0;
  return L;
}

double ar_spectral_radius(const Param& theta) {
  if (theta.size() == 1) return std::abs(theta[0]);
  const Eigen::MatrixXd L = ar_companion_matrix(theta);
  Eigen::EigenSolver<Eigen::MatrixXd> es(L, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd ar_cov_stationary_covariance(const Param& theta, double tol,
                                             long max_terms) {
  if (!(ar_spectral_radius(theta) < 1.0))
    throw std::invalid_argument(
        "ar_cov_stationary_covariance: unstable parameter");
  const int p = static_cast<int>(theta.size());
  const Eigen::MatrixXd L = ar_companion_matrix(theta);
  Eigen::MatrixXd term = Eigen::MatrixXd::Zero(p, p);
  term(0, 0) = 1.0;  // B = e1 e1^T
  Eigen::MatrixXd f = term;
  for (long k = 1; k < max_terms; ++k) {
    term = L * term * L.transpose();
    f += term;
    if (term.cwiseAbs().maxCoeff() < tol) return f;
  }
  throw std::runtime_error(
      "ar_cov_stationary_covariance: series did not converge");
}

double ar_cov_kl(const Param& theta, const Param& vartheta) {
  if (theta.size() != vartheta.size())
    throw std::invalid_argument("ar_cov_kl: dimension mismatch");
  if (theta == vartheta) return 0.0;
  const Eigen::MatrixXd f = ar_cov_stationary_covariance(theta);
  Eigen::VectorXd d(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) d(k) = theta[k] - vartheta[k];
  return 0.5 * d.dot(f * d);
}

}  // namespace seqtest
