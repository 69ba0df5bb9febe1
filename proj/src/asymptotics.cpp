#include "seqtest/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "seqtest/numerics.hpp"

namespace seqtest {

namespace {

// Bounded search interval for an axis of a possibly unbounded region,
// widened until the boundary stops being the minimizer.
std::pair<double, double> axis_window(double lo, double hi, double center,
                                      double span) {
  double a = lo, b = hi;
  if (!std::isfinite(a)) a = std::min(center, b) - span;
  if (!std::isfinite(b)) b = std::max(center, a) + span;
  return {a, b};
}

double kl_infimum_numeric(const ObservationModel& model, const Param& theta,
                          const Region& region) {
  const int d = region.dim();
  Param point(d);
  for (int k = 0; k < d; ++k)
    point[k] = std::clamp(theta.size() == static_cast<std::size_t>(d)
                              ? theta[k]
                              : 0.0,
                          region.lo[k], region.hi[k]);

  double span = 8.0;
  double best = model.kl(theta, point);
  for (int expand = 0; expand < 5; ++expand) {
    bool on_artificial_boundary = false;
    for (int pass = 0; pass < 6; ++pass) {
      for (int k = 0; k < d; ++k) {
        const auto [a, b] =
            axis_window(region.lo[k], region.hi[k], point[k], span);
        const auto f = [&](double v) {
          Param p = point;
          p[k] = v;
          return model.kl(theta, p);
        };
        point[k] = grid_refine_min(f, a, b, 512, 1e-10);
        if (!std::isfinite(region.lo[k]) && point[k] < a + 1e-6 * span)
          on_artificial_boundary = true;
        if (!std::isfinite(region.hi[k]) && point[k] > b - 1e-6 * span)
          on_artificial_boundary = true;
      }
    }
    best = model.kl(theta, point);
    if (!on_artificial_boundary) break;
    span *= 10.0;
  }
  return best;
}

}  // namespace

void PsiSpec::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("psi: beta must be positive");
}

double PsiSpec::psi(double t) const { return std::pow(t, beta); }

double PsiSpec::inverse(double t) const { return std::pow(t, 1.0 / beta); }

double kl_infimum(const ObservationModel& model, const Param& theta,
                  const Region& region) {
  if (static_cast<int>(theta.size()) != region.dim())
    throw std::invalid_argument("kl_infimum: dimension mismatch");
  if (region.contains(theta)) return 0.0;
  if (region.is_point()) return model.kl(theta, region.lo);
  double closed = 0.0;
  if (model.kl_infimum_closed_form(theta, region, closed)) return closed;
  return kl_infimum_numeric(model, theta, region);
}

EssPrediction predict_ess(const HypothesisLayout& layout,
                          const ErrorBudget& budget,
                          const ObservationModel& model, const PsiSpec& psi,
                          const Param& theta, std::span<const int> orders) {
  layout.validate();
  budget.validate();
  psi.validate();
  if (budget.alpha.rows() != layout.count())
    throw std::invalid_argument("predict_ess: budget shape mismatch");

  const int m = layout.count();
  std::vector<double> info(m);
  for (int j = 0; j < m; ++j)
    info[j] = kl_infimum(model, theta, layout.regions[j]);

  const auto branch = [&](int i) {
    double worst = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double a = -std::log(budget.alpha(j, i));
      worst = std::max(worst, info[j] > 0.0
                                  ? a / info[j]
                                  : std::numeric_limits<double>::infinity());
    }
    return worst;
  };

  const auto located = layout.locate(theta);
  double scale;
  if (located && *located < m) {
    scale = branch(*located);
  } else {
    scale = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) scale = std::min(scale, branch(i));
  }

  EssPrediction out;
  out.base = psi.inverse(scale);
  for (int r : orders) {
    if (r < 1) throw std::invalid_argument("predict_ess: orders must be >= 1");
    out.orders.push_back(r);
    out.values.push_back(std::pow(out.base, r));
  }
  return out;
}

double worst_point_quadratic(double theta0, double theta1, double c) {
  if (!(theta0 < theta1))
    throw std::invalid_argument("worst_point: need theta0 < theta1");
  if (!(c > 0.0)) throw std::invalid_argument("worst_point: need c > 0");
  const double s = std::sqrt(c);
  return (theta0 + s * theta1) / (1.0 + s);
}

double worst_point_quadratic_bisect(double theta0, double theta1, double c,
                                    double tol) {
  if (!(theta0 < theta1))
    throw std::invalid_argument("worst_point: need theta0 < theta1");
  const auto h = [&](double t) {
    return c * (theta1 - t) * (theta1 - t) - (t - theta0) * (t - theta0);
  };
  return bisect(h, theta0, theta1, tol);
}

double worst_point_log_snr(double q0, double q1, double c, double tol) {
  if (!(q0 < q1)) throw std::invalid_argument("worst_point: need q0 < q1");
  if (!(c > 0.0)) throw std::invalid_argument("worst_point: need c > 0");
  if (c == 1.0) return 0.5 * (q0 + q1);
  const auto h = [&](double q) {
    return c * std::log1p((q1 - q) * (q1 - q)) -
           std::log1p((q - q0) * (q - q0));
  };
  return bisect(h, q0, q1, tol);
}

}  // namespace seqtest
