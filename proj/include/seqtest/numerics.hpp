#pragma once

#include <functional>
#include <span>
#include <vector>

namespace seqtest {

// log(sum_i exp(v_i)) with max shifting; -inf entries are ignored.
double log_sum_exp(std::span<const double> v);

// log(exp(a) + exp(b))
double log_add_exp(double a, double b);

// Compensated (Kahan) accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Root of f on [lo, hi]; requires a sign change.  Runs until the bracket
// width is below tol.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double tol);

// Minimum of a unimodal f on [lo, hi] by golden-section search.
double golden_section_min(const std::function<double(double)>& f, double lo,
                          double hi, double tol);

// Coarse grid scan followed by golden-section refinement around the best
// grid cell.  Returns the minimizing argument.
double grid_refine_min(const std::function<double(double)>& f, double lo,
                       double hi, int grid_points, double tol);

struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
};

// Wilson score interval for a binomial proportion at the given z quantile.
WilsonInterval wilson_interval(long successes, long trials, double z);

// z quantile used for the 99% two-sided Wilson intervals in reports.
inline constexpr double kWilsonZ99 = 2.5758293035489004;

}  // namespace seqtest
