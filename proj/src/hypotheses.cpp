#include "seqtest/hypotheses.hpp"

#include <cmath>
#include <stdexcept>

namespace seqtest {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool Region::is_point() const {
  for (int d = 0; d < dim(); ++d)
    if (lo[d] != hi[d]) return false;
  return dim() > 0;
}

bool Region::contains(const Param& p) const {
  if (static_cast<int>(p.size()) != dim()) return false;
  for (int d = 0; d < dim(); ++d)
    if (p[d] < lo[d] || p[d] > hi[d]) return false;
  return true;
}

bool Region::interior_overlaps(const Region& other) const {
  if (other.dim() != dim()) return false;
  // Conflict iff the relative interiors intersect in every dimension; a
  // degenerate interval's relative interior is the point itself.
  for (int d = 0; d < dim(); ++d) {
    const bool a_pt = lo[d] == hi[d];
    const bool b_pt = other.lo[d] == other.hi[d];
    if (a_pt && b_pt) {
      if (lo[d] != other.lo[d]) return false;
    } else if (a_pt) {
      if (!(other.lo[d] < lo[d] && lo[d] < other.hi[d])) return false;
    } else if (b_pt) {
      if (!(lo[d] < other.lo[d] && other.lo[d] < hi[d])) return false;
    } else {
      if (!(std::max(lo[d], other.lo[d]) < std::min(hi[d], other.hi[d])))
        return false;
    }
  }
  return true;
}

Region Region::point(const Param& p) { return Region{p, p}; }

Region Region::interval(double lo, double hi) { return Region{{lo}, {hi}}; }

bool HypothesisLayout::all_points() const {
  for (const auto& r : regions)
    if (!r.is_point()) return false;
  return !regions.empty();
}

void HypothesisLayout::validate() const {
  if (regions.size() < 2)
    throw std::invalid_argument("layout: need at least two hypotheses");
  const int d = param_dim();
  if (d <= 0) throw std::invalid_argument("layout: empty parameter dimension");
  for (const auto& r : regions) {
    if (r.dim() != d)
      throw std::invalid_argument("layout: inconsistent region dimensions");
    for (int k = 0; k < d; ++k) {
      if (std::isnan(r.lo[k]) || std::isnan(r.hi[k]) || r.lo[k] > r.hi[k])
        throw std::invalid_argument("layout: malformed region bounds");
    }
  }
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t j = i + 1; j < regions.size(); ++j)
      if (regions[i].interior_overlaps(regions[j]))
        throw std::invalid_argument("layout: hypothesis regions overlap");
  if (indifference) {
    if (indifference->dim() != d)
      throw std::invalid_argument("layout: indifference dimension mismatch");
    for (const auto& r : regions)
      if (indifference->interior_overlaps(r))
        throw std::invalid_argument(
            "layout: indifference region overlaps a hypothesis region");
  }
}

std::optional<int> HypothesisLayout::locate(const Param& p) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].contains(p)) return static_cast<int>(i);
  if (indifference && indifference->contains(p)) return count();
  return std::nullopt;
}

void ErrorBudget::validate() const {
  if (alpha.rows() != alpha.cols() || alpha.rows() < 2)
    throw std::invalid_argument("error budget: need a square matrix, N+1 >= 2");
  for (Eigen::Index i = 0; i < alpha.rows(); ++i)
    for (Eigen::Index j = 0; j < alpha.cols(); ++j) {
      if (i == j) continue;
      const double v = alpha(i, j);
      if (!(v > 0.0) || !(v < 1.0))
        throw std::invalid_argument(
            "error budget: off-diagonal entries must lie in (0, 1)");
    }
}

void ThresholdMatrix::validate() const {
  if (a.rows() != a.cols() || a.rows() < 2)
    throw std::invalid_argument("thresholds: need a square matrix, N+1 >= 2");
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i == j) continue;
      if (!(a(i, j) > 0.0) || a(i, j) == kInf)
        throw std::invalid_argument("thresholds: entries must be positive");
    }
}

ThresholdMatrix build_threshold_matrix(const ErrorBudget& budget) {
  budget.validate();
  ThresholdMatrix t;
  t.a = Eigen::MatrixXd::Zero(budget.alpha.rows(), budget.alpha.cols());
  for (Eigen::Index i = 0; i < budget.alpha.rows(); ++i)
    for (Eigen::Index j = 0; j < budget.alpha.cols(); ++j)
      if (i != j) t.a(i, j) = -std::log(budget.alpha(i, j));
  return t;
}

std::string engine_kind_name(EngineKind kind) {
  switch (kind) {
    case EngineKind::msprt: return "msprt";
    case EngineKind::mmsprt: return "mmsprt";
    case EngineKind::amsprt: return "amsprt";
  }
  return "unknown";
}

}  // namespace seqtest
