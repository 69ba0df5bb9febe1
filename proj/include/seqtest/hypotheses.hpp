#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace seqtest {

using Param = std::vector<double>;

// Closed axis-aligned box in parameter space; lo == hi in every dimension
// describes a single point.  Unbounded faces use +/-infinity.
struct Region {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool is_point() const;
  bool contains(const Param& p) const;
  // Strictly positive-volume overlap; touching faces do not count.
  bool interior_overlaps(const Region& other) const;

  static Region point(const Param& p);
  static Region interval(double lo, double hi);
};

// N+1 >= 2 hypothesis regions plus an optional indifference region.
// Regions must be pairwise non-overlapping (shared boundary faces are
// allowed) and share a common dimension.
struct HypothesisLayout {
  std::vector<Region> regions;
  std::optional<Region> indifference;

  int count() const { return static_cast<int>(regions.size()); }
  int param_dim() const { return regions.empty() ? 0 : regions[0].dim(); }
  bool all_points() const;
  void validate() const;  // throws std::invalid_argument on violation

  // Index of the first region containing p, count() for the indifference
  // region, or nullopt when p lies outside the layout.
  std::optional<int> locate(const Param& p) const;
};

// Off-diagonal alpha(i, j) = admissible probability of accepting H_j when
// H_i is true; entries must lie in (0, 1).  The diagonal is ignored.
struct ErrorBudget {
  Eigen::MatrixXd alpha;
  void validate() const;
};

// Acceptance thresholds a(i, j) = -log alpha(i, j), all positive.
struct ThresholdMatrix {
  Eigen::MatrixXd a;
  void validate() const;
};

ThresholdMatrix build_threshold_matrix(const ErrorBudget& budget);

enum class EngineKind { msprt, mmsprt, amsprt };

std::string engine_kind_name(EngineKind kind);

struct Decision {
  std::int64_t stopping_time = 0;
  int accepted = -1;      // hypothesis index; meaningful iff !censored
  bool censored = false;  // horizon reached without acceptance
  bool ambiguous_tie = false;
  bool invalid = false;   // non-finite statistic encountered
};

}  // namespace seqtest
