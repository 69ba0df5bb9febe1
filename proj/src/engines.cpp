#include "seqtest/engines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "seqtest/numerics.hpp"

namespace seqtest {

namespace {

Decision make_decision(long n, int accepted, bool ambiguous) {
  Decision d;
  d.stopping_time = n;
  d.accepted = accepted;
  d.ambiguous_tie = ambiguous;
  return d;
}

Decision make_censored(long n) {
  Decision d;
  d.stopping_time = n;
  d.censored = true;
  return d;
}

Decision make_invalid(long n) {
  Decision d;
  d.stopping_time = n;
  d.censored = true;
  d.invalid = true;
  return d;
}

}  // namespace

std::optional<int> accept_candidate(std::span<const double> margins,
                                    bool& ambiguous_tie) {
  std::optional<int> best;
  int qualified = 0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    if (margins[i] >= 0.0) {
      ++qualified;
      if (!best) best = static_cast<int>(i);
    }
  }
  ambiguous_tie = qualified > 1;
  return best;
}

MsprtState make_msprt_state(int hypotheses) {
  if (hypotheses < 2)
    throw std::invalid_argument("msprt: need at least two hypotheses");
  MsprtState st;
  st.lambda = Eigen::MatrixXd::Zero(hypotheses, hypotheses);
  return st;
}

std::optional<Decision> msprt_step(MsprtState& state,
                                   const Eigen::MatrixXd& increments,
                                   const ThresholdMatrix& thresholds,
                                   long horizon) {
  const int m = static_cast<int>(state.lambda.rows());
  if (increments.rows() != m || increments.cols() != m)
    throw std::invalid_argument("msprt_step: increment shape mismatch");
  if (state.invalid) return make_invalid(state.n);

  ++state.n;
  state.lambda += increments;

  std::vector<double> margins(m);
  for (int i = 0; i < m; ++i) {
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      worst = std::min(worst, state.lambda(i, j) - thresholds.a(j, i));
    }
    margins[i] = worst;
    if (!std::isfinite(state.lambda.row(i).sum())) {
      state.invalid = true;
      return make_invalid(state.n);
    }
  }

  bool ambiguous = false;
  if (const auto pick = accept_candidate(margins, ambiguous))
    return make_decision(state.n, *pick, ambiguous);
  if (state.n >= horizon) return make_censored(state.n);
  return std::nullopt;
}

MsprtEngine::MsprtEngine(const ObservationModel& model,
                         const HypothesisLayout& layout,
                         ThresholdMatrix thresholds, long horizon)
    : model_(model), thresholds_(std::move(thresholds)), horizon_(horizon) {
  layout.validate();
  thresholds_.validate();
  if (!layout.all_points())
    throw std::invalid_argument("msprt: layout must be simple hypotheses");
  if (thresholds_.a.rows() != layout.count())
    throw std::invalid_argument("msprt: threshold shape mismatch");
  if (horizon_ < 1) throw std::invalid_argument("msprt: horizon must be >= 1");
  for (const auto& r : layout.regions) points_.push_back(r.lo);
}

MsprtEngine::State MsprtEngine::make_state() const {
  State st;
  st.traj = model_.make_state();
  st.scores.assign(points_.size(), 0.0);
  st.core = make_msprt_state(static_cast<int>(points_.size()));
  return st;
}

std::optional<Decision> MsprtEngine::step(State& state, double x) const {
  const int m = static_cast<int>(points_.size());
  std::vector<double> inc(m);
  if (model_.whole_sample_scores()) {
    model_.absorb(*state.traj, x);
    std::vector<double> fresh(m);
    model_.hypothesis_scores(*state.traj, points_, fresh);
    for (int i = 0; i < m; ++i) {
      inc[i] = fresh[i] - state.scores[i];
      state.scores[i] = fresh[i];
    }
  } else {
    for (int i = 0; i < m; ++i)
      inc[i] = model_.conditional_logpdf(points_[i], *state.traj, x);
    model_.absorb(*state.traj, x);
    for (int i = 0; i < m; ++i) state.scores[i] += inc[i];
  }

  Eigen::MatrixXd pairwise(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      pairwise(i, j) = i == j ? 0.0 : inc[i] - inc[j];
  return msprt_step(state.core, pairwise, thresholds_, horizon_);
}

MixtureGrid make_uniform_grid(const Region& range,
                              const std::vector<int>& points_per_dim) {
  const int d = range.dim();
  if (static_cast<int>(points_per_dim.size()) != d)
    throw std::invalid_argument("mixture grid: dimension mismatch");
  for (int k = 0; k < d; ++k) {
    if (points_per_dim[k] < 1)
      throw std::invalid_argument("mixture grid: need >= 1 point per axis");
    if (!std::isfinite(range.lo[k]) || !std::isfinite(range.hi[k]) ||
        range.lo[k] > range.hi[k])
      throw std::invalid_argument("mixture grid: range must be bounded");
    if (points_per_dim[k] == 1 && range.lo[k] != range.hi[k])
      throw std::invalid_argument(
          "mixture grid: single-point axis needs a degenerate range");
  }

  // per-axis nodes and trapezoid weights
  std::vector<std::vector<double>> nodes(d), w(d);
  for (int k = 0; k < d; ++k) {
    const int m = points_per_dim[k];
    nodes[k].resize(m);
    w[k].assign(m, 1.0);
    if (m == 1) {
      nodes[k][0] = range.lo[k];
    } else {
      const double h = (range.hi[k] - range.lo[k]) / (m - 1);
      for (int i = 0; i < m; ++i) nodes[k][i] = range.lo[k] + h * i;
      w[k][0] = w[k][m - 1] = 0.5;
    }
  }

  MixtureGrid grid;
  long total = 1;
  for (int k = 0; k < d; ++k) total *= points_per_dim[k];
  grid.points.reserve(total);
  std::vector<double> weights;
  weights.reserve(total);
  std::vector<int> idx(d, 0);
  for (long c = 0; c < total; ++c) {
    Param p(d);
    double wt = 1.0;
    for (int k = 0; k < d; ++k) {
      p[k] = nodes[k][idx[k]];
      wt *= w[k][idx[k]];
    }
    grid.points.push_back(std::move(p));
    weights.push_back(wt);
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < points_per_dim[k]) break;
      idx[k] = 0;
    }
  }
  double sum = 0.0;
  for (double v : weights) sum += v;
  grid.log_weight.reserve(total);
  for (double v : weights) grid.log_weight.push_back(std::log(v / sum));
  return grid;
}

MmsprtEngine::MmsprtEngine(const ObservationModel& model,
                           HypothesisLayout layout, ThresholdMatrix thresholds,
                           MixtureGrid grid, long horizon)
    : model_(model),
      layout_(std::move(layout)),
      thresholds_(std::move(thresholds)),
      grid_(std::move(grid)),
      horizon_(horizon) {
  layout_.validate();
  thresholds_.validate();
  if (thresholds_.a.rows() != layout_.count())
    throw std::invalid_argument("mmsprt: threshold shape mismatch");
  if (grid_.points.empty())
    throw std::invalid_argument("mmsprt: empty mixture grid");
  if (horizon_ < 1) throw std::invalid_argument("mmsprt: horizon must be >= 1");
  if (model_.whole_sample_scores())
    throw std::invalid_argument(
        "mmsprt: model does not factor into per-observation densities");

  region_points_.resize(layout_.count());
  need_grid_sup_.assign(layout_.count(), false);
  auto probe = model_.make_state();
  for (int j = 0; j < layout_.count(); ++j) {
    double dummy = 0.0;
    if (model_.restricted_sup_logdensity(*probe, layout_.regions[j], dummy))
      continue;
    need_grid_sup_[j] = true;
    for (std::size_t k = 0; k < grid_.points.size(); ++k)
      if (layout_.regions[j].contains(grid_.points[k]))
        region_points_[j].push_back(static_cast<int>(k));
    if (region_points_[j].empty())
      throw std::invalid_argument(
          "mmsprt: no closed-form restricted supremum and no grid point in "
          "a hypothesis region");
  }
}

MmsprtEngine::State MmsprtEngine::make_state() const {
  State st;
  st.traj = model_.make_state();
  st.grid_cum.assign(grid_.points.size(), 0.0);
  st.lambda.assign(layout_.count(), 0.0);
  st.scratch.assign(grid_.points.size(), 0.0);
  return st;
}

std::optional<Decision> MmsprtEngine::step(State& state, double x) const {
  const std::size_t m = grid_.points.size();
  for (std::size_t k = 0; k < m; ++k)
    state.grid_cum[k] +=
        model_.conditional_logpdf(grid_.points[k], *state.traj, x);
  model_.absorb(*state.traj, x);
  ++state.n;

  for (std::size_t k = 0; k < m; ++k)
    state.scratch[k] = state.grid_cum[k] + grid_.log_weight[k];
  state.log_g = log_sum_exp(state.scratch);

  const int regions = layout_.count();
  bool finite = std::isfinite(state.log_g);
  for (int j = 0; j < regions; ++j) {
    double sup = 0.0;
    if (need_grid_sup_[j]) {
      sup = -std::numeric_limits<double>::infinity();
      for (int k : region_points_[j])
        sup = std::max(sup, state.grid_cum[k]);
    } else {
      model_.restricted_sup_logdensity(*state.traj, layout_.regions[j], sup);
    }
    state.lambda[j] = state.log_g - sup;
    finite = finite && std::isfinite(state.lambda[j]);
  }
  if (!finite) {
    Decision d;
    d.stopping_time = state.n;
    d.censored = true;
    d.invalid = true;
    return d;
  }

  std::vector<double> margins(regions);
  for (int i = 0; i < regions; ++i) {
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < regions; ++j) {
      if (j == i) continue;
      worst = std::min(worst, state.lambda[j] - thresholds_.a(j, i));
    }
    margins[i] = worst;
  }
  bool ambiguous = false;
  if (const auto pick = accept_candidate(margins, ambiguous))
    return make_decision(state.n, *pick, ambiguous);
  if (state.n >= horizon_) return make_censored(state.n);
  return std::nullopt;
}

AmsprtEngine::AmsprtEngine(const ObservationModel& model,
                           HypothesisLayout layout, ThresholdMatrix thresholds,
                           Param initial_estimate, long horizon)
    : model_(model),
      layout_(std::move(layout)),
      thresholds_(std::move(thresholds)),
      init_(std::move(initial_estimate)),
      horizon_(horizon) {
  layout_.validate();
  thresholds_.validate();
  if (thresholds_.a.rows() != layout_.count())
    throw std::invalid_argument("amsprt: threshold shape mismatch");
  if (horizon_ < 1) throw std::invalid_argument("amsprt: horizon must be >= 1");
  model_.validate_param(init_);
  auto probe = model_.make_state();
  double dummy = 0.0;
  for (const auto& region : layout_.regions)
    if (!model_.restricted_sup_logdensity(*probe, region, dummy))
      throw std::invalid_argument(
          "amsprt: model lacks restricted supremum likelihoods");
}

AmsprtEngine::State AmsprtEngine::make_state() const {
  State st;
  st.traj = model_.make_state();
  st.estimate = init_;
  st.lambda.assign(layout_.count(), 0.0);
  return st;
}

std::optional<Decision> AmsprtEngine::step(State& state, double x) const {
  state.adaptive += model_.conditional_logpdf(state.estimate, *state.traj, x);
  model_.absorb(*state.traj, x);
  Param fresh;
  if (model_.estimate(*state.traj, fresh)) {
    state.estimate = std::move(fresh);
  } else {
    state.estimate = init_;
    ++state.fallback_steps;
  }

  const long n = state.traj->n();
  const int regions = layout_.count();
  bool finite = std::isfinite(state.adaptive);
  for (int j = 0; j < regions; ++j) {
    double sup = 0.0;
    model_.restricted_sup_logdensity(*state.traj, layout_.regions[j], sup);
    state.lambda[j] = state.adaptive - sup;
    finite = finite && std::isfinite(state.lambda[j]);
  }
  if (!finite) return make_invalid(n);

  std::vector<double> margins(regions);
  for (int i = 0; i < regions; ++i) {
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < regions; ++j) {
      if (j == i) continue;
      worst = std::min(worst, state.lambda[j] - thresholds_.a(j, i));
    }
    margins[i] = worst;
  }
  bool ambiguous = false;
  if (const auto pick = accept_candidate(margins, ambiguous))
    return make_decision(n, *pick, ambiguous);
  if (n >= horizon_) return make_censored(n);
  return std::nullopt;
}

}  // namespace seqtest
