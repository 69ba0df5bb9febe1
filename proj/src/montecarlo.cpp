#include "seqtest/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "seqtest/numerics.hpp"

namespace seqtest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool finite_region(const Region& r) {
  for (int d = 0; d < r.dim(); ++d) {
    if (!std::isfinite(r.lo[d]) || !std::isfinite(r.hi[d])) return false;
  }
  return true;
}

}  // namespace

Region layout_hull(const HypothesisLayout& layout) {
  Region hull = layout.regions.at(0);
  auto widen = [&hull](const Region& r) {
    for (int d = 0; d < hull.dim(); ++d) {
      hull.lo[d] = std::min(hull.lo[d], r.lo[d]);
      hull.hi[d] = std::max(hull.hi[d], r.hi[d]);
    }
  };
  for (const Region& r : layout.regions) widen(r);
  if (layout.indifference) widen(*layout.indifference);
  return hull;
}

void ExperimentPlan::validate() const {
  if (!model) throw std::invalid_argument("plan: model is required");
  layout.validate();
  budget.validate();
  if (budget.alpha.rows() != layout.count()) {
    throw std::invalid_argument("plan: error budget size mismatch");
  }
  if (layout.param_dim() != model->param_dim()) {
    throw std::invalid_argument("plan: layout dimension mismatch");
  }
  if (points.empty()) throw std::invalid_argument("plan: no simulation points");
  std::set<std::string> ids;
  for (const auto& pt : points) {
    if (pt.id.empty()) throw std::invalid_argument("plan: empty point id");
    if (!ids.insert(pt.id).second) {
      throw std::invalid_argument("plan: duplicate point id '" + pt.id + "'");
    }
    model->validate_param(pt.theta);
  }
  if (trials < 1) throw std::invalid_argument("plan: trials must be >= 1");
  if (horizon < 1) throw std::invalid_argument("plan: horizon must be >= 1");
  if (workers < 1) throw std::invalid_argument("plan: workers must be >= 1");
  if (moment_orders.empty()) {
    throw std::invalid_argument("plan: need at least one moment order");
  }
  for (int r : moment_orders) {
    if (r < 1) throw std::invalid_argument("plan: moment order must be >= 1");
  }
  psi.validate();

  switch (engine.kind) {
    case EngineKind::msprt:
      if (!layout.all_points()) {
        throw std::invalid_argument(
            "plan: the pairwise engine needs point hypotheses");
      }
      break;
    case EngineKind::mmsprt: {
      if (model->whole_sample_scores()) {
        throw std::invalid_argument(
            "plan: the mixture engine needs per-observation densities");
      }
      if (static_cast<int>(engine.grid_points.size()) != model->param_dim()) {
        throw std::invalid_argument(
            "plan: grid_points must list one count per parameter axis");
      }
      const Region box = engine.prior_box.value_or(layout_hull(layout));
      if (box.dim() != model->param_dim()) {
        throw std::invalid_argument("plan: prior box dimension mismatch");
      }
      if (!finite_region(box)) {
        throw std::invalid_argument(
            "plan: mixture prior box must be bounded; set prior_box");
      }
      break;
    }
    case EngineKind::amsprt: {
      Param init;
      if (engine.adaptive_initial) {
        init = *engine.adaptive_initial;
      } else {
        const Region hull = layout_hull(layout);
        if (!finite_region(hull)) {
          throw std::invalid_argument(
              "plan: adaptive_initial is required with unbounded regions");
        }
        for (int d = 0; d < hull.dim(); ++d) {
          init.push_back(0.5 * (hull.lo[d] + hull.hi[d]));
        }
      }
      model->validate_param(init);
      break;
    }
  }
}

namespace {

class TrialRunner {
 public:
  virtual ~TrialRunner() = default;
  virtual Decision run(const Param& theta, RandomStream& rng) const = 0;
};

class MsprtRunner : public TrialRunner {
 public:
  MsprtRunner(std::shared_ptr<const ObservationModel> model,
              const HypothesisLayout& layout, ThresholdMatrix thresholds,
              long horizon)
      : model_(std::move(model)),
        engine_(*model_, layout, std::move(thresholds), horizon),
        horizon_(horizon) {}

  Decision run(const Param& theta, RandomStream& rng) const override {
    auto state = engine_.make_state();
    for (long t = 0; t < horizon_; ++t) {
      const double x = model_->sample(theta, *state.traj, rng);
      if (auto d = engine_.step(state, x)) return *d;
    }
    Decision d;
    d.stopping_time = horizon_;
    d.censored = true;
    return d;
  }

 private:
  std::shared_ptr<const ObservationModel> model_;
  MsprtEngine engine_;
  long horizon_;
};

class MmsprtRunner : public TrialRunner {
 public:
  MmsprtRunner(std::shared_ptr<const ObservationModel> model,
               const HypothesisLayout& layout, ThresholdMatrix thresholds,
               MixtureGrid grid, long horizon)
      : model_(std::move(model)),
        engine_(*model_, layout, std::move(thresholds), std::move(grid),
                horizon),
        horizon_(horizon) {}

  Decision run(const Param& theta, RandomStream& rng) const override {
    auto state = engine_.make_state();
    for (long t = 0; t < horizon_; ++t) {
      const double x = model_->sample(theta, *state.traj, rng);
      if (auto d = engine_.step(state, x)) return *d;
    }
    Decision d;
    d.stopping_time = horizon_;
    d.censored = true;
    return d;
  }

 private:
  std::shared_ptr<const ObservationModel> model_;
  MmsprtEngine engine_;
  long horizon_;
};

class AmsprtRunner : public TrialRunner {
 public:
  AmsprtRunner(std::shared_ptr<const ObservationModel> model,
               const HypothesisLayout& layout, ThresholdMatrix thresholds,
               Param initial, long horizon)
      : model_(std::move(model)),
        engine_(*model_, layout, std::move(thresholds), std::move(initial),
                horizon),
        horizon_(horizon) {}

  Decision run(const Param& theta, RandomStream& rng) const override {
    auto state = engine_.make_state();
    for (long t = 0; t < horizon_; ++t) {
      const double x = model_->sample(theta, *state.traj, rng);
      if (auto d = engine_.step(state, x)) return *d;
    }
    Decision d;
    d.stopping_time = horizon_;
    d.censored = true;
    return d;
  }

 private:
  std::shared_ptr<const ObservationModel> model_;
  AmsprtEngine engine_;
  long horizon_;
};

std::unique_ptr<TrialRunner> make_runner(const ExperimentPlan& plan,
                                         const ThresholdMatrix& thresholds) {
  switch (plan.engine.kind) {
    case EngineKind::msprt:
      return std::make_unique<MsprtRunner>(plan.model, plan.layout, thresholds,
                                           plan.horizon);
    case EngineKind::mmsprt: {
      const Region box =
          plan.engine.prior_box.value_or(layout_hull(plan.layout));
      MixtureGrid grid = make_uniform_grid(box, plan.engine.grid_points);
      return std::make_unique<MmsprtRunner>(plan.model, plan.layout,
                                            thresholds, std::move(grid),
                                            plan.horizon);
    }
    case EngineKind::amsprt: {
      Param init;
      if (plan.engine.adaptive_initial) {
        init = *plan.engine.adaptive_initial;
      } else {
        const Region hull = layout_hull(plan.layout);
        for (int d = 0; d < hull.dim(); ++d) {
          init.push_back(0.5 * (hull.lo[d] + hull.hi[d]));
        }
      }
      return std::make_unique<AmsprtRunner>(plan.model, plan.layout,
                                            thresholds, std::move(init),
                                            plan.horizon);
    }
  }
  throw std::logic_error("unknown engine kind");
}

// Runs trials [w, w+stride, ...] into their slots; exceptions are carried
// back to the caller.
void run_slice(const TrialRunner& runner, const Param& theta,
               std::uint64_t master_seed, int point_index, long trials,
               int offset, int stride, std::vector<Decision>& slots,
               std::exception_ptr& error) {
  try {
    for (long k = offset; k < trials; k += stride) {
      RandomStream rng(master_seed, static_cast<std::uint64_t>(point_index),
                       static_cast<std::uint64_t>(k));
      slots[static_cast<std::size_t>(k)] = runner.run(theta, rng);
    }
  } catch (...) {
    error = std::current_exception();
  }
}

struct MeanSe {
  double mean = kNaN;
  double se = kNaN;
  long count = 0;
};

// Two-pass compensated mean and standard error over f(trial) for trials
// matching the filter, walked in index order.
template <typename Value, typename Filter>
MeanSe mean_se(const std::vector<Decision>& slots, Value&& value,
               Filter&& filter) {
  MeanSe out;
  KahanSum sum;
  for (const Decision& d : slots) {
    if (!filter(d)) continue;
    sum.add(value(d));
    ++out.count;
  }
  if (out.count == 0) return out;
  out.mean = sum.value() / static_cast<double>(out.count);
  if (out.count == 1) {
    out.se = 0.0;
    return out;
  }
  KahanSum sq;
  for (const Decision& d : slots) {
    if (!filter(d)) continue;
    const double dev = value(d) - out.mean;
    sq.add(dev * dev);
  }
  const double var = sq.value() / static_cast<double>(out.count - 1);
  out.se = std::sqrt(std::max(var, 0.0) / static_cast<double>(out.count));
  return out;
}

PointReport aggregate_point(const ExperimentPlan& plan,
                            const ThresholdMatrix& thresholds,
                            const SimulationPoint& point,
                            const std::vector<Decision>& slots) {
  const int n_hyp = plan.layout.count();
  PointReport pr;
  pr.id = point.id;
  pr.theta = point.theta;
  pr.true_hypothesis = plan.layout.locate(point.theta);
  pr.trials = static_cast<long>(slots.size());
  pr.accept_counts.assign(n_hyp, 0);
  for (const Decision& d : slots) {
    if (d.invalid) ++pr.invalid;
    if (d.censored) {
      ++pr.censored;
    } else {
      ++pr.decided;
      ++pr.accept_counts[d.accepted];
    }
    if (d.ambiguous_tie) ++pr.ambiguous;
  }

  if (pr.true_hypothesis && *pr.true_hypothesis < n_hyp) {
    const int i = *pr.true_hypothesis;
    for (int j = 0; j < n_hyp; ++j) {
      if (j == i) continue;
      ErrorCell cell;
      cell.true_hypothesis = i;
      cell.accepted = j;
      cell.count = pr.accept_counts[j];
      cell.alpha_hat =
          static_cast<double>(cell.count) / static_cast<double>(pr.trials);
      cell.wilson = wilson_interval(cell.count, pr.trials, kWilsonZ99);
      cell.bound = std::exp(-thresholds.a(i, j));
      cell.margin = cell.bound - cell.alpha_hat;
      cell.bound_ok = cell.wilson.lower <= cell.bound;
      pr.errors.push_back(cell);
    }
  }

  const double horizon = static_cast<double>(plan.horizon);
  for (int r : plan.moment_orders) {
    MomentCell mc;
    mc.order = r;
    const auto decided_stat = mean_se(
        slots,
        [r](const Decision& d) {
          return std::pow(static_cast<double>(d.stopping_time), r);
        },
        [](const Decision& d) { return !d.censored; });
    mc.decided = decided_stat.count;
    mc.decided_mean = decided_stat.mean;
    mc.decided_se = decided_stat.se;
    const auto trunc_stat = mean_se(
        slots,
        [r, horizon](const Decision& d) {
          return std::pow(
              std::min(static_cast<double>(d.stopping_time), horizon), r);
        },
        [](const Decision&) { return true; });
    mc.truncated_mean = trunc_stat.mean;
    mc.truncated_se = trunc_stat.se;
    pr.moments.push_back(mc);
  }

  pr.predicted = predict_ess(plan.layout, plan.budget, *plan.model, plan.psi,
                             point.theta, plan.moment_orders);
  for (std::size_t idx = 0; idx < plan.moment_orders.size(); ++idx) {
    const double pred = pr.predicted.values[idx];
    const double obs = pr.moments[idx].decided_mean;
    pr.ess_ratio.push_back(
        (std::isfinite(pred) && pred > 0.0 && std::isfinite(obs))
            ? obs / pred
            : kNaN);
  }
  return pr;
}

}  // namespace

MonteCarloReport run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const ThresholdMatrix thresholds = build_threshold_matrix(plan.budget);
  const auto runner = make_runner(plan, thresholds);

  MonteCarloReport report;
  report.engine = engine_kind_name(plan.engine.kind);
  report.master_seed = plan.master_seed;
  report.trials = plan.trials;
  report.horizon = plan.horizon;

  const int workers = static_cast<int>(
      std::min<long>(plan.workers, std::max<long>(plan.trials, 1)));
  for (std::size_t p = 0; p < plan.points.size(); ++p) {
    std::vector<Decision> slots(static_cast<std::size_t>(plan.trials));
    if (workers <= 1) {
      std::exception_ptr error;
      run_slice(*runner, plan.points[p].theta, plan.master_seed,
                static_cast<int>(p), plan.trials, 0, 1, slots, error);
      if (error) std::rethrow_exception(error);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(workers);
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back(run_slice, std::cref(*runner),
                          std::cref(plan.points[p].theta), plan.master_seed,
                          static_cast<int>(p), plan.trials, w, workers,
                          std::ref(slots), std::ref(errors[w]));
      }
      for (auto& t : pool) t.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    report.points.push_back(
        aggregate_point(plan, thresholds, plan.points[p], slots));
    report.invalid_total += report.points.back().invalid;
    for (const ErrorCell& cell : report.points.back().errors) {
      if (!cell.bound_ok) report.all_bounds_ok = false;
    }
  }
  return report;
}

std::vector<BoundCheckEntry> bound_check(const MonteCarloReport& report) {
  std::vector<BoundCheckEntry> out;
  for (const PointReport& pr : report.points) {
    for (const ErrorCell& cell : pr.errors) {
      BoundCheckEntry e;
      e.point_id = pr.id;
      e.i = cell.true_hypothesis;
      e.j = cell.accepted;
      e.alpha_hat = cell.alpha_hat;
      e.bound = cell.bound;
      e.margin = cell.margin;
      e.pass = cell.bound_ok;
      out.push_back(e);
    }
  }
  return out;
}

bool all_bounds_pass(const MonteCarloReport& report) {
  return report.all_bounds_ok;
}

EssTrendReport ess_ratio_trend(const ExperimentPlan& base,
                               std::span<const double> alphas) {
  if (alphas.empty()) {
    throw std::invalid_argument("ess_ratio_trend: no budget levels");
  }
  ExperimentPlan plan = base;
  plan.points.assign(1, base.points.at(0));

  EssTrendReport trend;
  trend.orders = base.moment_orders;
  for (std::size_t level = 0; level < alphas.size(); ++level) {
    const double alpha = alphas[level];
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
      throw std::invalid_argument("ess_ratio_trend: alpha must be in (0, 1)");
    }
    plan.budget.alpha =
        Eigen::MatrixXd::Constant(base.layout.count(), base.layout.count(),
                                  alpha);
    plan.master_seed = base.master_seed + level;
    const MonteCarloReport report = run_experiment(plan);
    EssTrendLevel lvl;
    lvl.alpha = alpha;
    lvl.predicted = report.points[0].predicted;
    lvl.moments = report.points[0].moments;
    lvl.ratio = report.points[0].ess_ratio;
    trend.levels.push_back(std::move(lvl));
  }
  return trend;
}

SllnReport slln_diagnostic(const ObservationModel& model, const PsiSpec& psi,
                           const Param& theta, const Param& vartheta,
                           long n_max, long reps, std::uint64_t seed,
                           double band) {
  model.validate_param(theta);
  model.validate_param(vartheta);
  psi.validate();
  if (n_max < 1) throw std::invalid_argument("slln: n_max must be >= 1");
  if (reps < 1) throw std::invalid_argument("slln: reps must be >= 1");
  if (!(band > 0.0)) throw std::invalid_argument("slln: band must be > 0");

  SllnReport out;
  out.information = model.kl(theta, vartheta);
  out.n_max = n_max;
  out.reps = reps;
  out.band = band;
  out.degenerate = out.information == 0.0;

  const Param pair[2] = {theta, vartheta};
  const double denom = psi.psi(static_cast<double>(n_max));
  for (long k = 0; k < reps; ++k) {
    RandomStream rng(seed, 0, static_cast<std::uint64_t>(k));
    auto state = model.make_state();
    double llr = 0.0;
    for (long t = 0; t < n_max; ++t) {
      const double x = model.sample(theta, *state, rng);
      if (!model.whole_sample_scores()) {
        llr += model.conditional_logpdf(theta, *state, x) -
               model.conditional_logpdf(vartheta, *state, x);
      }
      model.absorb(*state, x);
    }
    if (model.whole_sample_scores()) {
      double scores[2];
      model.hypothesis_scores(*state, std::span<const Param>(pair, 2),
                              std::span<double>(scores, 2));
      llr = scores[0] - scores[1];
    }
    const double normalized = llr / denom;
    if (std::abs(normalized - out.information) <= band * out.information) {
      ++out.within_band;
    }
  }
  out.fraction =
      static_cast<double>(out.within_band) / static_cast<double>(reps);
  return out;
}

std::vector<MartingaleCheck> adaptive_martingale_check(
    const ObservationModel& model, const Param& initial_estimate,
    const Param& vartheta, std::span<const long> checkpoints, long trials,
    std::uint64_t seed) {
  model.validate_param(initial_estimate);
  model.validate_param(vartheta);
  if (checkpoints.empty()) {
    throw std::invalid_argument("martingale check: no checkpoints");
  }
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    if (checkpoints[c] < 1 || (c > 0 && checkpoints[c] <= checkpoints[c - 1])) {
      throw std::invalid_argument(
          "martingale check: checkpoints must be increasing and >= 1");
    }
  }
  if (trials < 2) throw std::invalid_argument("martingale check: trials < 2");

  const long n_max = checkpoints.back();
  std::vector<std::vector<double>> samples(
      checkpoints.size(), std::vector<double>(static_cast<std::size_t>(trials)));
  for (long k = 0; k < trials; ++k) {
    RandomStream rng(seed, 0, static_cast<std::uint64_t>(k));
    auto state = model.make_state();
    Param estimate = initial_estimate;
    Param refreshed;
    double adaptive = 0.0;
    double fixed = 0.0;
    std::size_t next = 0;
    for (long t = 1; t <= n_max; ++t) {
      const double x = model.sample(vartheta, *state, rng);
      adaptive += model.conditional_logpdf(estimate, *state, x);
      fixed += model.conditional_logpdf(vartheta, *state, x);
      model.absorb(*state, x);
      estimate = model.estimate(*state, refreshed) ? refreshed
                                                   : initial_estimate;
      if (next < checkpoints.size() && t == checkpoints[next]) {
        samples[next][static_cast<std::size_t>(k)] = std::exp(adaptive - fixed);
        ++next;
      }
    }
  }

  std::vector<MartingaleCheck> out;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    KahanSum sum;
    for (double v : samples[c]) sum.add(v);
    const double mean = sum.value() / static_cast<double>(trials);
    KahanSum sq;
    for (double v : samples[c]) {
      const double dev = v - mean;
      sq.add(dev * dev);
    }
    const double var = sq.value() / static_cast<double>(trials - 1);
    MartingaleCheck mc;
    mc.n = checkpoints[c];
    mc.mean = mean;
    mc.se = std::sqrt(std::max(var, 0.0) / static_cast<double>(trials));
    out.push_back(mc);
  }
  return out;
}

}  // namespace seqtest
