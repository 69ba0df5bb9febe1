// End-to-end acceptance checks.  Every case prints one
//   [ACCEPTANCE] <name> PASS|FAIL
// line; the tolerances are pinned below and are not adaptive.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "seqtest/asymptotics.hpp"
#include "seqtest/config.hpp"
#include "seqtest/engines.hpp"
#include "seqtest/hypotheses.hpp"
#include "seqtest/models/ar_cov.hpp"
#include "seqtest/models/ar_mean.hpp"
#include "seqtest/models/bernoulli.hpp"
#include "seqtest/models/t_invariant.hpp"
#include "seqtest/models/unknown_variance.hpp"
#include "seqtest/montecarlo.hpp"
#include "seqtest/oracle.hpp"
#include "seqtest/random.hpp"

using namespace seqtest;

namespace {

// Pinned tolerances and budgets.
constexpr std::uint64_t kMasterSeed = 20260825;
constexpr double kAlphaBudget = 0.01;        // error-bound suite level
constexpr double kBoundSuiteSeconds = 120.0; // error-bound suite wall clock
constexpr double kOracleSigmas = 3.0;        // Monte Carlo vs enumeration
constexpr double kConservationTol = 1e-12;   // oracle total probability
constexpr double kOracleSeconds = 60.0;
constexpr double kEssRatioCap = 1.5;         // observed/predicted at 1e-4
constexpr double kEssPredictTol = 1e-12;
constexpr double kMartingaleSigmas = 3.0;
constexpr double kScaleRelTol = 1e-9;        // invariance of statistics
constexpr double kTransitivityTol = 1e-10;
constexpr double kQuadPointTol = 1e-12;      // theta* closed form
constexpr double kBisectResidual = 1e-10;
constexpr double kSeriesTol = 1e-12;         // stationary covariance
constexpr double kPhiZeroTol = 1e-14;
constexpr double kLaplaceGapCap = 0.35;      // uniform Laplace-vs-exact gap
constexpr double kSllnBand = 0.05;
constexpr double kSllnCoverage = 0.95;

struct Acceptance {
  std::string name;
  bool ok = true;

  explicit Acceptance(std::string n) : name(std::move(n)) {}

  void expect(bool condition, const std::string& label) {
    if (!condition) ok = false;
    CHECK_MESSAGE(condition, label);
  }

  ~Acceptance() {
    std::printf("[ACCEPTANCE] %s %s\n", name.c_str(), ok ? "PASS" : "FAIL");
    std::fflush(stdout);
  }
};

std::string shipped_config(const std::string& name) {
  return std::string(SEQTEST_CONFIG_DIR) + "/" + name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

ThresholdMatrix uniform_thresholds(int n, double a) {
  ThresholdMatrix ts;
  ts.a = Eigen::MatrixXd::Constant(n, n, a);
  ts.a.diagonal().setZero();
  return ts;
}

ErrorBudget uniform_budget(int n, double alpha) {
  ErrorBudget budget;
  budget.alpha = Eigen::MatrixXd::Constant(n, n, alpha);
  return budget;
}

double rel_diff(double a, double b) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

ExperimentPlan gaussian_pair_plan() {
  ExperimentPlan plan;
  plan.model = std::make_shared<ArMeanModel>(std::vector<double>{}, 1.0);
  plan.layout.regions = {Region::point({0.0}), Region::point({1.0})};
  plan.budget = uniform_budget(2, kAlphaBudget);
  plan.engine.kind = EngineKind::msprt;
  plan.points = {{"theta1", {1.0}}};
  plan.trials = 10000;
  plan.horizon = 100000;
  plan.master_seed = kMasterSeed;
  return plan;
}

}  // namespace

TEST_CASE("acceptance: error-bound suite") {
  Acceptance acc("error-bound suite");
  const auto t0 = std::chrono::steady_clock::now();
  try {
    for (const char* name :
         {"msprt_gaussian3.json", "mmsprt_uv.json", "amsprt_armean.json"}) {
      const LoadedConfig cfg = load_config(shipped_config(name));
      acc.expect(cfg.plan.trials == 10000,
                 std::string(name) + ": 10^4 trials per point");
      const MonteCarloReport report = run_experiment(cfg.plan);
      acc.expect(report.invalid_total == 0,
                 std::string(name) + ": no invalid trials");

      double worst = 0.0;
      int worst_i = -1, worst_j = -1;
      std::size_t cells = 0;
      for (const PointReport& point : report.points) {
        for (const ErrorCell& cell : point.errors) {
          ++cells;
          if (cell.alpha_hat > worst) {
            worst = cell.alpha_hat;
            worst_i = cell.true_hypothesis;
            worst_j = cell.accepted;
          }
        }
      }
      acc.expect(cells > 0, std::string(name) + ": error cells present");
      acc.expect(worst <= kAlphaBudget,
                 std::string(name) + ": every alpha_hat <= 0.01");
      acc.expect(all_bounds_pass(report),
                 std::string(name) + ": Wilson lower bounds below exp(-a)");
      std::printf("  %s: worst alpha_hat %.3g at %d->%d over %zu cells, "
                  "%.1fs elapsed\n",
                  name, worst, worst_i, worst_j, cells, seconds_since(t0));
    }
    const double elapsed = seconds_since(t0);
    acc.expect(elapsed < kBoundSuiteSeconds, "suite runs under 120 s");
  } catch (const std::exception& e) {
    acc.expect(false, std::string("unexpected exception: ") + e.what());
  }
}

TEST_CASE("acceptance: oracle equivalence") {
  Acceptance acc("oracle equivalence");
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ExperimentPlan plan;
    plan.model = std::make_shared<BernoulliModel>();
    plan.layout.regions = {Region::point({0.3}), Region::point({0.7})};
    plan.budget = uniform_budget(2, std::exp(-1.5));
    plan.engine.kind = EngineKind::msprt;
    plan.points = {{"p03", {0.3}}, {"p07", {0.7}}};
    plan.trials = 200000;
    plan.horizon = 14;
    plan.master_seed = kMasterSeed;

    FiniteAlphabetSpec spec;
    spec.probs = {{0.7, 0.3}, {0.3, 0.7}};
    spec.thresholds = build_threshold_matrix(plan.budget);
    spec.horizon = 14;
    spec.moment_orders = {1, 2};
    const ExactEnumeration exact = enumerate_exact(spec);

    for (int i = 0; i < 2; ++i) {
      acc.expect(std::fabs(exact.total_probability[i] - 1.0) <=
                     kConservationTol,
                 "oracle probability conserved to 1e-12");
    }

    const MonteCarloReport report = run_experiment(plan);
    acc.expect(report.invalid_total == 0, "no invalid trials");
    for (int i = 0; i < 2; ++i) {
      const PointReport& point = report.points[static_cast<std::size_t>(i)];
      acc.expect(point.errors.size() == 1 && !point.moments.empty() &&
                     point.moments[0].order == 1,
                 "report carries the error cell and first moment");
      if (point.errors.size() != 1 || point.moments.empty()) continue;
      const ErrorCell& cell = point.errors[0];
      const double alpha = exact.alpha(i, 1 - i);
      const double se =
          std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(plan.trials));
      std::printf("  p%d: alpha_hat %.6f vs exact %.6f (3se %.6f)\n", i,
                  cell.alpha_hat, alpha, kOracleSigmas * se);
      acc.expect(std::fabs(cell.alpha_hat - alpha) <= kOracleSigmas * se,
                 "error rate matches enumeration within 3 se");

      const MomentCell& first = point.moments[0];
      const double exact_mean = exact.truncated_moments(i, 0);
      std::printf("  p%d: E[T^14] %.5f vs exact %.5f (3se %.5f)\n", i,
                  first.truncated_mean, exact_mean,
                  kOracleSigmas * first.truncated_se);
      acc.expect(std::fabs(first.truncated_mean - exact_mean) <=
                     kOracleSigmas * first.truncated_se,
                 "truncated mean matches enumeration within 3 se");
    }
    acc.expect(seconds_since(t0) < kOracleSeconds, "runs under 1 min");
  } catch (const std::exception& e) {
    acc.expect(false, std::string("unexpected exception: ") + e.what());
  }
}

TEST_CASE("acceptance: ESS trend") {
  Acceptance acc("ESS trend");
  try {
    ExperimentPlan plan = gaussian_pair_plan();
    const std::vector<double> alphas = {1e-2, 1e-3, 1e-4};
    const EssTrendReport trend = ess_ratio_trend(plan, alphas);

    acc.expect(trend.levels.size() == alphas.size() &&
                   trend.orders.size() == 2,
               "one level per budget, two moment orders");
    if (trend.levels.size() != alphas.size() || trend.orders.size() != 2) {
      return;
    }
    for (std::size_t level = 0; level < trend.levels.size(); ++level) {
      const double predicted = -std::log(alphas[level]) / 0.5;
      acc.expect(std::fabs(trend.levels[level].predicted.base - predicted) <=
                     kEssPredictTol * predicted,
                 "first-order prediction is |log alpha| / I");
      std::printf("  alpha %.0e: predicted %.4f ratios", alphas[level],
                  predicted);
      for (double r : trend.levels[level].ratio) std::printf(" %.4f", r);
      std::printf("\n");
    }
    for (std::size_t k = 0; k < trend.orders.size(); ++k) {
      for (std::size_t level = 1; level < trend.levels.size(); ++level) {
        acc.expect(trend.levels[level].ratio[k] <
                       trend.levels[level - 1].ratio[k],
                   "ratio decreases as the budget tightens (r=" +
                       std::to_string(trend.orders[k]) + ")");
      }
      acc.expect(trend.levels.back().ratio[k] <= kEssRatioCap,
                 "ratio at alpha=1e-4 is <= 1.5 (r=" +
                     std::to_string(trend.orders[k]) + ")");
    }
  } catch (const std::exception& e) {
    acc.expect(false, std::string("unexpected exception: ") + e.what());
  }
}

TEST_CASE("acceptance: martingale property") {
  Acceptance acc("martingale property");
  try {
    const UnknownVarianceModel model(-0.5, 0.5);
    const std::vector<long> checkpoints = {5, 10, 20};
    const Param vartheta = {0.5, 1.0};
    const std::vector<MartingaleCheck> checks = adaptive_martingale_check(
        model, model.initial_estimate(), vartheta, checkpoints, 100000,
        kMasterSeed);

    acc.expect(checks.size() == checkpoints.size(),
               "one check per checkpoint");
    for (const MartingaleCheck& c : checks) {
      std::printf("  n=%ld: mean %.5f se %.5f\n", c.n, c.mean, c.se);
      acc.expect(std::isfinite(c.mean) && c.se > 0.0,
                 "finite sample mean and se");
      acc.expect(std::fabs(c.mean - 1.0) <= kMartingaleSigmas * c.se,
                 "adaptive likelihood ratio averages to 1 at n=" +
                     std::to_string(c.n));
    }
  } catch (const std::exception& e) {
    acc.expect(false, std::string("unexpected exception: ") + e.what());
  }
}

TEST_CASE("acceptance: invariance suite") {
  Acceptance acc("invariance suite");
  try {
    const double scale = 7.3;

    // Scale-invariant model: statistics agree to 1e-9 relative and engine
    // decisions are identical under x -> scale * x.
    {
      const TInvariantModel model;
      HypothesisLayout layout;
      layout.regions = {Region::point({0.0}), Region::point({1.0})};
      const ThresholdMatrix ts = uniform_thresholds(2, 2.0);
      const MsprtEngine engine(model, layout, ts, 60);
      const std::vector<Param> hyps = {{0.0}, {1.0}};

      double worst_stat = 0.0;
      long mismatches = 0;
      for (int k = 0; k < 100; ++k) {
        RandomStream rng(kMasterSeed, 50, static_cast<std::uint64_t>(k));
        auto plain = engine.make_state();
        auto scaled = engine.make_state();
        auto stat_plain = model.make_state();
        auto stat_scaled = model.make_state();
        std::optional<Decision> d1, d2;
        for (int t = 0; t < 60; ++t) {
          const double x = 0.5 + rng.normal();
          model.absorb(*stat_plain, x);
          model.absorb(*stat_scaled, scale * x);
          double s1[2], s2[2];
          model.hypothesis_scores(*stat_plain, hyps, s1);
          model.hypothesis_scores(*stat_scaled, hyps, s2);
          worst_stat = std::max({worst_stat, rel_diff(s1[0], s2[0]),
                                 rel_diff(s1[1], s2[1])});
          if (!d1) d1 = engine.step(plain, x);
          if (!d2) d2 = engine.step(scaled, scale * x);
        }
        const long t1 = d1 ? d1->stopping_time : -1;
        const long t2 = d2 ? d2->stopping_time : -1;
        const int a1 = d1 ? d1->accepted : -2;
        const int a2 = d2 ? d2->accepted : -2;
        if (t1 != t2 || a1 != a2) ++mismatches;
      }
      std::printf("  t-model: worst statistic rel diff %.3g, decision "
                  "mismatches %ld\n",
                  worst_stat, mismatches);
      acc.expect(worst_stat <= kScaleRelTol,
                 "t statistics scale-invariant to 1e-9 relative");
      acc.expect(mismatches == 0, "t decisions identical under scaling");
    }

    // Mixture statistic of the unknown-variance model is scale-free.
    {
      const UnknownVarianceModel model(-0.5, 0.5);
      double worst = 0.0;
      for (int k = 0; k < 20; ++k) {
        RandomStream rng(kMasterSeed, 51, static_cast<std::uint64_t>(k));
        std::vector<double> xs(40), ys(40);
        for (std::size_t t = 0; t < xs.size(); ++t) {
          xs[t] = 0.3 + 1.7 * rng.normal();
          ys[t] = scale * xs[t];
        }
        for (std::size_t n : {std::size_t{5}, std::size_t{10},
                              std::size_t{20}, std::size_t{40}}) {
          const UvStatistics a =
              uv_statistics(model, std::span(xs.data(), n));
          const UvStatistics b =
              uv_statistics(model, std::span(ys.data(), n));
          if (a.degenerate || b.degenerate) {
            acc.expect(false, "mixture statistic defined on a random sample");
            continue;
          }
          worst = std::max(worst, rel_diff(a.lambda_pi, b.lambda_pi));
        }
      }
      std::printf("  mixture statistic: worst rel diff %.3g\n", worst);
      acc.expect(worst <= kScaleRelTol, "mixture statistic scale-free");
    }

    // Pairwise statistics: antisymmetry holds bitwise, transitivity to
    // 1e-10, on 100 random trajectories.
    {
      const ArMeanModel model({}, 1.0);
      HypothesisLayout layout;
      layout.regions = {Region::point({-1.0}), Region::point({0.0}),
                        Region::point({1.0})};
      const MsprtEngine engine(model, layout, uniform_thresholds(3, 50.0),
                               1000);
      long asym_violations = 0;
      double worst_cycle = 0.0;
      for (int k = 0; k < 100; ++k) {
        RandomStream rng(kMasterSeed, 52, static_cast<std::uint64_t>(k));
        auto state = engine.make_state();
        for (int t = 0; t < 30; ++t) {
          (void)engine.step(state, 0.2 + rng.normal());
          const Eigen::MatrixXd& lam = state.core.lambda;
          for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) {
              if (lam(i, j) != -lam(j, i)) ++asym_violations;
            }
          }
          worst_cycle = std::max(
              worst_cycle, std::fabs(lam(0, 1) + lam(1, 2) - lam(0, 2)));
        }
      }
      std::printf("  pairwise: antisymmetry violations %ld, worst cycle "
                  "residual %.3g\n",
                  asym_violations, worst_cycle);
      acc.expect(asym_violations == 0, "antisymmetry is exact");
      acc.expect(worst_cycle <= kTransitivityTol,
                 "transitivity residual <= 1e-10");
    }
  } catch (const std::exception& e) {
    acc.expect(false, std::string("unexpected exception: ") + e.what());
  }
}

TEST_CASE("acceptance: analytic cross-checks") {
  Acceptance acc("analytic cross-checks");
  try {
    const double star = worst_point_quadratic(0.0, 1.0, 4.0);
    acc.expect(std::fabs(star - 2.0 / 3.0) <= kQuadPointTol,
               "equalizer at c=4 is 2/3");
    const double star_b = worst_point_quadratic_bisect(0.0, 1.0, 4.0, 1e-12);
    acc.expect(std::fabs(star_b - 2.0 / 3.0) < kBisectResidual,
               "bisection residual under 1e-10");

    acc.expect(worst_point_log_snr(0.25, 1.75, 1.0) ==
                   0.5 * (0.25 + 1.75),
               "log-SNR equalizer at c=1 is the exact midpoint");

    const Eigen::MatrixXd cov = ar_cov_stationary_covariance({0.5});
    acc.expect(std::fabs(cov(0, 0) - 4.0 / 3.0) <= kSeriesTol,
               "stationary variance at rho=0.5 is 4/3");

    acc.expect(std::fabs(t_phi(0.0) - std::log(2.0)) <= kPhiZeroTol,
               "phi(0) = log 2");

    double worst_gap = 0.0;
    for (long n : {50L, 100L, 200L}) {
      for (int k = 0; k <= 40; ++k) {
        const double t = -1.0 + 2.0 * k / 40.0;
        for (const auto& [qi, qj] : {std::pair{1.0, 0.0},
                                     std::pair{0.0, 1.0}}) {
          const double gap = std::fabs(t_llr_approx(n, qi, qj, t) -
                                       t_llr_exact(n, qi, qj, t));
          worst_gap = std::max(worst_gap, gap);
        }
      }
    }
    std::printf("  Laplace vs quadrature: worst gap %.6f (cap %.2f)\n",
                worst_gap, kLaplaceGapCap);
    acc.expect(worst_gap <= kLaplaceGapCap,
               "Laplace score within a uniform bounded gap of quadrature");
  } catch (const std::exception& e) {
    acc.expect(false, std::string("unexpected exception: ") + e.what());
  }
}

TEST_CASE("acceptance: SLLN diagnostic") {
  Acceptance acc("SLLN diagnostic");
  try {
    const PsiSpec psi;

    const ArMeanModel iid_mean({}, 1.0);
    const SllnReport ex1 = slln_diagnostic(iid_mean, psi, {1.0}, {0.0}, 5000,
                                           100, kMasterSeed, kSllnBand);
    std::printf("  iid mean: I %.6f fraction %.2f (band +/-5%%)\n",
                ex1.information, ex1.fraction);
    acc.expect(std::fabs(ex1.information - 0.5) <= 1e-12,
               "information number is 0.5");
    acc.expect(ex1.fraction >= kSllnCoverage,
               "iid mean: >= 95% of trajectories inside the band");

    const ArCovModel ar_cov(1);
    const SllnReport ex2 = slln_diagnostic(ar_cov, psi, {0.5}, {0.0}, 5000,
                                           100, kMasterSeed + 1, kSllnBand);
    std::printf("  AR coefficient: I %.6f fraction %.2f (band +/-5%%)\n",
                ex2.information, ex2.fraction);
    acc.expect(std::fabs(ex2.information - 1.0 / 6.0) <= 1e-12,
               "information number is 1/6");
    acc.expect(ex2.fraction >= kSllnCoverage,
               "AR coefficient: >= 95% of trajectories inside the band");
  } catch (const std::exception& e) {
    acc.expect(false, std::string("unexpected exception: ") + e.what());
  }
}

TEST_CASE("acceptance: determinism across workers") {
  Acceptance acc("determinism across workers");
  try {
    for (const char* name :
         {"msprt_gaussian3.json", "mmsprt_uv.json", "amsprt_armean.json"}) {
      LoadedConfig cfg = load_config(shipped_config(name));
      ExperimentPlan plan = cfg.plan;
      if (plan.engine.kind == EngineKind::mmsprt) {
        // Same code paths, smaller batch: the mixture engine is the slow one.
        plan.trials = 300;
        plan.points.resize(2);
      } else if (plan.engine.kind == EngineKind::amsprt) {
        plan.trials = 2000;
      }

      plan.workers = 1;
      const std::string serial = report_to_json(run_experiment(plan)).dump();
      plan.workers = 8;
      const std::string threaded = report_to_json(run_experiment(plan)).dump();
      acc.expect(serial == threaded,
                 std::string(name) + ": bit-identical reports for 1 vs 8 "
                                     "workers");
    }
  } catch (const std::exception& e) {
    acc.expect(false, std::string("unexpected exception: ") + e.what());
  }
}
