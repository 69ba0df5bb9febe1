#include "seqtest/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seqtest/asymptotics.hpp"
#include "seqtest/config.hpp"
#include "seqtest/models/ar_mean.hpp"
#include "seqtest/models/t_invariant.hpp"
#include "seqtest/models/unknown_variance.hpp"
#include "seqtest/montecarlo.hpp"
#include "seqtest/numerics.hpp"

namespace seqtest {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBoundFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  long trials = 0;
  int workers = 0;
  std::string out_dir = ".";
  std::string format = "both";
  bool dump_normalized = false;
};

void add_common_options(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "configuration file (JSON)")
      ->required();
  cmd->add_option("--seed", flags.seed, "override the master seed");
  cmd->add_option("--trials", flags.trials, "override the trial count");
  cmd->add_option("--workers", flags.workers,
                  "override the worker count (or set SEQTEST_WORKERS)");
}

// Precedence: --workers flag, then SEQTEST_WORKERS, then the config value.
void resolve_workers(const CLI::App* cmd, const CommonFlags& flags,
                     ExperimentPlan& plan) {
  if (const char* env = std::getenv("SEQTEST_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) plan.workers = static_cast<int>(v);
  }
  if (cmd->count("--workers")) plan.workers = flags.workers;
}

void apply_overrides(const CLI::App* cmd, const CommonFlags& flags,
                     ExperimentPlan& plan) {
  if (cmd->count("--seed")) plan.master_seed = flags.seed;
  if (cmd->count("--trials")) plan.trials = flags.trials;
  resolve_workers(cmd, flags, plan);
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string format_double(double v, int precision = 15) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::string theta_text(const Param& theta) {
  std::string out = "(";
  for (std::size_t d = 0; d < theta.size(); ++d) {
    if (d) out += ", ";
    out += format_double(theta[d], 12);
  }
  return out + ")";
}

int run_command(const CLI::App* cmd, const CommonFlags& flags) {
  LoadedConfig loaded = load_config(flags.config_path);
  ExperimentPlan& plan = loaded.plan;
  apply_overrides(cmd, flags, plan);

  if (flags.dump_normalized) {
    // Re-normalize so overrides show up in the dumped document.
    nlohmann::json norm = loaded.normalized;
    norm["seed"] = plan.master_seed;
    norm["trials"] = plan.trials;
    norm["workers"] = plan.workers;
    std::cout << norm.dump(2) << '\n';
    return kExitOk;
  }

  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }

  const MonteCarloReport report = run_experiment(plan);

  const std::filesystem::path out_dir(flags.out_dir);
  std::filesystem::create_directories(out_dir);
  if (flags.format == "json" || flags.format == "both") {
    write_file(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
  }
  if (flags.format == "csv" || flags.format == "both") {
    write_file(out_dir / "errors.csv", errors_csv(report));
    write_file(out_dir / "ess.csv", ess_csv(report));
  }

  std::cout << "engine: " << report.engine << ", trials per point: "
            << report.trials << ", seed: " << report.master_seed << '\n';
  for (const PointReport& pr : report.points) {
    std::cout << "point " << pr.id << " theta=" << theta_text(pr.theta)
              << ": decided " << pr.decided << ", censored " << pr.censored
              << ", invalid " << pr.invalid << ", ambiguous " << pr.ambiguous
              << '\n';
    for (const ErrorCell& c : pr.errors) {
      std::cout << "  bound " << c.true_hypothesis << "->" << c.accepted
                << ": alpha_hat=" << format_double(c.alpha_hat, 6)
                << " bound=" << format_double(c.bound, 6)
                << " margin=" << format_double(c.margin, 6)
                << (c.bound_ok ? " PASS" : " FAIL") << '\n';
    }
  }
  std::cout << (report.all_bounds_ok ? "all bounds pass"
                                     : "bound check FAILED")
            << ", invalid trials: " << report.invalid_total << '\n';

  return (report.all_bounds_ok && report.invalid_total == 0)
             ? kExitOk
             : kExitBoundFailure;
}

// Facing finite boundaries of two separated scalar regions, in index order.
std::optional<std::pair<double, double>> scalar_gap(
    const HypothesisLayout& layout) {
  if (layout.count() != 2 || layout.param_dim() != 1) return std::nullopt;
  const Region* left = &layout.regions[0];
  const Region* right = &layout.regions[1];
  if (left->lo[0] > right->lo[0]) std::swap(left, right);
  const double lo = left->hi[0];
  const double hi = right->lo[0];
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    return std::nullopt;
  }
  return std::make_pair(lo, hi);
}

// Worst point between two scalar regions: equalizes the two stopping
// branches a(1,0) * I_0(theta) = a(0,1) * I_1(theta).
std::optional<std::pair<std::string, double>> worst_point_row(
    const ExperimentPlan& plan, const ThresholdMatrix& thresholds) {
  if (plan.layout.count() != 2) return std::nullopt;
  const double c = thresholds.a(0, 1) / thresholds.a(1, 0);

  if (const auto* uv =
          dynamic_cast<const UnknownVarianceModel*>(plan.model.get())) {
    return std::make_pair(
        std::string("q*"), worst_point_log_snr(uv->mu0(), uv->mu1(), c));
  }
  const auto gap = scalar_gap(plan.layout);
  if (!gap) return std::nullopt;
  const auto [lo, hi] = *gap;
  if (dynamic_cast<const TInvariantModel*>(plan.model.get())) {
    return std::make_pair(std::string("q*"), worst_point_log_snr(lo, hi, c));
  }
  if (const auto* arm = dynamic_cast<const ArMeanModel*>(plan.model.get())) {
    (void)arm;
    return std::make_pair(std::string("theta*"),
                          worst_point_quadratic(lo, hi, c));
  }
  const auto branch_gap = [&](double t) {
    const Param theta{t};
    return thresholds.a(1, 0) *
               kl_infimum(*plan.model, theta, plan.layout.regions[0]) -
           thresholds.a(0, 1) *
               kl_infimum(*plan.model, theta, plan.layout.regions[1]);
  };
  if (!(branch_gap(lo) < 0.0) || !(branch_gap(hi) > 0.0)) return std::nullopt;
  return std::make_pair(std::string("theta*"),
                        bisect(branch_gap, lo, hi, 1e-10));
}

std::string region_label(const HypothesisLayout& layout, const Param& theta) {
  const auto where = layout.locate(theta);
  if (!where) return "outside";
  if (*where == layout.count()) return "indifference";
  return "H" + std::to_string(*where);
}

int predict_command(const CLI::App* cmd, const CommonFlags& flags,
                    const std::vector<std::string>& extra_thetas) {
  LoadedConfig loaded = load_config(flags.config_path);
  ExperimentPlan& plan = loaded.plan;
  apply_overrides(cmd, flags, plan);

  std::vector<SimulationPoint> points = plan.points;
  for (std::size_t k = 0; k < extra_thetas.size(); ++k) {
    SimulationPoint sp;
    sp.id = "cli_theta_" + std::to_string(k);
    std::stringstream ss(extra_thetas[k]);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        sp.theta.push_back(std::stod(part));
      } catch (const std::exception&) {
        throw ConfigError("--theta: cannot parse '" + extra_thetas[k] + "'");
      }
    }
    try {
      plan.model->validate_param(sp.theta);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--theta: ") + e.what());
    }
    points.push_back(std::move(sp));
  }

  const ThresholdMatrix thresholds = build_threshold_matrix(plan.budget);
  std::cout << "predictions (engine-independent first-order moments)\n";
  for (const SimulationPoint& sp : points) {
    const EssPrediction pred = predict_ess(plan.layout, plan.budget,
                                           *plan.model, plan.psi, sp.theta,
                                           plan.moment_orders);
    std::cout << sp.id << " theta=" << theta_text(sp.theta) << " region="
              << region_label(plan.layout, sp.theta);
    for (std::size_t idx = 0; idx < pred.orders.size(); ++idx) {
      std::cout << " r=" << pred.orders[idx] << ": "
                << format_double(pred.values[idx]);
    }
    std::cout << '\n';
    if (!std::isfinite(pred.base)) {
      for (int j = 0; j < plan.layout.count(); ++j) {
        if (kl_infimum(*plan.model, sp.theta, plan.layout.regions[j]) == 0.0 &&
            region_label(plan.layout, sp.theta) != "H" + std::to_string(j)) {
          std::cout << "  warning: theta is not separated from H" << j
                    << " (zero information), prediction is infinite\n";
        }
      }
    }
  }
  if (const auto wp = worst_point_row(plan, thresholds)) {
    std::cout << "worst_point (" << wp->first
              << "): " << format_double(wp->second) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"sequential multi-hypothesis tests: Monte Carlo runs, "
               "error-bound checks and sample-size predictions"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand(
      "run", "run a Monte Carlo experiment and write report files");
  add_common_options(run, run_flags);
  run->add_option("--out-dir", run_flags.out_dir,
                  "directory for report.json / errors.csv / ess.csv");
  run->add_option("--format", run_flags.format, "report format")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  run->add_flag("--dump-normalized", run_flags.dump_normalized,
                "print the normalized config and exit");

  CommonFlags predict_flags;
  std::vector<std::string> extra_thetas;
  CLI::App* predict = app.add_subcommand(
      "predict", "print first-order stopping-time predictions");
  add_common_options(predict, predict_flags);
  predict->add_option("--theta", extra_thetas,
                      "extra parameter point, comma-separated components");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (run->parsed()) return run_command(run, run_flags);
    if (predict->parsed()) return predict_command(predict, predict_flags,
                                                  extra_thetas);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace seqtest
