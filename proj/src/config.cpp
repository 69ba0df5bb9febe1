#include "seqtest/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "seqtest/models/ar_cov.hpp"
#include "seqtest/models/ar_mean.hpp"
#include "seqtest/models/bernoulli.hpp"
#include "seqtest/models/t_invariant.hpp"
#include "seqtest/models/unknown_variance.hpp"

namespace seqtest {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError("config error at " + path + ": " + message);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) fail(path + "/" + key, "unknown key");
  }
}

const json& require(const json& obj, const std::string& path,
                    const std::string& key) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path + "/" + key, "required key is missing");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long>();
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) {
    return static_cast<std::uint64_t>(v.get<long long>());
  }
  fail(path, "expected a nonnegative integer");
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_number(v[i], path + "/" + std::to_string(i)));
  }
  return out;
}

// Bound arrays use null for an unbounded face.
std::vector<double> as_bounds(const json& v, const std::string& path,
                              double null_value) {
  if (!v.is_array()) fail(path, "expected an array of numbers or nulls");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    if (v[i].is_null()) {
      out.push_back(null_value);
    } else {
      out.push_back(as_number(v[i], p));
    }
  }
  return out;
}

json bounds_to_json(const std::vector<double>& bounds) {
  json out = json::array();
  for (double b : bounds) {
    if (std::isinf(b)) {
      out.push_back(nullptr);
    } else {
      out.push_back(b);
    }
  }
  return out;
}

Region parse_box(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object with lo/hi");
  check_keys(v, path, {"lo", "hi"});
  Region r;
  r.lo = as_bounds(require(v, path, "lo"), path + "/lo", -kInf);
  r.hi = as_bounds(require(v, path, "hi"), path + "/hi", kInf);
  if (r.lo.size() != r.hi.size()) fail(path, "lo and hi lengths differ");
  return r;
}

json box_to_json(const Region& r) {
  return json{{"lo", bounds_to_json(r.lo)}, {"hi", bounds_to_json(r.hi)}};
}

// A region is {"point": [..]} or {"box": {"lo": [..], "hi": [..]}}.
std::pair<Region, json> parse_region(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object");
  const bool has_point = v.contains("point");
  const bool has_box = v.contains("box");
  if (has_point == has_box) fail(path, "give exactly one of point or box");
  if (has_point) {
    check_keys(v, path, {"point"});
    const Param p = as_vector(v["point"], path + "/point");
    return {Region::point(p), json{{"point", p}}};
  }
  check_keys(v, path, {"box"});
  Region r = parse_box(v["box"], path + "/box");
  return {r, json{{"box", box_to_json(r)}}};
}

std::pair<std::shared_ptr<const ObservationModel>, json> parse_model(
    const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object");
  const std::string kind = as_string(require(v, path, "kind"), path + "/kind");
  try {
    if (kind == "gaussian_mean" || kind == "ar_mean") {
      check_keys(v, path, {"kind", "rho", "sigma", "signal"});
      std::vector<double> rho;
      if (v.contains("rho")) rho = as_vector(v["rho"], path + "/rho");
      if (kind == "gaussian_mean" && !rho.empty()) {
        fail(path + "/rho", "gaussian_mean has no autoregression");
      }
      const double sigma =
          v.contains("sigma") ? as_number(v["sigma"], path + "/sigma") : 1.0;
      std::vector<double> signal = {1.0};
      if (v.contains("signal")) {
        signal = as_vector(v["signal"], path + "/signal");
      }
      json norm{{"kind", "ar_mean"},
                {"rho", rho},
                {"sigma", sigma},
                {"signal", signal}};
      return {std::make_shared<ArMeanModel>(std::move(rho), sigma,
                                            std::move(signal)),
              norm};
    }
    if (kind == "ar_cov") {
      check_keys(v, path, {"kind", "order"});
      const long order = as_integer(require(v, path, "order"), path + "/order");
      json norm{{"kind", "ar_cov"}, {"order", order}};
      return {std::make_shared<ArCovModel>(static_cast<int>(order)), norm};
    }
    if (kind == "bernoulli") {
      check_keys(v, path, {"kind"});
      return {std::make_shared<BernoulliModel>(), json{{"kind", "bernoulli"}}};
    }
    if (kind == "t_invariant") {
      check_keys(v, path, {"kind", "score_mode"});
      std::string mode = "laplace";
      if (v.contains("score_mode")) {
        mode = as_string(v["score_mode"], path + "/score_mode");
      }
      TInvariantModel::ScoreMode m;
      if (mode == "laplace") {
        m = TInvariantModel::ScoreMode::laplace;
      } else if (mode == "quadrature") {
        m = TInvariantModel::ScoreMode::quadrature;
      } else {
        fail(path + "/score_mode", "expected laplace or quadrature");
      }
      json norm{{"kind", "t_invariant"}, {"score_mode", mode}};
      return {std::make_shared<TInvariantModel>(m), norm};
    }
    if (kind == "unknown_variance") {
      check_keys(v, path, {"kind", "mu0", "mu1", "initial_estimate"});
      const double mu0 = as_number(require(v, path, "mu0"), path + "/mu0");
      const double mu1 = as_number(require(v, path, "mu1"), path + "/mu1");
      std::shared_ptr<const UnknownVarianceModel> model;
      if (v.contains("initial_estimate")) {
        model = std::make_shared<UnknownVarianceModel>(
            mu0, mu1,
            as_vector(v["initial_estimate"], path + "/initial_estimate"));
      } else {
        model = std::make_shared<UnknownVarianceModel>(mu0, mu1);
      }
      json norm{{"kind", "unknown_variance"},
                {"mu0", mu0},
                {"mu1", mu1},
                {"initial_estimate", model->initial_estimate()}};
      return {model, norm};
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  fail(path + "/kind", "unknown model kind '" + kind + "'");
}

Eigen::MatrixXd parse_matrix(const json& v, const std::string& path, int n) {
  if (v.is_number()) {
    return Eigen::MatrixXd::Constant(n, n, v.get<double>());
  }
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    fail(path, "expected a scalar or an " + std::to_string(n) + "x" +
                   std::to_string(n) + " matrix");
  }
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    const std::string row_path = path + "/" + std::to_string(i);
    const json& row = v[i];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      fail(row_path, "expected a row of " + std::to_string(n) + " numbers");
    }
    for (int j = 0; j < n; ++j) {
      m(i, j) = as_number(row[j], row_path + "/" + std::to_string(j));
    }
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

EngineKind parse_engine_kind(const json& v, const std::string& path) {
  const std::string kind = as_string(v, path);
  if (kind == "msprt") return EngineKind::msprt;
  if (kind == "mmsprt") return EngineKind::mmsprt;
  if (kind == "amsprt") return EngineKind::amsprt;
  fail(path, "expected msprt, mmsprt or amsprt");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string theta_column(const Param& theta) {
  std::string out;
  for (std::size_t d = 0; d < theta.size(); ++d) {
    if (d) out += ';';
    out += format_double(theta[d]);
  }
  return out;
}

}  // namespace

LoadedConfig plan_from_json(const json& config) {
  const std::string root = "/";
  if (!config.is_object()) fail(root, "expected a configuration object");
  check_keys(config, root,
             {"model", "hypotheses", "alpha", "thresholds", "engine", "points",
              "trials", "horizon", "moment_orders", "seed", "workers",
              "psi_beta"});

  LoadedConfig out;
  ExperimentPlan& plan = out.plan;

  auto [model, model_norm] = parse_model(require(config, root, "model"), "/model");
  plan.model = model;

  const json& hy = require(config, root, "hypotheses");
  check_keys(hy, "/hypotheses", {"regions", "indifference"});
  const json& regions = require(hy, "/hypotheses", "regions");
  if (!regions.is_array() || regions.size() < 2) {
    fail("/hypotheses/regions", "expected an array of at least 2 regions");
  }
  json regions_norm = json::array();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    auto [region, norm] =
        parse_region(regions[i], "/hypotheses/regions/" + std::to_string(i));
    plan.layout.regions.push_back(std::move(region));
    regions_norm.push_back(std::move(norm));
  }
  json hy_norm{{"regions", std::move(regions_norm)}};
  if (hy.contains("indifference")) {
    auto [region, norm] =
        parse_region(hy["indifference"], "/hypotheses/indifference");
    plan.layout.indifference = std::move(region);
    hy_norm["indifference"] = std::move(norm);
  }
  try {
    plan.layout.validate();
  } catch (const std::invalid_argument& e) {
    fail("/hypotheses", e.what());
  }

  const int n_hyp = plan.layout.count();
  const bool has_alpha = config.contains("alpha");
  const bool has_thresholds = config.contains("thresholds");
  if (has_alpha == has_thresholds) {
    fail(root, "give exactly one of alpha or thresholds");
  }
  if (has_alpha) {
    plan.budget.alpha = parse_matrix(config["alpha"], "/alpha", n_hyp);
  } else {
    const Eigen::MatrixXd a =
        parse_matrix(config["thresholds"], "/thresholds", n_hyp);
    ThresholdMatrix tm{a};
    try {
      tm.validate();
    } catch (const std::invalid_argument& e) {
      fail("/thresholds", e.what());
    }
    plan.budget.alpha = (-a).array().exp().matrix();
  }
  try {
    plan.budget.validate();
  } catch (const std::invalid_argument& e) {
    fail(has_alpha ? "/alpha" : "/thresholds", e.what());
  }

  const json& eng = require(config, root, "engine");
  check_keys(eng, "/engine",
             {"kind", "grid_points", "prior_box", "adaptive_initial"});
  plan.engine.kind =
      parse_engine_kind(require(eng, "/engine", "kind"), "/engine/kind");
  if (eng.contains("grid_points")) {
    const json& gp = eng["grid_points"];
    if (!gp.is_array()) fail("/engine/grid_points", "expected an array");
    for (std::size_t i = 0; i < gp.size(); ++i) {
      plan.engine.grid_points.push_back(static_cast<int>(as_integer(
          gp[i], "/engine/grid_points/" + std::to_string(i))));
    }
  }
  if (eng.contains("prior_box")) {
    plan.engine.prior_box = parse_box(eng["prior_box"], "/engine/prior_box");
  }
  if (eng.contains("adaptive_initial")) {
    plan.engine.adaptive_initial =
        as_vector(eng["adaptive_initial"], "/engine/adaptive_initial");
  }
  if (plan.engine.kind == EngineKind::mmsprt && plan.engine.grid_points.empty()) {
    fail("/engine/grid_points", "required for the mixture engine");
  }

  const json& points = require(config, root, "points");
  if (!points.is_array() || points.empty()) {
    fail("/points", "expected a nonempty array");
  }
  json points_norm = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string path = "/points/" + std::to_string(i);
    const json& pt = points[i];
    if (!pt.is_object()) fail(path, "expected an object");
    check_keys(pt, path, {"id", "theta"});
    SimulationPoint sp;
    sp.id = as_string(require(pt, path, "id"), path + "/id");
    sp.theta = as_vector(require(pt, path, "theta"), path + "/theta");
    points_norm.push_back(json{{"id", sp.id}, {"theta", sp.theta}});
    plan.points.push_back(std::move(sp));
  }

  if (config.contains("trials")) {
    plan.trials = as_integer(config["trials"], "/trials");
  }
  if (config.contains("horizon")) {
    plan.horizon = as_integer(config["horizon"], "/horizon");
  }
  if (config.contains("moment_orders")) {
    const json& mo = config["moment_orders"];
    if (!mo.is_array() || mo.empty()) {
      fail("/moment_orders", "expected a nonempty array of integers");
    }
    plan.moment_orders.clear();
    for (std::size_t i = 0; i < mo.size(); ++i) {
      plan.moment_orders.push_back(static_cast<int>(
          as_integer(mo[i], "/moment_orders/" + std::to_string(i))));
    }
  }
  if (config.contains("seed")) {
    plan.master_seed = as_seed(config["seed"], "/seed");
  }
  if (config.contains("workers")) {
    plan.workers = static_cast<int>(as_integer(config["workers"], "/workers"));
  }
  if (config.contains("psi_beta")) {
    plan.psi.beta = as_number(config["psi_beta"], "/psi_beta");
  }

  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    fail(root, e.what());
  }

  json engine_norm{{"kind", engine_kind_name(plan.engine.kind)}};
  if (plan.engine.kind == EngineKind::mmsprt) {
    engine_norm["grid_points"] = plan.engine.grid_points;
    engine_norm["prior_box"] = box_to_json(
        plan.engine.prior_box.value_or(layout_hull(plan.layout)));
  } else if (!plan.engine.grid_points.empty()) {
    engine_norm["grid_points"] = plan.engine.grid_points;
  }
  if (plan.engine.kind == EngineKind::amsprt) {
    Param init;
    if (plan.engine.adaptive_initial) {
      init = *plan.engine.adaptive_initial;
    } else {
      const Region hull = layout_hull(plan.layout);
      for (int d = 0; d < hull.dim(); ++d) {
        init.push_back(0.5 * (hull.lo[d] + hull.hi[d]));
      }
    }
    engine_norm["adaptive_initial"] = init;
  } else if (plan.engine.adaptive_initial) {
    engine_norm["adaptive_initial"] = *plan.engine.adaptive_initial;
  }
  if (plan.engine.prior_box && plan.engine.kind != EngineKind::mmsprt) {
    engine_norm["prior_box"] = box_to_json(*plan.engine.prior_box);
  }

  out.normalized = json{{"model", std::move(model_norm)},
                        {"hypotheses", std::move(hy_norm)},
                        {"alpha", matrix_to_json(plan.budget.alpha)},
                        {"engine", std::move(engine_norm)},
                        {"points", std::move(points_norm)},
                        {"trials", plan.trials},
                        {"horizon", plan.horizon},
                        {"moment_orders", plan.moment_orders},
                        {"seed", plan.master_seed},
                        {"workers", plan.workers},
                        {"psi_beta", plan.psi.beta}};
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return plan_from_json(config);
}

json report_to_json(const MonteCarloReport& report) {
  json points = json::array();
  for (const PointReport& pr : report.points) {
    json errors = json::array();
    for (const ErrorCell& c : pr.errors) {
      errors.push_back(json{{"i", c.true_hypothesis},
                            {"j", c.accepted},
                            {"count", c.count},
                            {"alpha_hat", c.alpha_hat},
                            {"wilson_lower", c.wilson.lower},
                            {"wilson_upper", c.wilson.upper},
                            {"bound", c.bound},
                            {"margin", c.margin},
                            {"bound_ok", c.bound_ok}});
    }
    json moments = json::array();
    for (const MomentCell& m : pr.moments) {
      moments.push_back(json{{"r", m.order},
                             {"decided", m.decided},
                             {"mean", m.decided_mean},
                             {"se", m.decided_se},
                             {"truncated_mean", m.truncated_mean},
                             {"truncated_se", m.truncated_se}});
    }
    json true_hyp;
    if (pr.true_hypothesis) {
      if (*pr.true_hypothesis < static_cast<int>(pr.accept_counts.size())) {
        true_hyp = *pr.true_hypothesis;
      } else {
        true_hyp = "indifference";
      }
    }
    points.push_back(json{{"id", pr.id},
                          {"theta", pr.theta},
                          {"true_hypothesis", true_hyp},
                          {"trials", pr.trials},
                          {"decided", pr.decided},
                          {"censored", pr.censored},
                          {"invalid", pr.invalid},
                          {"ambiguous", pr.ambiguous},
                          {"accept_counts", pr.accept_counts},
                          {"errors", std::move(errors)},
                          {"moments", std::move(moments)},
                          {"predicted",
                           json{{"base", pr.predicted.base},
                                {"orders", pr.predicted.orders},
                                {"values", pr.predicted.values}}},
                          {"ess_ratio", pr.ess_ratio}});
  }
  return json{{"engine", report.engine},
              {"seed", report.master_seed},
              {"trials", report.trials},
              {"horizon", report.horizon},
              {"all_bounds_ok", report.all_bounds_ok},
              {"invalid_trials", report.invalid_total},
              {"points", std::move(points)}};
}

std::string errors_csv(const MonteCarloReport& report) {
  std::string out =
      "point_id,theta,engine,i,j,alpha_hat,wilson_lo,wilson_hi,bound,margin\n";
  for (const PointReport& pr : report.points) {
    for (const ErrorCell& c : pr.errors) {
      out += pr.id + ',' + theta_column(pr.theta) + ',' + report.engine + ',' +
             std::to_string(c.true_hypothesis) + ',' +
             std::to_string(c.accepted) + ',' + format_double(c.alpha_hat) +
             ',' + format_double(c.wilson.lower) + ',' +
             format_double(c.wilson.upper) + ',' + format_double(c.bound) +
             ',' + format_double(c.margin) + '\n';
    }
  }
  return out;
}

std::string ess_csv(const MonteCarloReport& report) {
  std::string out = "point_id,theta,r,ess_hat,se,predicted,ratio\n";
  for (const PointReport& pr : report.points) {
    for (std::size_t idx = 0; idx < pr.moments.size(); ++idx) {
      const MomentCell& m = pr.moments[idx];
      out += pr.id + ',' + theta_column(pr.theta) + ',' +
             std::to_string(m.order) + ',' + format_double(m.decided_mean) +
             ',' + format_double(m.decided_se) + ',' +
             format_double(pr.predicted.values[idx]) + ',' +
             format_double(pr.ess_ratio[idx]) + '\n';
    }
  }
  return out;
}

}  // namespace seqtest
