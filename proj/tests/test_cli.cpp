#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "seqtest/cli.hpp"
#include "seqtest/config.hpp"
#include "seqtest/hypotheses.hpp"
#include "seqtest/models/ar_mean.hpp"
#include "seqtest/montecarlo.hpp"

using nlohmann::json;
using namespace seqtest;

namespace {

std::filesystem::path config_dir() {
  return std::filesystem::path(SEQTEST_CONFIG_DIR);
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("seqtest_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

struct StreamCapture {
  std::ostream& stream;
  std::ostringstream buffer;
  std::streambuf* saved;
  explicit StreamCapture(std::ostream& s) : stream(s) {
    saved = stream.rdbuf(buffer.rdbuf());
  }
  ~StreamCapture() { stream.rdbuf(saved); }
  std::string text() const { return buffer.str(); }
};

struct EnvGuard {
  std::string key;
  EnvGuard(const std::string& k, const std::string& value) : key(k) {
    ::setenv(key.c_str(), value.c_str(), 1);
  }
  ~EnvGuard() { ::unsetenv(key.c_str()); }
};

int run_argv(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("seqtest");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << doc.dump(2) << '\n';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text) lines += (c == '\n');
  return lines;
}

json gaussian_pair_config() {
  json cfg;
  cfg["model"]["kind"] = "gaussian_mean";
  json r0, r1;
  r0["point"] = json::array({0.0});
  r1["point"] = json::array({1.0});
  cfg["hypotheses"]["regions"] = json::array({r0, r1});
  cfg["alpha"] = 0.05;
  cfg["engine"]["kind"] = "msprt";
  json p0, p1;
  p0["id"] = "null";
  p0["theta"] = json::array({0.0});
  p1["id"] = "alt";
  p1["theta"] = json::array({1.0});
  cfg["points"] = json::array({p0, p1});
  cfg["trials"] = 400;
  cfg["horizon"] = 20000;
  cfg["seed"] = 7;
  return cfg;
}

json uv_pair_config() {
  json cfg;
  cfg["model"]["kind"] = "unknown_variance";
  cfg["model"]["mu0"] = 0.0;
  cfg["model"]["mu1"] = 1.0;
  json r0, r1;
  r0["box"]["lo"] = json::array({-2.0, 0.25});
  r0["box"]["hi"] = json::array({0.2, 4.0});
  r1["box"]["lo"] = json::array({0.8, 0.25});
  r1["box"]["hi"] = json::array({2.0, 4.0});
  cfg["hypotheses"]["regions"] = json::array({r0, r1});
  cfg["alpha"] = 0.05;
  cfg["engine"]["kind"] = "mmsprt";
  cfg["engine"]["grid_points"] = json::array({5, 5});
  json p0;
  p0["id"] = "null";
  p0["theta"] = json::array({0.0, 1.0});
  cfg["points"] = json::array({p0});
  cfg["trials"] = 50;
  cfg["seed"] = 3;
  return cfg;
}

std::string parse_failure(const json& doc) {
  try {
    (void)plan_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("json plans populate every field") {
  const LoadedConfig loaded = plan_from_json(gaussian_pair_config());
  const ExperimentPlan& plan = loaded.plan;

  CHECK(plan.engine.kind == EngineKind::msprt);
  CHECK(plan.trials == 400);
  CHECK(plan.horizon == 20000);
  CHECK(plan.master_seed == 7);
  CHECK(plan.workers == 1);
  CHECK(plan.psi.beta == 1.0);
  REQUIRE(plan.moment_orders.size() == 2);
  CHECK(plan.moment_orders[0] == 1);
  CHECK(plan.moment_orders[1] == 2);
  CHECK(plan.budget.alpha(0, 1) == 0.05);
  CHECK(plan.budget.alpha(1, 0) == 0.05);
  REQUIRE(plan.layout.count() == 2);
  CHECK(plan.layout.regions[0].is_point());
  CHECK(plan.layout.regions[1].lo[0] == 1.0);
  REQUIRE(plan.points.size() == 2);
  CHECK(plan.points[0].id == "null");
  CHECK(plan.points[1].theta[0] == 1.0);
  REQUIRE(plan.model != nullptr);
  CHECK(dynamic_cast<const ArMeanModel*>(plan.model.get()) != nullptr);
  CHECK(loaded.normalized["model"]["kind"] == "ar_mean");
  CHECK(loaded.normalized["alpha"][0][1] == 0.05);
}

TEST_CASE("schema violations are reported with their JSON path") {
  json base = gaussian_pair_config();

  json unknown = base;
  unknown["frobnicate"] = 1;
  std::string msg = parse_failure(unknown);
  CHECK(contains(msg, "unknown key"));
  CHECK(contains(msg, "frobnicate"));

  json both = base;
  both["thresholds"] = 2.0;
  CHECK(contains(parse_failure(both), "exactly one of alpha or thresholds"));

  json neither = base;
  neither.erase("alpha");
  CHECK(contains(parse_failure(neither),
                 "exactly one of alpha or thresholds"));

  json bad_alpha = base;
  bad_alpha["alpha"] = 1.5;
  CHECK(contains(parse_failure(bad_alpha), "/alpha"));

  json no_kind = base;
  no_kind["engine"].erase("kind");
  msg = parse_failure(no_kind);
  CHECK(contains(msg, "/engine/kind"));
  CHECK(contains(msg, "required key is missing"));

  json bad_kind = base;
  bad_kind["model"]["kind"] = "weibull";
  CHECK(contains(parse_failure(bad_kind), "unknown model kind"));

  json one_region = base;
  one_region["hypotheses"]["regions"].erase(1);
  CHECK(contains(parse_failure(one_region), "at least 2 regions"));

  json no_points = base;
  no_points["points"] = json::array();
  CHECK(contains(parse_failure(no_points), "/points"));

  json bad_orders = base;
  bad_orders["moment_orders"] = json::array();
  CHECK(contains(parse_failure(bad_orders), "/moment_orders"));

  json needs_grid = uv_pair_config();
  needs_grid["engine"].erase("grid_points");
  CHECK(contains(parse_failure(needs_grid),
                 "required for the mixture engine"));

  CHECK(contains(parse_failure(json::array()), "configuration object"));
}

TEST_CASE("normalized documents reparse to themselves") {
  for (const char* name :
       {"msprt_gaussian3.json", "mmsprt_uv.json", "amsprt_armean.json"}) {
    CAPTURE(name);
    const LoadedConfig first = load_config((config_dir() / name).string());
    const LoadedConfig second = plan_from_json(first.normalized);
    CHECK(second.normalized == first.normalized);
  }

  json with_thresholds = gaussian_pair_config();
  with_thresholds.erase("alpha");
  with_thresholds["thresholds"] = 2.0;
  const LoadedConfig folded = plan_from_json(with_thresholds);
  CHECK(folded.normalized["alpha"][0][1].get<double>() ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(!folded.normalized.contains("thresholds"));
  CHECK(plan_from_json(folded.normalized).normalized == folded.normalized);
}

TEST_CASE("the run command writes reports and returns the bound status") {
  TempDir dir;
  const auto cfg_path = dir.path / "mini.json";
  write_json(cfg_path, gaussian_pair_config());

  StreamCapture out(std::cout);
  const int rc = run_argv({"run", "--config", cfg_path.string(), "--out-dir",
                           dir.path.string()});
  CHECK(rc == 0);
  CHECK(contains(out.text(), "all bounds pass"));

  const json report = json::parse(read_file(dir.path / "report.json"));
  CHECK(report["engine"] == "msprt");
  CHECK(report["trials"] == 400);
  CHECK(report["all_bounds_ok"] == true);
  CHECK(report["invalid_trials"] == 0);
  REQUIRE(report["points"].size() == 2);
  const json& point = report["points"][0];
  CHECK(point["id"] == "null");
  CHECK(point["true_hypothesis"] == 0);
  CHECK(point["decided"].get<long>() + point["censored"].get<long>() == 400);
  REQUIRE(point["errors"].size() == 1);
  CHECK(point["errors"][0]["bound_ok"] == true);
  REQUIRE(point["moments"].size() == 2);
  CHECK(point["moments"][0]["r"] == 1);

  const std::string errors = read_file(dir.path / "errors.csv");
  const std::string ess = read_file(dir.path / "ess.csv");
  CHECK(errors.rfind("point_id,theta,engine,i,j,alpha_hat,wilson_lo,"
                     "wilson_hi,bound,margin\n", 0) == 0);
  CHECK(ess.rfind("point_id,theta,r,ess_hat,se,predicted,ratio\n", 0) == 0);
  CHECK(line_count(errors) == 1 + 2);
  CHECK(line_count(ess) == 1 + 2 * 2);

  TempDir json_only;
  const int rc_json = run_argv({"run", "--config", cfg_path.string(),
                                "--out-dir", json_only.path.string(),
                                "--format", "json"});
  CHECK(rc_json == 0);
  CHECK(std::filesystem::exists(json_only.path / "report.json"));
  CHECK(!std::filesystem::exists(json_only.path / "errors.csv"));
}

TEST_CASE("bad invocations exit with the usage code") {
  TempDir dir;
  const auto cfg_path = dir.path / "mini.json";
  write_json(cfg_path, gaussian_pair_config());

  StreamCapture out(std::cout);
  StreamCapture err(std::cerr);

  CHECK(run_argv({"run", "--config", "/nonexistent/seqtest.json"}) == 2);
  CHECK(run_argv({"run"}) == 2);
  CHECK(run_argv({}) == 2);
  CHECK(run_argv({"run", "--config", cfg_path.string(), "--bogus"}) == 2);
  CHECK(run_argv({"run", "--config", cfg_path.string(), "--format",
                  "yaml"}) == 2);
  CHECK(run_argv({"run", "--config", cfg_path.string(), "--trials", "0",
                  "--out-dir", dir.path.string()}) == 2);

  json bad_alpha = gaussian_pair_config();
  bad_alpha["alpha"] = 1.5;
  const auto bad_path = dir.path / "bad.json";
  write_json(bad_path, bad_alpha);
  CHECK(run_argv({"run", "--config", bad_path.string()}) == 2);
  CHECK(contains(err.text(), "/alpha"));

  std::ofstream(dir.path / "garbage.json") << "{ not json";
  CHECK(run_argv({"run", "--config",
                  (dir.path / "garbage.json").string()}) == 2);
}

TEST_CASE("the normalized dump reflects command-line overrides") {
  TempDir dir;
  const auto cfg_path = dir.path / "mini.json";
  write_json(cfg_path, gaussian_pair_config());

  json dumped;
  {
    StreamCapture out(std::cout);
    CHECK(run_argv({"run", "--config", cfg_path.string(),
                    "--dump-normalized", "--seed", "99", "--trials", "5",
                    "--workers", "2"}) == 0);
    dumped = json::parse(out.text());
  }
  CHECK(dumped["seed"] == 99);
  CHECK(dumped["trials"] == 5);
  CHECK(dumped["workers"] == 2);
  CHECK(dumped["model"]["kind"] == "ar_mean");

  {
    EnvGuard env("SEQTEST_WORKERS", "3");
    StreamCapture out(std::cout);
    CHECK(run_argv({"run", "--config", cfg_path.string(),
                    "--dump-normalized"}) == 0);
    CHECK(json::parse(out.text())["workers"] == 3);
  }
  {
    EnvGuard env("SEQTEST_WORKERS", "3");
    StreamCapture out(std::cout);
    CHECK(run_argv({"run", "--config", cfg_path.string(),
                    "--dump-normalized", "--workers", "2"}) == 0);
    CHECK(json::parse(out.text())["workers"] == 2);
  }
}

TEST_CASE("predictions report the worst-case parameter for both families") {
  TempDir dir;
  const auto mean_path = dir.path / "mean.json";
  write_json(mean_path, gaussian_pair_config());

  {
    StreamCapture out(std::cout);
    CHECK(run_argv({"predict", "--config", mean_path.string()}) == 0);
    const std::string text = out.text();
    CHECK(contains(text, "null theta=(0) region=H0"));
    CHECK(contains(text, "r=1: "));
    CHECK(contains(text, "r=2: "));
    CHECK(contains(text, "worst_point (theta*): 0.5"));
  }

  const auto uv_path = dir.path / "uv.json";
  write_json(uv_path, uv_pair_config());
  {
    StreamCapture out(std::cout);
    CHECK(run_argv({"predict", "--config", uv_path.string()}) == 0);
    CHECK(contains(out.text(), "worst_point (q*): 0.5"));
  }

  {
    StreamCapture out(std::cout);
    CHECK(run_argv({"predict", "--config", mean_path.string(), "--theta",
                    "0.25"}) == 0);
    CHECK(contains(out.text(), "cli_theta_0 theta=(0.25) region=outside"));
  }
  {
    StreamCapture out(std::cout);
    StreamCapture err(std::cerr);
    CHECK(run_argv({"predict", "--config", mean_path.string(), "--theta",
                    "zap"}) == 2);
  }
}
