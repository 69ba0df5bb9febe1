#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "seqtest/montecarlo.hpp"

namespace seqtest {

// Schema or semantic violation in a configuration document; the CLI maps
// this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadedConfig {
  ExperimentPlan plan;
  // Canonical form of the input: defaults materialized, thresholds folded
  // into the alpha matrix.  Parsing the normalized form reproduces it.
  nlohmann::json normalized;
};

// Parses a configuration document.  Unknown keys, missing required keys and
// type mismatches raise ConfigError with the JSON path of the offender.
LoadedConfig plan_from_json(const nlohmann::json& config);

// Reads and parses a configuration file.
LoadedConfig load_config(const std::string& path);

nlohmann::json report_to_json(const MonteCarloReport& report);

// Flat tables, one header line each:
//   point_id,theta,engine,i,j,alpha_hat,wilson_lo,wilson_hi,bound,margin
//   point_id,theta,r,ess_hat,se,predicted,ratio
// theta components are ';'-joined inside the single theta column.
std::string errors_csv(const MonteCarloReport& report);
std::string ess_csv(const MonteCarloReport& report);

}  // namespace seqtest
