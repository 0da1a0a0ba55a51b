#pragma once

#include <json.hpp>

#include "sptcov/simgen.hpp"

namespace sptcov {

/// Exit codes: 0 success, 1 user error, 2 numerical failure.
int run_cli(int argc, char** argv);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

}  // namespace sptcov
