#pragma once

#include <filesystem>

#include <json.hpp>

#include "teql/harness.hpp"

namespace teql {

/// Nested JSON mirror of RunConfig. Sections: discretization, learner,
/// policy, baseline_policy, regret, analysis.
nlohmann::json config_to_json(const RunConfig& cfg);

/// Starts from default_config(environment) and overrides whatever keys are
/// present. Unknown keys throw PreconditionError.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace teql
