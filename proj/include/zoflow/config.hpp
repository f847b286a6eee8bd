#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "zoflow/experiments.hpp"

namespace zoflow {

inline constexpr int kConfigSchemaVersion = 1;

/// Parses a scenario from its JSON form. Throws ConfigError with the
/// offending key on any schema problem.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

GaussianMixture parse_mixture(const nlohmann::json& node, Eigen::Index dim);
AffineField parse_affine(const nlohmann::json& node, Eigen::Index dim);

}  // namespace zoflow
