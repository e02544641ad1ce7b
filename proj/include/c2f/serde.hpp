#pragma once

#include <json.hpp>

#include "c2f/grammar.hpp"

namespace c2f {

struct PolicyConfig;

nlohmann::json profile_to_json(const DatasetProfile& p);
DatasetProfile profile_from_json(const nlohmann::json& j);

nlohmann::json policy_config_to_json(const PolicyConfig& cfg);
PolicyConfig policy_config_from_json(const nlohmann::json& j);

}  // namespace c2f
