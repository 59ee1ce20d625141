#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "harmmtd/cloud.hpp"

namespace harmmtd {

/// One scenario file: cloud ground truth plus the tenant-declared topology.
struct Scenario {
  std::string ep_code;
  CloudState cloud;
  TopologyDecl topology;
};

/// Parses scenario JSON. Every error message is prefixed with
/// "<source>:<line>:<column>:" and the JSON pointer of the offending value.
Scenario parse_scenario(std::string_view text, const std::string& source_name = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// Dump using the scenario schema; parse_scenario(dump) reproduces the state.
nlohmann::json scenario_to_json(const Scenario& scenario);
nlohmann::json cloud_to_json(const CloudState& cloud);

}  // namespace harmmtd
