#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "residpo/evalx.hpp"

namespace residpo::cli {

/// Everything a command can be configured with. Config files are flat JSON
/// objects whose keys match the field names below; a nested "pretrain" object
/// overrides the reference-pretraining recipe with the same keys.
struct RunConfig {
  ExperimentConfig experiment;
  SamplingStrategy strategy = SamplingStrategy::Relative;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<int> sizes = {25, 50, 100, 200};
  std::vector<CellSpec> grid = table1_grid();
};

/// Throws ConfigError whose message lists every offending key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace residpo::cli
