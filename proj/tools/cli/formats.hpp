#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "residpo/evalx.hpp"
#include "residpo/trainer.hpp"

namespace residpo::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kRoleOraclePrivate = "oracle_private";
inline constexpr std::string_view kRoleCheckpoint = "checkpoint";
inline constexpr std::string_view kRoleSplit = "split";

// Value <-> JSON. Decoders throw DataError on malformed input.
json to_json(const StructureInstance& s);
StructureInstance structure_from_json(const json& j);

json native_to_json(const std::string& structure_id, const Sequence& native);

json to_json(const HiddenTargetMap& map);
HiddenTargetMap hidden_map_from_json(const json& j);

json scored_to_json(const ScoredSequence& s, int sample_index);
ScoredSequence scored_from_json(const json& j, int* sample_index = nullptr);

json to_json(const PreferencePair& p);
PreferencePair pair_from_json(const json& j);

json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const json& j);

json to_json(const TrainConfig& c);
json to_json(const LossHyperparams& h);
json to_json(const MetricRecord& r);
MetricRecord metric_from_json(const json& j);

json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const json& j);

json to_json(const EvalReport& r);
EvalReport report_from_json(const json& j);

json to_json(const CompositionReport& r);

// Files. Every writer terminates lines with '\n'; readers throw DataError.
std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view contents);
json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& doc);
std::vector<json> read_jsonl(const fs::path& path);
void write_jsonl(const fs::path& path, const std::vector<json>& lines);

/// Throws ConfigError if the document is tagged oracle_private. Training
/// commands call this on every input so the hidden map cannot leak into them.
void reject_oracle_private(const fs::path& path);

/// "fnv1a64:<16 hex digits>" of the file contents.
std::string digest(const fs::path& path);

// Dataset directory layout written by `gen`.
struct DatasetFiles {
  fs::path structures;
  fs::path natives;
  fs::path hidden_map;
  fs::path split;

  static DatasetFiles in(const fs::path& dir);
};

std::vector<StructureInstance> load_structures(const fs::path& path);
/// Natives keyed in the order of the given structures; throws DataError if one is missing.
std::vector<Sequence> load_natives(const fs::path& path, const std::vector<StructureInstance>& structures);
/// Scored pools grouped per structure, in the order of the given structures.
std::vector<std::vector<ScoredSequence>> load_pools(const fs::path& path,
                                                    const std::vector<StructureInstance>& structures);
std::vector<PreferencePair> load_pairs(const fs::path& path);

}  // namespace residpo::io
