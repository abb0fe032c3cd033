#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "medmesh/net.hpp"
#include "medmesh/train.hpp"

namespace medmesh {

/// Everything a training or evaluation run needs.
struct RunConfig {
  NetworkConfig net;
  TrainConfig train;
  std::string dataroot;
  std::string checkpoints_dir = "checkpoints";
  std::string name = "run";

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parses flat `key=value` text: one entry per line, `#` starts a comment,
/// list values are comma separated. Duplicate keys are a ConfigError.
std::map<std::string, std::string> parse_config_text(const std::string& text);

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Sets one field by name. Unknown keys and malformed values throw ConfigError.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Every field, one `key=value` per line, in a fixed order. Parsing the
/// result reproduces `cfg` exactly.
std::string to_config_text(const RunConfig& cfg);

void write_config_file(const RunConfig& cfg, const std::filesystem::path& path);

/// Names accepted by apply_setting, in the order to_config_text writes them.
const std::vector<std::string>& config_keys();

}  // namespace medmesh
