#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlflow/kernels.hpp"
#include "nlflow/pipeline.hpp"

namespace nlflow {

/// Everything a run reads from a config file.
struct Config {
  FlowParams params;
  PipelineOptions pipeline;

  /// FlowParams and pipeline invariants; throws Error(parameter).
  void validate() const;
};

struct ConfigKey {
  std::string section;
  std::string name;
  std::string help;
};

/// All recognized keys, in file order.
const std::vector<ConfigKey>& config_keys();

/// INI text: `[section]` headers and `key = value` lines; `;` and `#` start comments.
/// Unknown sections or keys are errors. The result is validated.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

/// Set one key, named either `section.name` or the bare `name`. Does not validate.
void apply_setting(Config& config, const std::string& key, const std::string& value);
/// Current value of a key in config-file syntax.
std::string config_value(const Config& config, const std::string& key);

/// Every key with its current value, loadable by parse_config.
std::string render_config(const Config& config);

}  // namespace nlflow
