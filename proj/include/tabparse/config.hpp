#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tabparse/synth.hpp"
#include "tabparse/trainer.hpp"

namespace tabparse {

/// Everything a command-line run can be configured with.
struct RunConfig {
  std::string data;         // question TSV
  std::string tables;       // table directory
  std::string test_data;
  std::string test_tables;
  std::string lexicon;      // empty: built-in lexicon
  std::string checkpoint = "model.tsv";
  std::string report = "metrics.json";
  std::string predictions;  // eval: JSON lines per example
  std::string dump_beams;   // JSON lines per example
  std::string out = "synth";
  std::size_t audit_sample = 100;
  std::size_t audit_trials = 10;
  TrainConfig train;
  SynthConfig synth;
};

/// One configuration key: `name` in files, `--name` with dashes on the
/// command line.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

/// Applies `key=value` lines; `#` starts a comment. Unknown keys and bad
/// values throw std::invalid_argument naming the line.
void apply_config_text(RunConfig& config, const std::string& text);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// The fully resolved configuration as `key=value` lines.
std::string format_config(const RunConfig& config);
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

}  // namespace tabparse
