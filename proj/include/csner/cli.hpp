#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "csner/trainer.hpp"

namespace csner::cli {

/// Every setting the pipeline reads, after merging defaults, the config
/// file and command-line flags (in increasing precedence).
struct RunConfig {
  TrainingConfig training;
  std::string train;
  std::string dev;
  std::string test;
  std::string vec_eng;
  std::string vec_spa;
  std::string checkpoint;
  std::string out;
  std::string log;
  std::string prune_to;
  bool no_post = false;
};

/// Keys accepted in config files; flags use the same names with '-' for '_'.
const std::vector<std::string>& config_keys();

/// Parses "key = value" lines ('#' starts a comment). Unknown keys and
/// malformed lines throw ParseError.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Applies one setting; throws std::invalid_argument for bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Entry point shared by the executable and the tests. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace csner::cli
