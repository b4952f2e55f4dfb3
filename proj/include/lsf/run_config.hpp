#pragma once

#include <filesystem>
#include <string>

#include "lsf/synth_scenes.hpp"
#include "lsf/trainer.hpp"

namespace lsf {

/// Configuration error: malformed file, unknown key, missing key, or a
/// value out of range. The CLI maps this to a usage failure (exit 2).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// One experiment description parsed from a plain-text `key = value` file
/// with `[section]` headers. Every schema key must be present exactly once
/// (the `variant` key repeats); unknown keys are rejected.
struct RunConfig {
  SceneSpec scene;
  DistillConfig train;
  int frames = 0;
  double train_ratio = 0.0;
  std::string output_dir;
  std::string dataset_dir;  // may stay empty; subcommands can override
  std::string raw_text;     // verbatim file content, copied into run dirs
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig parse_run_config(const std::filesystem::path& path);

/// A complete config with the library defaults filled in, suitable as a
/// starting template.
std::string default_config_text();

/// Variant names with characters unfit for paths replaced ('*' -> 's').
std::string sanitize_variant_name(const std::string& name);

}  // namespace lsf
