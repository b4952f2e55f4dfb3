#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lsf/run_config.hpp"
#include "lsf/synth_scenes.hpp"

namespace lsf {

/// Subcommand dispatcher behind the `lsf` binary. Returns 0 on success,
/// 1 on runtime failure, 2 on usage or configuration errors.
int cli_dispatch(int argc, const char* const* argv);

// On-disk dataset layout shared by the subcommands: each frame set is a
// directory of frame_NNNNN.bin plus frame_NNNNN_labels.csv (and
// frame_NNNNN_beams.csv when true beam labels are known).
void write_frame_set(const std::filesystem::path& dir, const std::vector<LabeledFrame>& frames,
                     bool with_beams);
std::vector<LabeledFrame> read_frame_set(const std::filesystem::path& dir);

/// Benchmark tree: train/, val/, and val_<variant>/ per density variant
/// (names sanitized for paths), plus a verbatim copy of the config.
void write_benchmark_dataset(const Benchmark& bench, const std::filesystem::path& dir,
                             const std::string& config_text);
Benchmark read_benchmark_dataset(const std::filesystem::path& dir,
                                 const std::vector<BeamVariantSpec>& variants);

}  // namespace lsf
