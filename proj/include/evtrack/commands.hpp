#pragma once

#include <iosfwd>
#include <string>

#include "evtrack/config.hpp"

namespace evtrack {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitData = 3 };

// Maps a library exception to the CLI exit code.
int exit_code_for(const std::exception& e);

// Each command validates the config, writes its outputs into
// config.paths.out_dir (created if needed) atomically and records a
// manifest_<command>.json with the config hash. Messages go to `log`.
void cmd_simulate(const RunConfig& config, std::ostream& log);
void cmd_track(const RunConfig& config, std::ostream& log);
void cmd_evaluate(const RunConfig& config, std::ostream& log);
void cmd_profile(const RunConfig& config, std::ostream& log);
void cmd_sweep(const RunConfig& config, std::ostream& log);

// "id,x,y" seed corners.
std::string format_seeds(const std::vector<PixelPos>& seeds);
std::vector<PixelPos> load_seeds(const std::filesystem::path& path);

}  // namespace evtrack
