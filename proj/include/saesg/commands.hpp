#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "saesg/config.hpp"

namespace saesg {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_numerical = 3, exit_partial = 4 };

/// Command-line arguments beyond the config file. Everything here is
/// recorded in the manifest so a run can be replayed.
struct CommandArgs {
    std::string command;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> series;
    std::optional<std::string> direction;
    std::optional<int> min_obs;
    std::optional<bool> parallel;
    std::optional<int> split_year;
};

/*
 * Each command reads the config, writes its files into the output
 * directory together with <command>_manifest.json, and returns an exit
 * code. Errors are reported on `err` prefixed with the command name.
 */
int cmd_fit(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err);
int cmd_diagnose(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err);
int cmd_stability(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err);
int cmd_simulate(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err);
int cmd_backtest(const RunConfig& config, const CommandArgs& args, std::ostream& log, std::ostream& err);

/// Loads the config (if given), dispatches on args.command and maps
/// exceptions to exit codes.
int run_command(const std::optional<std::filesystem::path>& config_path, const CommandArgs& args,
                std::ostream& log, std::ostream& err);

/// Re-executes the command recorded in a manifest, using the embedded config.
int replay_manifest(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out,
                    std::ostream& log, std::ostream& err);

}  // namespace saesg
