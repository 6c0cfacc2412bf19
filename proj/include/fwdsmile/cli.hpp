#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fwdsmile/config.hpp"

namespace fwdsmile::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kComparisonFailed = 3 };

/// Files written by one subcommand, plus the comparison verdict for compare.
struct CommandResult {
  std::vector<std::string> files;
  bool comparisons_pass = true;
};

/// Applies --seed / FWDSMILE_SEED (flag wins), FWDSMILE_THREADS and --out.
void apply_overrides(config::RunConfig& cfg, std::optional<std::uint64_t> seed_flag,
                     std::optional<std::string> out_flag);

CommandResult cmd_price(const config::RunConfig& cfg);
CommandResult cmd_smile(const config::RunConfig& cfg);
CommandResult cmd_converge(const config::RunConfig& cfg);
CommandResult cmd_limits(const config::RunConfig& cfg);
CommandResult cmd_compare(const config::RunConfig& cfg);

CommandResult run_command(const std::string& command, const config::RunConfig& cfg);

/// Full command line: subcommand, config path and overrides. Returns the exit
/// code; errors go to stderr as a one-line JSON record.
int main(int argc, char** argv);

}  // namespace fwdsmile::cli
