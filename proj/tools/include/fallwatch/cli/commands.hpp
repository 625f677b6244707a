#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fallwatch/cli/run_config.hpp"

namespace fallwatch::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,
    kExitData = 3,
    kExitIntegrity = 4,
};

void cmd_synth(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);
void cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err);
void cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
void cmd_report(const RunConfig& cfg, std::ostream& out);

/// Parses `args` (without the program name), runs the subcommand and maps failures
/// to exit codes: 2 usage/config, 3 data (including purity), 4 integrity, 1 other.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env = process_env);

}  // namespace fallwatch::cli
