#pragma once

#include <string>
#include <vector>

namespace fwrobust {

/// Parses and executes one subcommand invocation:
///   fwrobust <train|attack|eval|distortion|landscape|masking|counterfactual|verify>
///            [--config FILE] [--set key=value ...] [--seed N] [--out DIR] [--workers N]
/// args excludes the program name. Returns the process exit code; failures
/// print a diagnostic to stderr.
int run_cli(std::vector<std::string> args);

}  // namespace fwrobust
