// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <variant>

#include "config.hpp"

namespace sstg::cli {

void cmd_prepare(const RunConfig& c);
void cmd_synth(const RunConfig& c);
void cmd_train(const RunConfig& c);
void cmd_cv(const RunConfig& c);
void cmd_eval(const RunConfig& c);
void cmd_explain(const RunConfig& c);
void cmd_features(const RunConfig& c);

struct Invocation {
  std::string command;
  Values values;  // defaults < config file < flags
};

/// Parses argv without running anything. Returns an exit code instead when
/// parsing ends the process (--help, --version, bad flags).
std::variant<Invocation, int> parse_invocation(int argc, const char* const* argv);

/// Parses argv, runs the command and maps errors to exit codes:
/// 0 success, 2 configuration error, 3 data error, 1 anything else.
int run(int argc, char** argv);

}  // namespace sstg::cli
