#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cvxint::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitPrecondition = 3,
  kExitNumeric = 4,
};

struct RunOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> config_text;  // used when no path is given
  std::string out_dir = ".";
  std::optional<unsigned long> seed;
  std::optional<std::size_t> threads;
};

const std::vector<std::string>& command_names();

/// Runs one command end to end, writing artifacts to opt.out_dir; returns the process exit code.
int run_command(const std::string& command, const RunOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace cvxint::cli
