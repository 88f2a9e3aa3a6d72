#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "synctool/errors.hpp"

namespace synctool::cli {

struct RunOptions {
  std::optional<double> eps;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

// Runs one of check, synth, analyze, simulate, sweep. Failures surface as
// synctool::Error; the caller maps them to exit codes.
void run(const std::string& command, const std::string& scenario_path, const RunOptions& opts, std::ostream& log);

// 2: dimension, contract or graph precondition; 3: synthesis or unsupported
// structure; 4: numerical.
int exit_code(ErrorKind kind);

}  // namespace synctool::cli
