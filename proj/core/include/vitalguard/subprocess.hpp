#pragma once

/// Minimal child-process runner: feed stdin, capture stdout/stderr, enforce
/// a wall-clock deadline.

#include <string>
#include <vector>

#include "vitalguard/common.hpp"

namespace vitalguard::proc {

class SpawnError : public Error {
 public:
  using Error::Error;
};

struct RunResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string out;
  std::string err;
};

/// Runs argv[0] with the given arguments, writing stdin_data to its stdin.
/// On timeout the child is killed (SIGKILL) and timed_out is set. Throws
/// SpawnError when the executable cannot be started at all.
RunResult run(const std::vector<std::string>& argv, const std::string& stdin_data,
              double timeout_seconds);

}  // namespace vitalguard::proc
