#include <chrono>
#include <string>

#include "doctest.h"
#include "vitalguard/subprocess.hpp"

namespace proc = vitalguard::proc;

TEST_SUITE("subprocess") {

TEST_CASE("captures stdout and the exit code") {
  const proc::RunResult r = proc::run({"/bin/sh", "-c", "printf hello"}, "", 10.0);
  CHECK(r.exit_code == 0);
  CHECK_FALSE(r.timed_out);
  CHECK(r.out == "hello");
  CHECK(r.err.empty());
}

TEST_CASE("pipes stdin through to the child") {
  const proc::RunResult r = proc::run({"/bin/cat"}, "line1\nline2\n", 10.0);
  CHECK(r.exit_code == 0);
  CHECK(r.out == "line1\nline2\n");
}

TEST_CASE("stdin larger than a pipe buffer does not deadlock") {
  std::string big(1 << 20, 'x');
  big += '\n';
  const proc::RunResult r = proc::run({"/bin/cat"}, big, 30.0);
  CHECK(r.exit_code == 0);
  CHECK(r.out.size() == big.size());
}

TEST_CASE("captures stderr separately") {
  const proc::RunResult r =
      proc::run({"/bin/sh", "-c", "printf out; printf err 1>&2"}, "", 10.0);
  CHECK(r.out == "out");
  CHECK(r.err == "err");
}

TEST_CASE("reports nonzero exit codes") {
  const proc::RunResult r = proc::run({"/bin/sh", "-c", "exit 3"}, "", 10.0);
  CHECK(r.exit_code == 3);
  CHECK_FALSE(r.timed_out);
}

TEST_CASE("kills the child at the deadline") {
  const auto t0 = std::chrono::steady_clock::now();
  const proc::RunResult r = proc::run({"/bin/sleep", "30"}, "", 0.3);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(r.timed_out);
  CHECK(elapsed < 10.0);
}

TEST_CASE("throws when the executable does not exist") {
  CHECK_THROWS_AS(
      (void)proc::run({"/nonexistent/definitely_missing_binary"}, "", 5.0),
      proc::SpawnError);
}

}  // TEST_SUITE
