#include "vitalguard/subprocess.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace vitalguard::proc {
namespace {

void ignore_sigpipe_once() {
  // A child that exits before consuming its stdin would otherwise kill the
  // whole process with SIGPIPE; we want the EPIPE errno instead.
  static std::once_flag flag;
  std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void set_cloexec(int fd) {
  const int flags = ::fcntl(fd, F_GETFD, 0);
  ::fcntl(fd, F_SETFD, flags | FD_CLOEXEC);
}

void close_if(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

}  // namespace

RunResult run(const std::vector<std::string>& argv, const std::string& stdin_data,
              double timeout_seconds) {
  if (argv.empty()) throw SpawnError("cannot spawn an empty command line");
  ignore_sigpipe_once();

  int in_pipe[2], out_pipe[2], err_pipe[2], exec_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0 ||
      ::pipe(exec_pipe) != 0)
    throw SpawnError(std::string("pipe: ") + std::strerror(errno));
  set_cloexec(exec_pipe[1]);

  const pid_t pid = ::fork();
  if (pid < 0) throw SpawnError(std::string("fork: ") + std::strerror(errno));

  if (pid == 0) {
    // Child.
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    ::close(exec_pipe[0]);

    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());

    const int err = errno;  // exec failed; report it through the cloexec pipe
    ssize_t ignored = ::write(exec_pipe[1], &err, sizeof(err));
    (void)ignored;
    ::_exit(127);
  }

  // Parent.
  int in_fd = in_pipe[1], out_fd = out_pipe[0], err_fd = err_pipe[0];
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(exec_pipe[1]);

  int exec_errno = 0;
  const ssize_t got = ::read(exec_pipe[0], &exec_errno, sizeof(exec_errno));
  ::close(exec_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof(exec_errno))) {
    close_if(in_fd);
    close_if(out_fd);
    close_if(err_fd);
    int status = 0;
    ::waitpid(pid, &status, 0);
    throw SpawnError("cannot execute '" + argv[0] +
                     "': " + std::strerror(exec_errno));
  }

  set_nonblocking(in_fd);
  set_nonblocking(out_fd);
  set_nonblocking(err_fd);

  RunResult result;
  std::size_t written = 0;
  if (stdin_data.empty()) close_if(in_fd);

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_seconds);
  bool killed = false;
  char buf[65536];

  while (out_fd >= 0 || err_fd >= 0 || in_fd >= 0) {
    if (!killed && std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      killed = true;
      result.timed_out = true;
      close_if(in_fd);  // the reads below drain whatever the child produced
    }

    struct pollfd fds[3];
    int n = 0;
    int idx_in = -1, idx_out = -1, idx_err = -1;
    if (in_fd >= 0) {
      idx_in = n;
      fds[n++] = {in_fd, POLLOUT, 0};
    }
    if (out_fd >= 0) {
      idx_out = n;
      fds[n++] = {out_fd, POLLIN, 0};
    }
    if (err_fd >= 0) {
      idx_err = n;
      fds[n++] = {err_fd, POLLIN, 0};
    }

    int wait_ms = 200;
    if (!killed) {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      wait_ms = std::clamp<int>(static_cast<int>(remaining.count()) + 1, 1, 200);
    }
    const int rc = ::poll(fds, static_cast<nfds_t>(n), wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }

    if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = ::write(in_fd, stdin_data.data() + written,
                                std::min<std::size_t>(stdin_data.size() - written, 65536));
      if (w > 0) {
        written += static_cast<std::size_t>(w);
        if (written == stdin_data.size()) close_if(in_fd);
      } else if (w < 0 && errno != EAGAIN && errno != EINTR) {
        close_if(in_fd);  // child stopped reading (e.g. already answered)
      }
    }
    if (idx_out >= 0 && (fds[idx_out].revents & (POLLIN | POLLHUP))) {
      const ssize_t r = ::read(out_fd, buf, sizeof(buf));
      if (r > 0)
        result.out.append(buf, static_cast<std::size_t>(r));
      else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR))
        close_if(out_fd);
    }
    if (idx_err >= 0 && (fds[idx_err].revents & (POLLIN | POLLHUP))) {
      const ssize_t r = ::read(err_fd, buf, sizeof(buf));
      if (r > 0)
        result.err.append(buf, static_cast<std::size_t>(r));
      else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR))
        close_if(err_fd);
    }
  }

  close_if(in_fd);
  close_if(out_fd);
  close_if(err_fd);

  int status = 0;
  ::waitpid(pid, &status, 0);
  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    result.exit_code = 128 + WTERMSIG(status);
  else
    result.exit_code = -1;
  return result;
}

}  // namespace vitalguard::proc
