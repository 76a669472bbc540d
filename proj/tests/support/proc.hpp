#pragma once

// Minimal fork/exec harness for multi-process integration tests: spawns the
// CLI with stdout and stderr redirected to a file, waits with a deadline, and
// escalates SIGINT -> SIGKILL on teardown so a wedged child can never hang
// the suite.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace proc {

struct Child {
  pid_t pid = -1;
  std::string output_path;

  bool running() const {
    if (pid <= 0) return false;
    return ::waitpid(pid, nullptr, WNOHANG) == 0;
  }

  // Exit code, or -1 if the deadline passed (child left running).
  int wait_exit(double timeout_s) {
    if (pid <= 0) return -1;
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    int status = 0;
    while (std::chrono::steady_clock::now() < deadline) {
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid) {
        pid = -1;
        if (WIFEXITED(status)) return WEXITSTATUS(status);
        return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return -1;
  }

  void interrupt() const {
    if (pid > 0) ::kill(pid, SIGINT);
  }

  void terminate() {
    if (pid <= 0) return;
    ::kill(pid, SIGINT);
    if (wait_exit(2.0) == -1) {
      ::kill(pid, SIGKILL);
      wait_exit(2.0);
    }
  }

  std::string output() const {
    std::ifstream in(output_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
};

inline Child spawn(const std::vector<std::string>& argv, const std::string& output_path) {
  Child child;
  child.output_path = output_path;
  const pid_t pid = ::fork();
  if (pid < 0) return child;
  if (pid == 0) {
    const int fd = ::open(output_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execv(args[0], args.data());
    _exit(127);
  }
  child.pid = pid;
  return child;
}

}  // namespace proc
