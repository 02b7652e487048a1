#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "navbench/core/error.hpp"

extern char** environ;

namespace navbench::bridge {

inline constexpr std::size_t kMaxLineBytes = 16u << 20;

/// Bidirectional newline-delimited text channel.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  /// Writes `line` followed by '\n'. Throws TransportError when the peer is gone.
  virtual void send_line(std::string_view line) = 0;
  /// Next line without its terminator, or nullopt when `timeout` elapses first.
  /// Throws TransportError on EOF or I/O failure.
  virtual std::optional<std::string> recv_line(std::chrono::milliseconds timeout) = 0;
};

/// Line framing over a pair of file descriptors (pipe ends, or one socket used for both).
class FdLineTransport : public LineTransport {
 public:
  FdLineTransport(int read_fd, int write_fd, bool is_socket) { set_fds(read_fd, write_fd, is_socket); }
  FdLineTransport(const FdLineTransport&) = delete;
  FdLineTransport& operator=(const FdLineTransport&) = delete;
  ~FdLineTransport() override { close_fds(); }

  void send_line(std::string_view line) override {
    if (write_fd_ < 0) throw TransportError("transport is closed for writing");
    std::string data(line);
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = socket_ ? ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                : ::write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> recv_line(std::chrono::milliseconds timeout) override {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (buffer_.size() > kMaxLineBytes)
        throw ProtocolError("message exceeds " + std::to_string(kMaxLineBytes) + " bytes without a newline");
      if (read_fd_ < 0) throw TransportError("transport is closed for reading");
      const auto left = std::chrono::ceil<std::chrono::milliseconds>(deadline - clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) continue;  // loop re-checks the deadline
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw TransportError(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw TransportError("planner closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  FdLineTransport() = default;

  void set_fds(int read_fd, int write_fd, bool is_socket) {
    read_fd_ = read_fd;
    write_fd_ = write_fd;
    socket_ = is_socket;
  }

  /// Signals end of input to the peer while keeping the read side open.
  void close_write() {
    if (write_fd_ < 0) return;
    if (write_fd_ == read_fd_) ::shutdown(write_fd_, SHUT_WR);
    else ::close(write_fd_);
    write_fd_ = -1;
  }

  void close_fds() {
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    read_fd_ = write_fd_ = -1;
  }

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
  bool socket_ = false;
  std::string buffer_;
};

/// Runs `/bin/sh -c command` with its stdin and stdout connected to this transport.
/// The child's stderr is inherited.
class ChildProcessTransport final : public FdLineTransport {
 public:
  explicit ChildProcessTransport(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);  // a dead child then surfaces as EPIPE
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0)
      throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
    char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      throw TransportError("cannot start planner '" + command + "': " + std::strerror(rc));
    }
    set_fds(from_child[0], to_child[1], false);
  }

  ~ChildProcessTransport() override {
    close_write();
    using namespace std::chrono_literals;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(4ms);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  pid_t pid() const { return pid_; }

 private:
  pid_t pid_ = -1;
};

namespace detail {

inline void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace detail

/// Client side of a TCP connection to a planner listening on host:port.
class TcpTransport final : public FdLineTransport {
 public:
  TcpTransport(const std::string& host, int port,
               std::chrono::milliseconds connect_timeout = std::chrono::seconds(5)) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
      throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);

    // Retry until the deadline so a planner that is still starting up can be reached.
    const auto deadline = std::chrono::steady_clock::now() + connect_timeout;
    std::string last_error = "no addresses";
    do {
      for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) {
          last_error = std::strerror(errno);
          continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
          detail::set_nodelay(fd);
          set_fds(fd, fd, true);
          return;
        }
        last_error = std::strerror(errno);
        ::close(fd);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    } while (std::chrono::steady_clock::now() < deadline);
    throw TransportError("cannot connect to " + host + ":" + service + ": " + last_error);
  }
};

/// Listening socket that hands out one FdLineTransport per accepted connection.
class TcpListener {
 public:
  /// Binds to 127.0.0.1 on `port`; port 0 picks a free one (see port()).
  explicit TcpListener(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 8) != 0) {
      const std::string err = std::strerror(errno);
      ::close(fd_);
      throw TransportError("cannot listen on port " + std::to_string(port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() { ::close(fd_); }

  int port() const { return port_; }

  std::unique_ptr<FdLineTransport> accept() {
    for (;;) {
      const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (fd >= 0) {
        detail::set_nodelay(fd);
        return std::make_unique<FdLineTransport>(fd, fd, true);
      }
      if (errno != EINTR) throw TransportError(std::string("accept failed: ") + std::strerror(errno));
    }
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace navbench::bridge
