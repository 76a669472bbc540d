#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>

namespace losnav {

class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-known role addresses; one UDP port per role on loopback by default.
struct NetConfig {
  std::string vision_addr = "127.0.0.1:47001";
  std::string robot_addr = "127.0.0.1:47002";
  std::string control_addr = "127.0.0.1:47000";
  std::string target_addr = "127.0.0.1:47003";

  // Environment variables override the built-in defaults but not CLI flags.
  void apply_env() {
    if (const char* v = std::getenv("LOSNAV_VISION_ADDR")) vision_addr = v;
    if (const char* v = std::getenv("LOSNAV_ROBOT_ADDR")) robot_addr = v;
    if (const char* v = std::getenv("LOSNAV_CONTROL_ADDR")) control_addr = v;
  }
};

inline sockaddr_in parse_addr(const std::string& host_port) {
  const auto colon = host_port.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= host_port.size()) {
    throw EndpointError("address must be HOST:PORT, got '" + host_port + "'");
  }
  const std::string host = host_port.substr(0, colon);
  const std::string port_text = host_port.substr(colon + 1);
  char* end = nullptr;
  const long port = std::strtol(port_text.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || port < 1 || port > 65535) {
    throw EndpointError("invalid port in '" + host_port + "'");
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw EndpointError("invalid IPv4 host in '" + host_port + "'");
  }
  return addr;
}

// Minimal RAII UDP socket: bind, timed receive, datagram send.
class UdpSocket {
 public:
  UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {
    if (fd_ < 0) throw EndpointError(std::string("socket: ") + std::strerror(errno));
  }
  ~UdpSocket() {
    if (fd_ >= 0) ::close(fd_);
  }
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  UdpSocket& operator=(UdpSocket&& other) noexcept {
    if (this != &other) {
      if (fd_ >= 0) ::close(fd_);
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }

  void bind(const sockaddr_in& addr) {
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw EndpointError(std::string("bind: ") + std::strerror(errno));
    }
  }

  void bind(const std::string& host_port) { bind(parse_addr(host_port)); }

  // Binds to 127.0.0.1 with an OS-assigned port (test isolation).
  void bind_ephemeral() { bind(ephemeral_addr()); }

  std::uint16_t local_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      throw EndpointError(std::string("getsockname: ") + std::strerror(errno));
    }
    return ntohs(addr.sin_port);
  }

  void set_receive_timeout(double seconds) {
    timeval tv{};
    tv.tv_sec = static_cast<long>(seconds);
    tv.tv_usec = static_cast<long>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
    if (::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv)) != 0) {
      throw EndpointError(std::string("setsockopt: ") + std::strerror(errno));
    }
  }

  void send_to(const sockaddr_in& dst, const std::string& bytes) const {
    (void)::sendto(fd_, bytes.data(), bytes.size(), 0,
                   reinterpret_cast<const sockaddr*>(&dst), sizeof(dst));
  }

  // One datagram, or nullopt on timeout/interrupt.
  std::optional<std::string> receive() const {
    char buf[2048];
    const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return std::nullopt;
      throw EndpointError(std::string("recv: ") + std::strerror(errno));
    }
    return std::string(buf, static_cast<std::size_t>(n));
  }

  int fd() const { return fd_; }

 private:
  // parse_addr rejects port 0 on purpose (a role endpoint must be concrete),
  // so the ephemeral loopback address is assembled directly.
  static sockaddr_in ephemeral_addr() {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = 0;
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    return addr;
  }

  int fd_ = -1;
};

}  // namespace losnav
