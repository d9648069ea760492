#include "sensordash/net.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <stdexcept>

#include "sensordash/sensor_types.hpp"

namespace sensordash::net {

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ValidationError("expected host:port, got '" + text + "'");
  }
  std::string host = text.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }
  const auto port_str = std::string_view(text).substr(colon + 1);
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(port_str.data(), port_str.data() + port_str.size(), port);
  if (ec != std::errc{} || ptr != port_str.data() + port_str.size() || port > 65535) {
    throw ValidationError("bad port in '" + text + "'");
  }
  return {host, static_cast<std::uint16_t>(port)};
}

UdpSocket::UdpSocket(const Endpoint& bind_to) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_DGRAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto port_str = std::to_string(bind_to.port);
  const char* host = bind_to.host.empty() ? nullptr : bind_to.host.c_str();
  if (const int rc = ::getaddrinfo(host, port_str.c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve " + bind_to.host + ": " + ::gai_strerror(rc));
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0 || ::bind(fd_, res->ai_addr, res->ai_addrlen) != 0) {
    const std::string err = std::strerror(errno);
    ::freeaddrinfo(res);
    if (fd_ >= 0) ::close(fd_);
    throw std::runtime_error("cannot bind UDP " + bind_to.host + ":" + port_str + ": " + err);
  }
  ::freeaddrinfo(res);

  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET) {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  } else if (addr.ss_family == AF_INET6) {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  }
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<std::string> UdpSocket::receive(std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc <= 0 || !(pfd.revents & POLLIN)) return std::nullopt;
  std::array<char, 2048> buf{};
  const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
  if (n < 0) return std::nullopt;
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

}  // namespace sensordash::net
