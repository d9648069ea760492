#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

namespace sensordash::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Parses `host:port` (IPv6 hosts in brackets). Throws ValidationError.
[[nodiscard]] Endpoint parse_endpoint(const std::string& text);

/// Bound UDP socket with a receive timeout.
class UdpSocket {
public:
  explicit UdpSocket(const Endpoint& bind_to);
  ~UdpSocket();
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  /// Actual bound port (useful when binding port 0).
  [[nodiscard]] std::uint16_t port() const noexcept { return port_; }

  /// Waits up to `timeout` for one datagram; nullopt on timeout.
  [[nodiscard]] std::optional<std::string> receive(std::chrono::milliseconds timeout);

private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace sensordash::net
