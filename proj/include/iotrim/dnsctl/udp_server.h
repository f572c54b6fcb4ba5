#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <string>
#include <thread>

#include "iotrim/core/ipv4.h"
#include "iotrim/dnsctl/resolver.h"

namespace iotrim::dnsctl {

/// Serves a Resolver on a UDP socket bound to 127.0.0.1. Requester identity
/// for per-device views comes from the source address via `views`; unmapped
/// sources only see wildcard-scoped rules.
class UdpDnsServer {
 public:
  UdpDnsServer(const Resolver& resolver, std::uint16_t port,
               std::map<Ipv4, std::string> views = {});
  ~UdpDnsServer();

  UdpDnsServer(const UdpDnsServer&) = delete;
  UdpDnsServer& operator=(const UdpDnsServer&) = delete;

  /// Binds and starts the serving thread. Port 0 picks an ephemeral port.
  void Start();
  void Stop();
  /// Serves on the calling thread until Stop() is called from elsewhere.
  void Run();

  std::uint16_t port() const { return port_; }
  std::uint64_t served() const { return served_.load(); }

 private:
  void Bind();
  void Loop();

  const Resolver& resolver_;
  std::uint16_t port_;
  std::map<Ipv4, std::string> views_;
  int fd_ = -1;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> served_{0};
  std::thread thread_;
};

/// Sends one query to 127.0.0.1:port and waits for the reply.
std::vector<std::uint8_t> QueryUdp(std::uint16_t port,
                                   std::span<const std::uint8_t> query,
                                   int timeout_ms = 2000);

}  // namespace iotrim::dnsctl
