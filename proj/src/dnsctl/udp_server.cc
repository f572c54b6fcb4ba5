#include "iotrim/dnsctl/udp_server.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>

#include "iotrim/error.h"

namespace iotrim::dnsctl {
namespace {

constexpr std::size_t kMaxDatagram = 512;

[[noreturn]] void ThrowErrno(const std::string& what) {
  throw Error(ErrorCode::kIo, what + ": " + std::strerror(errno));
}

sockaddr_in LoopbackAddr(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

}  // namespace

UdpDnsServer::UdpDnsServer(const Resolver& resolver, std::uint16_t port,
                           std::map<Ipv4, std::string> views)
    : resolver_(resolver), port_(port), views_(std::move(views)) {}

UdpDnsServer::~UdpDnsServer() { Stop(); }

void UdpDnsServer::Bind() {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) ThrowErrno("socket");
  sockaddr_in addr = LoopbackAddr(port_);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(fd_);
    fd_ = -1;
    ThrowErrno("bind 127.0.0.1:" + std::to_string(port_));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
}

void UdpDnsServer::Start() {
  Bind();
  thread_ = std::thread([this] { Loop(); });
}

void UdpDnsServer::Run() {
  Bind();
  Loop();
}

void UdpDnsServer::Stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void UdpDnsServer::Loop() {
  std::array<std::uint8_t, kMaxDatagram> buf{};
  while (running_) {
    pollfd pfd{fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 50) <= 0) continue;
    sockaddr_in peer{};
    socklen_t peer_len = sizeof peer;
    const ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0,
                                 reinterpret_cast<sockaddr*>(&peer), &peer_len);
    if (n < 0) continue;
    const Ipv4 source(ntohl(peer.sin_addr.s_addr));
    auto view = views_.find(source);
    const std::string requester = view == views_.end() ? "" : view->second;
    const auto reply = resolver_.HandleWire(
        std::span(buf.data(), static_cast<std::size_t>(n)), requester);
    ::sendto(fd_, reply.data(), reply.size(), 0,
             reinterpret_cast<sockaddr*>(&peer), peer_len);
    ++served_;
  }
}

std::vector<std::uint8_t> QueryUdp(std::uint16_t port,
                                   std::span<const std::uint8_t> query,
                                   int timeout_ms) {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) ThrowErrno("socket");
  sockaddr_in addr = LoopbackAddr(port);
  std::vector<std::uint8_t> reply(kMaxDatagram);
  ssize_t n = -1;
  if (::sendto(fd, query.data(), query.size(), 0,
               reinterpret_cast<sockaddr*>(&addr), sizeof addr) >= 0) {
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, timeout_ms) > 0) {
      n = ::recv(fd, reply.data(), reply.size(), 0);
    }
  }
  ::close(fd);
  if (n < 0) {
    throw Error(ErrorCode::kIo, "no DNS reply from 127.0.0.1:" + std::to_string(port));
  }
  reply.resize(static_cast<std::size_t>(n));
  return reply;
}

}  // namespace iotrim::dnsctl
