#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "harmmtd/protocol/messages.hpp"
#include "harmmtd/protocol/provider.hpp"
#include "harmmtd/protocol/wire.hpp"

namespace harmmtd::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port"; throws std::invalid_argument.
Endpoint parse_endpoint(const std::string& text);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void close() noexcept;
  void set_timeout(std::chrono::milliseconds t);

 private:
  int fd_ = -1;
};

/// Throws NetworkError.
Socket connect_to(const Endpoint& ep, std::chrono::milliseconds timeout = std::chrono::seconds(5));

void send_bytes(Socket& s, crypto::ByteView data);
/// Writes one encoded frame. Throws NetworkError.
void write_frame(Socket& s, const wire::Frame& f);
/// Returns the raw bytes of one frame. Throws NetworkError on I/O failure or
/// EOF, ProtocolError when the header announces an oversize body.
crypto::Bytes read_frame_bytes(Socket& s);
wire::Frame read_frame(Socket& s);

/// Thread-per-connection server in front of a ProviderCore.
class ProviderServer {
 public:
  ProviderServer(proto::ProviderCore& core, const Endpoint& bind);
  ~ProviderServer();
  ProviderServer(const ProviderServer&) = delete;
  ProviderServer& operator=(const ProviderServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  /// Accepts connections until stop() is called.
  void run();
  /// Runs the accept loop on a background thread.
  void start();
  void stop();

  std::chrono::milliseconds idle_timeout{30000};

 private:
  void serve_connection(Socket conn);

  proto::ProviderCore& core_;
  Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
};

/// Client-side connection to a ProviderServer.
class ProviderConnection {
 public:
  explicit ProviderConnection(const Endpoint& ep);

  proto::ReplyMessage register_enterprise(const proto::RegistrationRequest& req, crypto::Suite suite);
  proto::AckMessage send_strategy(const proto::FurtherMessage& msg, crypto::Suite suite);
  /// Sends an already-encoded FurtherMessage frame verbatim.
  proto::AckMessage send_raw(crypto::ByteView frame);

 private:
  Socket socket_;
};

}  // namespace harmmtd::net
