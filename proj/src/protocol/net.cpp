#include "harmmtd/protocol/net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <stdexcept>

#include <spdlog/spdlog.h>

#include "harmmtd/error.hpp"

namespace harmmtd::net {

namespace {

[[noreturn]] void net_failure(const std::string& what) {
  throw Error(ErrorCode::NetworkError, what + ": " + std::strerror(errno));
}

void recv_exact(Socket& s, std::uint8_t* out, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(s.fd(), out + got, n - got, 0);
    if (r == 0) throw Error(ErrorCode::NetworkError, "connection closed by peer");
    if (r < 0) {
      if (errno == EINTR) continue;
      net_failure("recv");
    }
    got += static_cast<std::size_t>(r);
  }
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::invalid_argument("endpoint must be host:port, got '" + text + "'");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  std::size_t used = 0;
  unsigned long p = 0;
  try {
    p = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || p > 65535) throw std::invalid_argument("bad port in endpoint '" + text + "'");
  ep.port = static_cast<std::uint16_t>(p);
  return ep;
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::set_timeout(std::chrono::milliseconds t) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(t.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((t.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

Socket connect_to(const Endpoint& ep, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::NetworkError, "cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    s.set_timeout(timeout);
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      const int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw Error(ErrorCode::NetworkError, "cannot connect to " + ep.host + ":" + port + ": " + last_error);
}

void send_bytes(Socket& s, crypto::ByteView data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t w = ::send(s.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      net_failure("send");
    }
    sent += static_cast<std::size_t>(w);
  }
}

void write_frame(Socket& s, const wire::Frame& f) { send_bytes(s, wire::encode_frame(f)); }

crypto::Bytes read_frame_bytes(Socket& s) {
  crypto::Bytes buf(wire::kHeaderSize);
  recv_exact(s, buf.data(), buf.size());
  const std::size_t body = wire::frame_body_length(buf);
  buf.resize(wire::kHeaderSize + body);
  recv_exact(s, buf.data() + wire::kHeaderSize, body);
  return buf;
}

wire::Frame read_frame(Socket& s) { return wire::decode_frame(read_frame_bytes(s)); }

ProviderServer::ProviderServer(proto::ProviderCore& core, const Endpoint& bind) : core_(core) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(bind.port);
  if (const int rc = ::getaddrinfo(bind.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::NetworkError, "cannot resolve " + bind.host + ": " + ::gai_strerror(rc));
  }
  for (addrinfo* ai = res; ai != nullptr && !listener_.valid(); ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.fd(), 64) == 0) listener_ = std::move(s);
  }
  ::freeaddrinfo(res);
  if (!listener_.valid()) net_failure("cannot listen on " + bind.host + ":" + port);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                           : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

ProviderServer::~ProviderServer() {
  stop();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::lock_guard lock(workers_mutex_);
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
}

void ProviderServer::start() {
  accept_thread_ = std::thread([this] { run(); });
}

void ProviderServer::stop() { stopping_ = true; }

void ProviderServer::run() {
  spdlog::info("provider listening on port {}", port_);
  while (!stopping_) {
    pollfd pfd{listener_.fd(), POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 100);
    if (rc <= 0) continue;
    Socket conn(::accept(listener_.fd(), nullptr, nullptr));
    if (!conn.valid()) continue;
    std::lock_guard lock(workers_mutex_);
    workers_.emplace_back([this, c = std::move(conn)]() mutable { serve_connection(std::move(c)); });
  }
}

void ProviderServer::serve_connection(Socket conn) {
  conn.set_timeout(idle_timeout);
  while (!stopping_) {
    pollfd pfd{conn.fd(), POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 100);
    if (rc == 0) continue;
    if (rc < 0) return;
    try {
      const wire::Frame frame = read_frame(conn);
      switch (frame.type) {
        case wire::MessageType::RegistrationRequest: {
          const auto reply = core_.process_registration(proto::registration_from_frame(frame), frame.suite);
          write_frame(conn, proto::to_frame(reply, frame.suite));
          break;
        }
        case wire::MessageType::FurtherMessage: {
          const auto outcome = core_.process_strategy(proto::further_from_frame(frame), frame.suite);
          write_frame(conn, proto::to_frame(outcome.ack, frame.suite));
          break;
        }
        default:
          spdlog::warn("unexpected {} from client; closing", wire::to_string(frame.type));
          return;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NetworkError) spdlog::warn("closing connection: {}", e.what());
      return;
    } catch (const std::exception& e) {
      spdlog::error("closing connection: {}", e.what());
      return;
    }
  }
}

ProviderConnection::ProviderConnection(const Endpoint& ep) : socket_(connect_to(ep)) {}

proto::ReplyMessage ProviderConnection::register_enterprise(const proto::RegistrationRequest& req,
                                                             crypto::Suite suite) {
  write_frame(socket_, proto::to_frame(req, suite));
  return proto::reply_from_frame(read_frame(socket_));
}

proto::AckMessage ProviderConnection::send_strategy(const proto::FurtherMessage& msg, crypto::Suite suite) {
  write_frame(socket_, proto::to_frame(msg, suite));
  return proto::ack_from_frame(read_frame(socket_));
}

proto::AckMessage ProviderConnection::send_raw(crypto::ByteView frame) {
  send_bytes(socket_, frame);
  return proto::ack_from_frame(read_frame(socket_));
}

}  // namespace harmmtd::net
