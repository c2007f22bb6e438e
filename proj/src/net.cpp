#include "dalc/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace dalc {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw NetError(what + ": " + std::strerror(errno));
}

class TcpChannel : public LineChannel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpChannel() override {
    close();
    ::close(fd_);
  }

  ReadResult read_line(std::string* out, int timeout_ms) override {
    while (true) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        out->assign(buffer_, 0, pos);
        buffer_.erase(0, pos + 1);
        return ReadResult::Line;
      }
      if (shut_.load()) return ReadResult::Eof;

      pollfd pfd{fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, timeout_ms);
      if (rc == 0) return ReadResult::Timeout;
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw_errno("poll");
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n == 0) {
        // Peer closed; whatever is buffered has no terminator and is
        // treated as truncation, not a message.
        return ReadResult::Eof;
      }
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) return ReadResult::Eof;
        throw_errno("recv");
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

  void write_line(std::string_view line) override {
    std::lock_guard lock(write_mu_);
    if (shut_.load()) throw NetError("write on closed channel");
    std::string framed(line);
    framed.push_back('\n');
    size_t sent = 0;
    while (sent < framed.size()) {
      const ssize_t n = ::send(fd_, framed.data() + sent, framed.size() - sent,
                               MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("send");
      }
      sent += static_cast<size_t>(n);
    }
  }

  // Idempotent and safe to call from another thread while a read is in
  // flight: the fd stays valid until destruction, only the stream is shut.
  void close() override {
    if (!shut_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  const int fd_;
  std::atomic<bool> shut_{false};
  std::string buffer_;
  std::mutex write_mu_;
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw NetError("invalid IPv4 address: " + host);
  return addr;
}

}  // namespace

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = make_addr(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw_errno("bind " + host + ":" + std::to_string(port));
  if (::listen(fd_, 64) != 0) throw_errno("listen");
  socklen_t len = sizeof addr;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw_errno("getsockname");
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

std::unique_ptr<LineChannel> TcpListener::accept(int timeout_ms) {
  if (fd_ < 0) return nullptr;
  pollfd pfd{fd_, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, timeout_ms);
  if (rc == 0) return nullptr;
  if (rc < 0) {
    if (errno == EINTR) return nullptr;
    throw_errno("poll on listener");
  }
  const int conn = ::accept(fd_, nullptr, nullptr);
  if (conn < 0) {
    if (errno == EINVAL || errno == EBADF) return nullptr;  // closed
    throw_errno("accept");
  }
  return std::make_unique<TcpChannel>(conn);
}

void TcpListener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::unique_ptr<LineChannel> tcp_connect(const std::string& host,
                                         std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw_errno("socket");
  sockaddr_in addr = make_addr(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const int saved = errno;
    ::close(fd);
    errno = saved;
    throw_errno("connect " + host + ":" + std::to_string(port));
  }
  return std::make_unique<TcpChannel>(fd);
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size())
    throw ConfigError("expected host:port, got '" + addr + "'");
  const std::string host = addr.substr(0, colon);
  try {
    const int port = std::stoi(addr.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    return {host, static_cast<std::uint16_t>(port)};
  } catch (const std::exception&) {
    throw ConfigError("bad port in address '" + addr + "'");
  }
}

// --- In-memory channels ---

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> lines;
  bool closed = false;
};

// One direction each way; close() on either end closes both directions.
class MemoryChannel : public LineChannel {
 public:
  MemoryChannel(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~MemoryChannel() override { close(); }

  ReadResult read_line(std::string* out, int timeout_ms) override {
    std::unique_lock lock(in_->mu);
    auto ready = [this] { return !in_->lines.empty() || in_->closed; };
    if (timeout_ms < 0) {
      in_->cv.wait(lock, ready);
    } else if (!in_->cv.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                                 ready)) {
      return ReadResult::Timeout;
    }
    if (!in_->lines.empty()) {
      *out = std::move(in_->lines.front());
      in_->lines.pop_front();
      return ReadResult::Line;
    }
    return ReadResult::Eof;
  }

  void write_line(std::string_view line) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw NetError("write on closed channel");
    out_->lines.emplace_back(line);
    out_->cv.notify_all();
  }

  void close() override {
    for (auto& p : {in_, out_}) {
      std::lock_guard lock(p->mu);
      p->closed = true;
      p->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

}  // namespace

struct MemoryHub::Impl {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::unique_ptr<LineChannel>> pending;
  bool closed = false;
};

MemoryHub::MemoryHub() : impl_(std::make_shared<Impl>()) {}

MemoryHub::~MemoryHub() { close(); }

std::unique_ptr<LineChannel> MemoryHub::connect() {
  auto a = std::make_shared<Pipe>();
  auto b = std::make_shared<Pipe>();
  auto client = std::make_unique<MemoryChannel>(a, b);
  auto server = std::make_unique<MemoryChannel>(b, a);
  std::lock_guard lock(impl_->mu);
  if (impl_->closed) throw NetError("hub is closed");
  impl_->pending.push_back(std::move(server));
  impl_->cv.notify_all();
  return client;
}

std::unique_ptr<LineChannel> MemoryHub::accept(int timeout_ms) {
  std::unique_lock lock(impl_->mu);
  auto ready = [this] { return !impl_->pending.empty() || impl_->closed; };
  if (timeout_ms < 0) {
    impl_->cv.wait(lock, ready);
  } else if (!impl_->cv.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                                 ready)) {
    return nullptr;
  }
  if (impl_->pending.empty()) return nullptr;
  auto conn = std::move(impl_->pending.front());
  impl_->pending.pop_front();
  return conn;
}

void MemoryHub::close() {
  std::lock_guard lock(impl_->mu);
  impl_->closed = true;
  impl_->cv.notify_all();
}

bool MemoryHub::closed() const {
  std::lock_guard lock(impl_->mu);
  return impl_->closed;
}

}  // namespace dalc
