#pragma once

// Line-oriented reliable byte channels: a TCP implementation for real
// deployments and an in-memory one for hermetic tests. One LF-terminated
// message per line.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "dalc/errors.hpp"

namespace dalc {

enum class ReadResult { Line, Eof, Timeout };

class LineChannel {
 public:
  virtual ~LineChannel() = default;

  // Reads one line (terminator stripped). timeout_ms < 0 blocks.
  virtual ReadResult read_line(std::string* out, int timeout_ms) = 0;
  // Appends the terminator. Throws NetError if the peer is gone.
  virtual void write_line(std::string_view line) = 0;
  virtual void close() = 0;
};

class ChannelServer {
 public:
  virtual ~ChannelServer() = default;

  // Next connection, or nullptr on timeout / after close().
  virtual std::unique_ptr<LineChannel> accept(int timeout_ms) = 0;
  virtual void close() = 0;
  virtual bool closed() const = 0;
};

// --- TCP ---

class TcpListener : public ChannelServer {
 public:
  // port 0 binds an ephemeral port; see port() for the actual one.
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener() override;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<LineChannel> accept(int timeout_ms) override;
  void close() override;
  bool closed() const override { return fd_ < 0; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<LineChannel> tcp_connect(const std::string& host,
                                         std::uint16_t port);

// Splits "host:port". Throws ConfigError on malformed input.
std::pair<std::string, std::uint16_t> parse_address(const std::string& addr);

// --- In-memory ---

// A rendezvous point: connect() yields the client end and queues the server
// end for accept(). Closing either end surfaces as EOF on the other.
class MemoryHub : public ChannelServer {
 public:
  MemoryHub();
  ~MemoryHub() override;

  std::unique_ptr<LineChannel> connect();
  std::unique_ptr<LineChannel> accept(int timeout_ms) override;
  void close() override;
  bool closed() const override;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace dalc
