#pragma once

// Wire protocol: UTF-8 JSON, one message per line, LF terminator. Every
// message is an object with a `type` field; decoding is strict about the
// required fields and rejects trailing content on the line.

#include <string>
#include <string_view>
#include <variant>

#include "dalc/jobs.hpp"

namespace dalc {

struct HelloMsg {
  std::string worker_id;
  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

struct JobMsg {
  JobSpec job;
};

struct ResultMsg {
  JobResult result;
  friend bool operator==(const ResultMsg&, const ResultMsg&) = default;
};

struct NoMoreJobsMsg {
  friend bool operator==(const NoMoreJobsMsg&, const NoMoreJobsMsg&) = default;
};

struct HeartbeatMsg {
  std::string worker_id;
  friend bool operator==(const HeartbeatMsg&, const HeartbeatMsg&) = default;
};

struct ErrorMsg {
  std::string job_id;
  std::string reason;
  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

using ProtocolMessage = std::variant<HelloMsg, JobMsg, ResultMsg,
                                     NoMoreJobsMsg, HeartbeatMsg, ErrorMsg>;

// One line, no terminator.
std::string encode_message(const ProtocolMessage& msg);

// Throws ProtocolError naming what is wrong (unknown type, missing field,
// trailing content, bad payload). Never crashes on hostile input.
ProtocolMessage decode_message(std::string_view line);

}  // namespace dalc
