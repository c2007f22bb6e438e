#include "dalc/protocol.hpp"

namespace dalc {

namespace {

const Json& field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw ProtocolError(std::string("message missing field '") + name + "'");
  return *it;
}

std::string string_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_string())
    throw ProtocolError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

std::string encode_message(const ProtocolMessage& msg) {
  Json j;
  std::visit(
      [&j](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          j = Json{{"type", "HELLO"}, {"worker_id", m.worker_id}};
        } else if constexpr (std::is_same_v<T, JobMsg>) {
          j = Json{{"type", "JOB"}, {"job", job_spec_to_json(m.job)}};
        } else if constexpr (std::is_same_v<T, ResultMsg>) {
          j = Json{{"type", "RESULT"}, {"result", job_result_to_json(m.result)}};
        } else if constexpr (std::is_same_v<T, NoMoreJobsMsg>) {
          j = Json{{"type", "NO_MORE_JOBS"}};
        } else if constexpr (std::is_same_v<T, HeartbeatMsg>) {
          j = Json{{"type", "HEARTBEAT"}, {"worker_id", m.worker_id}};
        } else if constexpr (std::is_same_v<T, ErrorMsg>) {
          j = Json{{"type", "ERROR"},
                   {"job_id", m.job_id},
                   {"reason", m.reason}};
        }
      },
      msg);
  return j.dump();
}

ProtocolMessage decode_message(std::string_view line) {
  Json j;
  try {
    // Strict parse of the whole line; trailing content is rejected.
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ProtocolError(std::string("unparseable message line: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");

  const std::string type = string_field(j, "type");
  try {
    if (type == "HELLO") return HelloMsg{string_field(j, "worker_id")};
    if (type == "JOB") return JobMsg{job_spec_from_json(field(j, "job"))};
    if (type == "RESULT")
      return ResultMsg{job_result_from_json(field(j, "result"))};
    if (type == "NO_MORE_JOBS") return NoMoreJobsMsg{};
    if (type == "HEARTBEAT") return HeartbeatMsg{string_field(j, "worker_id")};
    if (type == "ERROR")
      return ErrorMsg{string_field(j, "job_id"), string_field(j, "reason")};
  } catch (const DataError& e) {
    // Payload validation reuses the file-format parsers; at the wire
    // boundary everything is a protocol error.
    throw ProtocolError("bad payload in " + type + " message: " + e.what());
  } catch (const Json::exception& e) {
    throw ProtocolError("bad payload in " + type + " message: " + e.what());
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

}  // namespace dalc
