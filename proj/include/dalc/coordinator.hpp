#pragma once

#include <string>
#include <vector>

#include "dalc/jobs.hpp"
#include "dalc/net.hpp"

namespace dalc {

struct CoordinatorOptions {
  double heartbeat_timeout_s = 30.0;
  // Operator deadline: abort with a partial report if the run has not
  // finished after this many seconds. 0 waits indefinitely.
  double deadline_s = 0.0;
  // Durable JSON-lines result log, appended as results arrive. Empty
  // disables logging.
  std::string result_log_path;
};

enum class AssignmentEvent {
  Assigned,
  Completed,
  Requeued,
  DuplicateDiscarded,
  WorkerError,
};

const char* to_string(AssignmentEvent e);

struct AssignmentRecord {
  std::string job_id;
  std::string worker_id;
  AssignmentEvent event;
  std::string detail;
};

struct CoordinatorReport {
  std::vector<JobResult> results;  // completion order, one per job id
  std::vector<AssignmentRecord> history;
  bool completed_all = false;
};

// Serves jobs to pulling workers until every job has exactly one accepted
// result (or the deadline aborts the run). Workers pull by HELLO or by
// returning a RESULT; a worker silent past the heartbeat timeout, or whose
// connection drops, gets its job requeued. Late duplicate results are
// discarded and logged in the history.
CoordinatorReport coordinator_serve(const std::vector<JobSpec>& jobs,
                                    ChannelServer& server,
                                    const CoordinatorOptions& options = {});

}  // namespace dalc
