#pragma once

#include <functional>
#include <memory>
#include <string>

#include "dalc/alc.hpp"
#include "dalc/net.hpp"

namespace dalc {

struct WorkerOptions {
  std::string worker_id = "worker";
  // Heartbeats go out at half the coordinator's timeout by default.
  double heartbeat_interval_s = 15.0;
  int max_connect_attempts = 5;
  double initial_backoff_s = 0.25;
};

// Produces a fresh connection to the coordinator; throws NetError when the
// coordinator is unreachable.
using ConnectFn = std::function<std::unique_ptr<LineChannel>()>;

struct WorkerStats {
  int jobs_completed = 0;
  int errors_sent = 0;
  int reconnects = 0;
};

// Pull loop: HELLO, then for every JOB received run the search with the
// job's embedded seed and return a RESULT, heartbeating while the job is in
// progress. Trainer failures are reported as ERROR followed by a fresh
// HELLO. Runs until NO_MORE_JOBS. Connection loss triggers bounded
// exponential-backoff reconnection; running out of attempts raises NetError.
WorkerStats worker_loop(const ConnectFn& connect, const Trainer& trainer,
                        const WorkerOptions& options = {});

}  // namespace dalc
