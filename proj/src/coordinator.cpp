#include "dalc/coordinator.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "dalc/protocol.hpp"

namespace dalc {

const char* to_string(AssignmentEvent e) {
  switch (e) {
    case AssignmentEvent::Assigned:
      return "assigned";
    case AssignmentEvent::Completed:
      return "completed";
    case AssignmentEvent::Requeued:
      return "requeued";
    case AssignmentEvent::DuplicateDiscarded:
      return "duplicate_discarded";
    case AssignmentEvent::WorkerError:
      return "worker_error";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

// The job queue and the result set are one serialized authority: every
// mutation happens under this mutex, in arrival order.
struct ServeState {
  std::mutex mu;
  std::deque<const JobSpec*> pending;
  std::unordered_map<std::string, const JobSpec*> by_id;
  std::unordered_set<std::string> completed_ids;
  std::vector<JobResult> results;
  std::vector<AssignmentRecord> history;
  size_t total = 0;
  bool aborted = false;
  std::ofstream log;

  bool done_locked() const { return aborted || completed_ids.size() == total; }
};

// Serves one worker connection as a small event loop. A pull (HELLO or
// RESULT) is owed exactly one reply; replies wait until a job is available
// or the run is over, while the socket keeps being drained so a pipelined
// RESULT can never wedge the run. Whatever is still assigned here when the
// connection dies gets requeued.
class Connection {
 public:
  Connection(std::shared_ptr<LineChannel> channel, ServeState& state,
             const CoordinatorOptions& options)
      : channel_(std::move(channel)), state_(state), options_(options) {}

  void run() {
    const double hb_timeout = options_.heartbeat_timeout_s;
    auto last_heard = Clock::now();
    int owed_replies = 0;
    std::string line;

    while (true) {
      while (owed_replies > 0) {
        const Dispense d = try_dispense();
        if (d == Dispense::Finished) return;
        if (d == Dispense::NothingYet) break;
        --owed_replies;
      }

      const int timeout_ms =
          owed_replies > 0 ? 50 : static_cast<int>(hb_timeout * 1000.0);
      const ReadResult rr = channel_->read_line(&line, timeout_ms);
      if (rr == ReadResult::Eof) {
        release_assignments("connection lost");
        return;
      }
      if (rr == ReadResult::Timeout) {
        const double idle =
            std::chrono::duration<double>(Clock::now() - last_heard).count();
        if (idle < hb_timeout) continue;
        if (!assigned_.empty()) {
          release_assignments("heartbeat timeout");
          return;
        }
        if (owed_replies == 0) return;  // silent idle connection
        continue;  // worker is simply waiting for work, as are we
      }

      last_heard = Clock::now();
      ProtocolMessage msg;
      try {
        msg = decode_message(line);
      } catch (const ProtocolError&) {
        release_assignments("protocol violation");
        return;
      }

      if (const auto* hello = std::get_if<HelloMsg>(&msg)) {
        worker_id_ = hello->worker_id;
        ++owed_replies;
      } else if (const auto* result = std::get_if<ResultMsg>(&msg)) {
        accept_result(result->result);
        ++owed_replies;
      } else if (const auto* error = std::get_if<ErrorMsg>(&msg)) {
        handle_worker_error(*error);  // worker re-HELLOs, no reply owed
      } else if (std::holds_alternative<HeartbeatMsg>(msg)) {
        // nothing to do; the read itself refreshed the deadline
      } else {
        release_assignments("unexpected message direction");
        return;
      }
    }
  }

 private:
  enum class Dispense { NothingYet, JobSent, Finished };

  Dispense try_dispense() {
    const JobSpec* job = nullptr;
    bool finished = false;
    {
      std::lock_guard lock(state_.mu);
      if (state_.done_locked()) {
        finished = true;
      } else if (!state_.pending.empty()) {
        job = state_.pending.front();
        state_.pending.pop_front();
        assigned_.push_back(job);
        state_.history.push_back(AssignmentRecord{
            job->job_id, worker_id_, AssignmentEvent::Assigned, ""});
      }
    }
    if (finished) {
      try {
        channel_->write_line(encode_message(NoMoreJobsMsg{}));
      } catch (const NetError&) {
      }
      return Dispense::Finished;
    }
    if (!job) return Dispense::NothingYet;
    try {
      channel_->write_line(encode_message(JobMsg{*job}));
    } catch (const NetError&) {
      release_assignments("send failed");
      return Dispense::Finished;
    }
    return Dispense::JobSent;
  }

  void accept_result(const JobResult& r) {
    std::lock_guard lock(state_.mu);
    drop_assigned(r.job_id);
    if (state_.completed_ids.count(r.job_id) || !state_.by_id.count(r.job_id)) {
      state_.history.push_back(AssignmentRecord{
          r.job_id, r.worker_id, AssignmentEvent::DuplicateDiscarded,
          state_.by_id.count(r.job_id) ? "already completed" : "unknown job"});
      return;
    }
    state_.completed_ids.insert(r.job_id);
    state_.results.push_back(r);
    // The job may sit in the queue again after a requeue; retire it.
    std::erase_if(state_.pending,
                  [&](const JobSpec* j) { return j->job_id == r.job_id; });
    state_.history.push_back(
        AssignmentRecord{r.job_id, r.worker_id, AssignmentEvent::Completed, ""});
    if (state_.log.is_open()) {
      state_.log << job_result_to_json(r).dump() << '\n';
      state_.log.flush();
    }
  }

  void handle_worker_error(const ErrorMsg& error) {
    std::lock_guard lock(state_.mu);
    state_.history.push_back(AssignmentRecord{
        error.job_id, worker_id_, AssignmentEvent::WorkerError, error.reason});
    requeue_locked(error.job_id, "worker error");
    drop_assigned(error.job_id);
  }

  void release_assignments(const std::string& why) {
    std::lock_guard lock(state_.mu);
    for (const JobSpec* job : assigned_) requeue_locked(job->job_id, why);
    assigned_.clear();
  }

  void requeue_locked(const std::string& job_id, const std::string& why) {
    auto it = state_.by_id.find(job_id);
    if (it == state_.by_id.end()) return;
    if (state_.completed_ids.count(job_id)) return;
    for (const JobSpec* p : state_.pending)
      if (p->job_id == job_id) return;  // already queued again
    state_.pending.push_back(it->second);
    state_.history.push_back(
        AssignmentRecord{job_id, worker_id_, AssignmentEvent::Requeued, why});
  }

  void drop_assigned(const std::string& job_id) {
    std::erase_if(assigned_,
                  [&](const JobSpec* j) { return j->job_id == job_id; });
  }

  std::shared_ptr<LineChannel> channel_;
  ServeState& state_;
  const CoordinatorOptions& options_;
  std::string worker_id_;
  std::vector<const JobSpec*> assigned_;
};

}  // namespace

CoordinatorReport coordinator_serve(const std::vector<JobSpec>& jobs,
                                    ChannelServer& server,
                                    const CoordinatorOptions& options) {
  if (jobs.empty()) throw ConfigError("no jobs to serve");

  ServeState state;
  state.total = jobs.size();
  for (const JobSpec& job : jobs) {
    if (!state.by_id.emplace(job.job_id, &job).second)
      throw ConfigError("duplicate job id '" + job.job_id + "'");
    state.pending.push_back(&job);
  }
  if (!options.result_log_path.empty()) {
    state.log.open(options.result_log_path, std::ios::app);
    if (!state.log)
      throw DataError("cannot open result log: " + options.result_log_path);
  }

  const auto started = Clock::now();
  const auto deadline =
      options.deadline_s > 0.0
          ? started + std::chrono::duration_cast<Clock::duration>(
                          std::chrono::duration<double>(options.deadline_s))
          : Clock::time_point::max();

  std::vector<std::thread> threads;
  std::vector<std::shared_ptr<LineChannel>> channels;
  std::mutex channels_mu;
  int live_connections = 0;
  std::condition_variable drained;

  auto done = [&state] {
    std::lock_guard lock(state.mu);
    return state.done_locked();
  };

  while (!done()) {
    if (Clock::now() >= deadline) {
      std::lock_guard lock(state.mu);
      state.aborted = true;
      break;
    }
    auto conn = server.accept(100);
    if (!conn) {
      if (server.closed()) break;
      continue;
    }
    std::shared_ptr<LineChannel> channel(std::move(conn));
    {
      std::lock_guard lock(channels_mu);
      channels.push_back(channel);
      ++live_connections;
    }
    threads.emplace_back([&, channel] {
      Connection(channel, state, options).run();
      channel->close();
      std::lock_guard lock(channels_mu);
      --live_connections;
      drained.notify_all();
    });
  }

  // Connections notice completion on their next poll and send NO_MORE_JOBS
  // themselves; give them a moment before cutting off stragglers.
  server.close();
  {
    std::unique_lock lock(channels_mu);
    drained.wait_for(lock, std::chrono::seconds(1),
                     [&] { return live_connections == 0; });
    for (auto& ch : channels) ch->close();
  }
  for (auto& t : threads) t.join();

  CoordinatorReport report;
  {
    std::lock_guard lock(state.mu);
    report.results = std::move(state.results);
    report.history = std::move(state.history);
    report.completed_all = state.completed_ids.size() == state.total;
  }
  return report;
}

}  // namespace dalc
