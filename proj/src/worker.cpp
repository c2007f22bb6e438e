#include "dalc/worker.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "dalc/protocol.hpp"

namespace dalc {

namespace {

// Periodic heartbeats on a side thread while a job is being trained.
class HeartbeatPump {
 public:
  HeartbeatPump(LineChannel& channel, const std::string& worker_id,
                double interval_s)
      : thread_([this, &channel, worker_id, interval_s] {
          const std::string line =
              encode_message(HeartbeatMsg{worker_id});
          std::unique_lock lock(mu_);
          while (!cv_.wait_for(lock,
                               std::chrono::duration<double>(interval_s),
                               [this] { return stop_; })) {
            lock.unlock();
            try {
              channel.write_line(line);
            } catch (const NetError&) {
              lock.lock();
              break;
            }
            lock.lock();
          }
        }) {}

  ~HeartbeatPump() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::thread thread_;
};

}  // namespace

WorkerStats worker_loop(const ConnectFn& connect, const Trainer& trainer,
                        const WorkerOptions& options) {
  WorkerStats stats;

  std::unique_ptr<LineChannel> channel;
  auto reconnect = [&](bool initial) {
    double backoff = options.initial_backoff_s;
    for (int attempt = 0; attempt < options.max_connect_attempts; ++attempt) {
      try {
        channel = connect();
        if (!initial) ++stats.reconnects;
        return;
      } catch (const NetError&) {
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        backoff *= 2.0;
      }
    }
    throw NetError("worker '" + options.worker_id +
                   "' could not reach the coordinator after " +
                   std::to_string(options.max_connect_attempts) + " attempts");
  };

  // Each line sent is a pull in its own right, so redelivery after a
  // reconnect must not be preceded by another HELLO.
  auto send_with_reconnect = [&](const std::string& line) {
    try {
      channel->write_line(line);
    } catch (const NetError&) {
      reconnect(false);
      channel->write_line(line);
    }
  };

  reconnect(true);
  channel->write_line(encode_message(HelloMsg{options.worker_id}));

  std::string line;
  while (true) {
    const ReadResult rr = channel->read_line(&line, -1);
    if (rr != ReadResult::Line) {
      // Idle connection lost; a fresh HELLO pulls the next job.
      reconnect(false);
      channel->write_line(encode_message(HelloMsg{options.worker_id}));
      continue;
    }
    const ProtocolMessage msg = decode_message(line);

    if (std::holds_alternative<NoMoreJobsMsg>(msg)) {
      channel->close();
      return stats;
    }
    const auto* job_msg = std::get_if<JobMsg>(&msg);
    if (!job_msg)
      throw ProtocolError("worker received unexpected message: " + line);

    const JobSpec& job = job_msg->job;
    JobResult result;
    bool trained = false;
    try {
      HeartbeatPump pump(*channel, options.worker_id,
                         options.heartbeat_interval_s);
      result = execute_job(job, trainer, options.worker_id);
      trained = true;
    } catch (const std::exception& ex) {
      // Local failure: report it and ask for the next job from scratch.
      send_with_reconnect(encode_message(ErrorMsg{job.job_id, ex.what()}));
      send_with_reconnect(encode_message(HelloMsg{options.worker_id}));
      ++stats.errors_sent;
    }
    if (trained) {
      send_with_reconnect(encode_message(ResultMsg{result}));
      ++stats.jobs_completed;
    }
  }
}

}  // namespace dalc
