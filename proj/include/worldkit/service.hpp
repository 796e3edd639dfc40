#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "worldkit/pipeline.hpp"
#include "worldkit/wire.hpp"

namespace httplib {
class Server;
}

namespace worldkit {

/// Thread-safe registry of pipeline sessions. Turns on one session are
/// serialized with a try-lock: a second concurrent turn fails with Conflict
/// instead of queueing. Distinct sessions share nothing but the registry map.
class SessionRegistry {
  struct Entry;

 public:
  class TurnGuard {
   public:
    TurnGuard(std::shared_ptr<Entry> entry, std::unique_lock<std::mutex> lock)
        : entry_(std::move(entry)), lock_(std::move(lock)) {}

   private:
    std::shared_ptr<Entry> entry_;
    std::unique_lock<std::mutex> lock_;
  };

  explicit SessionRegistry(std::optional<PipelineConfig> default_config = std::nullopt);

  std::string create(const PipelineConfig& config);
  // Body is {"config": {...}} or {} to use the default config.
  std::string create_from_json(const nlohmann::json& body);

  // Throws NotFound, Gone, Conflict (turn in flight) or Rejected (operator).
  ResultEnvelope step(const std::string& id, const TurnInput& input);

  // Claims the session's turn slot; nullopt while another turn holds it.
  std::optional<TurnGuard> try_begin_turn(const std::string& id);

  std::string export_pointcloud(const std::string& id);
  nlohmann::json export_depth(const std::string& id, const wire::DepthQuery& query);
  std::string export_memory_log(const std::string& id);
  nlohmann::json memory(const std::string& id);

  void close(const std::string& id);
  std::size_t size() const;

  struct Events {
    std::vector<ResultEnvelope> envelopes;
    bool finished = false;  // closed or terminal
  };
  // Envelopes with index >= since; waits up to `timeout` for at least one.
  Events events(const std::string& id, std::size_t since, std::chrono::milliseconds timeout);

 private:
  struct Entry {
    std::unique_ptr<Pipeline> pipeline;
    std::mutex turn_mu;
    std::mutex events_mu;
    std::condition_variable events_cv;
    std::vector<ResultEnvelope> events;
    bool closed = false;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  std::shared_ptr<Entry> find_open(const std::string& id) const;

  std::optional<PipelineConfig> default_config_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
};

int http_status(ErrorKind kind);

/// HTTP+JSON front end over a SessionRegistry.
class HttpService {
 public:
  explicit HttpService(std::shared_ptr<SessionRegistry> registry);
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // bind + listen on a background thread; returns the port.
  int start_background(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

  SessionRegistry& registry() { return *registry_; }

 private:
  void install_routes();

  std::shared_ptr<SessionRegistry> registry_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace worldkit
