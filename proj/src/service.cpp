#include "worldkit/service.hpp"

#include <cstdio>

#include <httplib.h>

namespace worldkit {

using nlohmann::json;

namespace {

std::string session_id_for(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sess-%06llu", static_cast<unsigned long long>(n));
  return buf;
}

void send_error(httplib::Response& res, const Error& e) {
  res.status = http_status(e.kind());
  res.set_content(json{{"error", e.what()}}.dump(), "application/json");
}

template <typename Fn>
void handle(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const json::exception& e) {
    send_error(res, Error(ErrorKind::InvalidArgument, e.what()));
  } catch (const std::exception& e) {
    res.status = 500;
    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
  }
}

double query_double(const httplib::Request& req, const char* key, double fallback) {
  return req.has_param(key) ? parse_double(req.get_param_value(key)) : fallback;
}

}  // namespace

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return 400;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::Gone: return 410;
    case ErrorKind::Rejected: return 422;
    case ErrorKind::Unreachable: return 422;
    case ErrorKind::Backend: return 502;
    case ErrorKind::Corruption: return 500;
  }
  return 500;
}

SessionRegistry::SessionRegistry(std::optional<PipelineConfig> default_config)
    : default_config_(std::move(default_config)) {}

std::string SessionRegistry::create(const PipelineConfig& config) {
  std::string id;
  {
    std::unique_lock lock(mu_);
    id = session_id_for(next_id_++);
  }
  auto entry = std::make_shared<Entry>();
  entry->pipeline = Pipeline::build(config, id);
  std::unique_lock lock(mu_);
  sessions_.emplace(id, std::move(entry));
  return id;
}

std::string SessionRegistry::create_from_json(const json& body) {
  wire::require_known_fields(body, {"config"}, "session create body");
  if (body.contains("config")) return create(wire::config_from_json(body.at("config")));
  if (!default_config_) throw Error(ErrorKind::InvalidArgument, "missing config");
  return create(*default_config_);
}

std::shared_ptr<SessionRegistry::Entry> SessionRegistry::find(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::NotFound, "unknown session: " + id);
  return it->second;
}

std::shared_ptr<SessionRegistry::Entry> SessionRegistry::find_open(const std::string& id) const {
  auto e = find(id);
  std::lock_guard lock(e->events_mu);
  if (e->closed) throw Error(ErrorKind::Gone, "session closed: " + id);
  return e;
}

std::optional<SessionRegistry::TurnGuard> SessionRegistry::try_begin_turn(const std::string& id) {
  auto e = find_open(id);
  std::unique_lock lock(e->turn_mu, std::try_to_lock);
  if (!lock.owns_lock()) return std::nullopt;
  return TurnGuard(e, std::move(lock));
}

ResultEnvelope SessionRegistry::step(const std::string& id, const TurnInput& input) {
  auto e = find_open(id);
  std::unique_lock turn(e->turn_mu, std::try_to_lock);
  if (!turn.owns_lock()) throw Error(ErrorKind::Conflict, "turn already in flight for " + id);
  ResultEnvelope env = e->pipeline->call_once(input);
  {
    std::lock_guard lock(e->events_mu);
    e->events.push_back(env);
  }
  e->events_cv.notify_all();
  return env;
}

std::string SessionRegistry::export_pointcloud(const std::string& id) {
  auto e = find(id);
  std::lock_guard turn(e->turn_mu);
  return write_wkpc(export_points(e->pipeline->grid()).points);
}

json SessionRegistry::export_depth(const std::string& id, const wire::DepthQuery& q) {
  auto e = find(id);
  std::lock_guard turn(e->turn_mu);
  const Pose& pose = e->pipeline->state().pose;
  DepthCamera cam{pose.x + 0.5, pose.y + 0.5, 90.0 * static_cast<int>(pose.heading)};
  if (q.yaw) cam.yaw = wrap_yaw(*q.yaw);
  wire::DepthQuery echo = q;
  echo.polar = clamp_polar(q.polar);
  echo.azimuth = wrap_azimuth(q.azimuth);
  return wire::depth_to_json(render_depth(e->pipeline->grid(), cam, q.rays, q.fov), cam, echo);
}

std::string SessionRegistry::export_memory_log(const std::string& id) {
  auto e = find(id);
  std::lock_guard turn(e->turn_mu);
  return e->pipeline->memory().log(e->pipeline->session_id());
}

json SessionRegistry::memory(const std::string& id) {
  auto e = find(id);
  std::lock_guard turn(e->turn_mu);
  json records = json::array();
  const auto& p = *e->pipeline;
  for (const auto& r : p.memory().records(p.session_id())) records.push_back(wire::record_to_json(r));
  return json{{"session_id", id}, {"records", records}, {"next_step", p.memory().next_step(p.session_id())}};
}

void SessionRegistry::close(const std::string& id) {
  auto e = find_open(id);
  std::lock_guard turn(e->turn_mu);
  e->pipeline->close();
  {
    std::lock_guard lock(e->events_mu);
    e->closed = true;
  }
  e->events_cv.notify_all();
}

std::size_t SessionRegistry::size() const {
  std::shared_lock lock(mu_);
  return sessions_.size();
}

SessionRegistry::Events SessionRegistry::events(const std::string& id, std::size_t since,
                                                std::chrono::milliseconds timeout) {
  auto e = find(id);
  std::unique_lock lock(e->events_mu);
  auto done = [&] { return e->closed || (!e->events.empty() && e->events.back().terminal && e->events.back().ok()); };
  e->events_cv.wait_for(lock, timeout, [&] { return e->events.size() > since || done(); });
  Events out;
  for (std::size_t i = since; i < e->events.size(); ++i) out.envelopes.push_back(e->events[i]);
  out.finished = done();
  return out;
}

HttpService::HttpService(std::shared_ptr<SessionRegistry> registry)
    : registry_(std::move(registry)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::install_routes() {
  auto& srv = *server_;
  auto reg = registry_;

  srv.Post("/sessions", [reg](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      const std::string id = reg->create_from_json(body);
      res.status = 201;
      res.set_content(json{{"session_id", id}}.dump(), "application/json");
    });
  });

  srv.Post(R"(/sessions/([^/]+)/step)", [reg](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      const ResultEnvelope env = reg->step(req.matches[1], wire::turn_input_from_json(body));
      res.status = 200;
      res.set_content(wire::envelope_to_json(env).dump(), "application/json");
    });
  });

  srv.Get(R"(/sessions/([^/]+)/export)", [reg](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string id = req.matches[1];
      const std::string format = req.has_param("format") ? req.get_param_value("format") : "";
      if (format == "pointcloud") {
        res.set_content(reg->export_pointcloud(id), "text/plain");
      } else if (format == "depth") {
        wire::DepthQuery q;
        if (req.has_param("yaw")) q.yaw = parse_double(req.get_param_value("yaw"));
        q.rays = static_cast<int>(query_double(req, "rays", q.rays));
        q.fov = query_double(req, "fov", q.fov);
        q.polar = query_double(req, "polar", q.polar);
        q.azimuth = query_double(req, "azimuth", q.azimuth);
        res.set_content(reg->export_depth(id, q).dump(), "application/json");
      } else if (format == "memory-log") {
        res.set_content(reg->export_memory_log(id), "application/x-ndjson");
      } else {
        throw Error(ErrorKind::InvalidArgument, "unknown export format: " + format);
      }
    });
  });

  srv.Get(R"(/sessions/([^/]+)/memory)", [reg](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { res.set_content(reg->memory(req.matches[1]).dump(), "application/json"); });
  });

  srv.Delete(R"(/sessions/([^/]+))", [reg](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      reg->close(req.matches[1]);
      res.status = 204;
    });
  });

  srv.Get(R"(/sessions/([^/]+)/events)", [reg](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string id = req.matches[1];
      reg->events(id, 0, std::chrono::milliseconds(0));  // 404 before streaming starts
      const auto since = static_cast<std::size_t>(query_double(req, "since", 0));
      const auto wait = std::chrono::milliseconds(static_cast<long>(query_double(req, "timeout_ms", 30000)));
      auto cursor = std::make_shared<std::size_t>(since);
      res.set_chunked_content_provider(
          "text/event-stream", [reg, id, wait, cursor](std::size_t, httplib::DataSink& sink) {
            SessionRegistry::Events ev;
            try {
              ev = reg->events(id, *cursor, wait);
            } catch (const Error&) {
              sink.done();
              return true;
            }
            for (const auto& env : ev.envelopes) {
              const std::string chunk = "event: envelope\nid: " + std::to_string(*cursor) +
                                        "\ndata: " + wire::envelope_to_json(env).dump() + "\n\n";
              if (!sink.write(chunk.data(), chunk.size())) return false;
              ++*cursor;
            }
            if (ev.finished || ev.envelopes.empty()) sink.done();
            return true;
          });
    });
  });
}

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void HttpService::listen() { server_->listen_after_bind(); }

int HttpService::start_background(const std::string& host, int port) {
  const int bound = bind(host, port);
  if (bound < 0) throw Error(ErrorKind::Conflict, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return bound;
}

void HttpService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace worldkit
