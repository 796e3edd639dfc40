#include "worldkit/wire.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace worldkit::wire {

namespace {

template <typename Fn>
auto guarded(std::string_view what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + ": " + e.what());
  }
}

json artifact_to_json(const Artifact& a) {
  if (a.modality == Modality::Image) {
    const ObservationFrame f = decode_frame(a.payload);
    return json{{"modality", "Image"},
                {"frame", {{"width", f.width()}, {"height", f.height()}, {"pixels", base64_encode(f.pixels())}}}};
  }
  return json{{"modality", std::string(to_string(a.modality))}, {"data", base64_encode(a.payload)}};
}

Artifact artifact_from_json(const json& j) {
  require_known_fields(j, {"modality", "frame", "data"}, "artifact");
  Artifact a;
  a.modality = modality_from_string(j.at("modality").get<std::string>());
  if (a.modality == Modality::Image) {
    const json& f = j.at("frame");
    require_known_fields(f, {"width", "height", "pixels"}, "frame");
    Bytes px = base64_decode(f.at("pixels").get<std::string>());
    a.payload = encode_frame(ObservationFrame(f.at("width").get<std::uint32_t>(), f.at("height").get<std::uint32_t>(),
                                              std::move(px)));
  } else {
    a.payload = base64_decode(j.at("data").get<std::string>());
  }
  return a;
}

json signal_to_json(const InteractionSignal& s) {
  if (const auto* tok = std::get_if<std::string>(&s)) return *tok;
  const auto& c = std::get<ControlSignal>(s);
  return json{{"control", c.name}, {"value", c.value}};
}

InteractionSignal signal_from_json(const json& j) {
  if (j.is_string()) return expand_action_alias(j.get<std::string>());
  require_known_fields(j, {"control", "value"}, "control signal");
  return ControlSignal{j.at("control").get<std::string>(), j.at("value").get<double>()};
}

}  // namespace

void require_known_fields(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::InvalidArgument, "unknown field in " + std::string(what) + ": " + key);
    }
  }
}

json envelope_to_json(const ResultEnvelope& env) {
  json arts = json::array();
  for (const auto& a : env.artifacts) arts.push_back(artifact_to_json(a));
  return json{{"session_id", env.session_id}, {"turn", env.turn},         {"task", env.task},
              {"artifacts", arts},            {"metadata", env.metadata}, {"memory_refs", env.memory_refs},
              {"terminal", env.terminal}};
}

ResultEnvelope envelope_from_json(const json& j) {
  return guarded("envelope", [&] {
    require_known_fields(j, {"session_id", "turn", "task", "artifacts", "metadata", "memory_refs", "terminal"},
                         "envelope");
    ResultEnvelope env;
    env.session_id = j.at("session_id").get<std::string>();
    env.turn = j.at("turn").get<std::uint64_t>();
    env.task = j.at("task").get<std::string>();
    for (const auto& a : j.at("artifacts")) env.artifacts.push_back(artifact_from_json(a));
    env.metadata = j.at("metadata").get<Metadata>();
    env.memory_refs = j.at("memory_refs").get<std::vector<std::string>>();
    env.terminal = j.at("terminal").get<bool>();
    return env;
  });
}

ResultEnvelope strip_volatile(ResultEnvelope env) {
  std::erase_if(env.metadata, [](const auto& kv) { return is_volatile_key(kv.first); });
  return env;
}

std::string envelope_digest(const ResultEnvelope& env) {
  return to_hex64(fnv1a64(envelope_to_json(strip_volatile(env)).dump()));
}

json config_to_json(const PipelineConfig& c) {
  json backends = json::object();
  for (const auto& [kind, d] : c.backends) {
    json b{{"source", d.source == BackendSource::Hosted ? "hosted" : "local"}};
    if (!d.weights_path.empty()) b["weights"] = d.weights_path;
    if (!d.endpoint.empty()) b["endpoint"] = d.endpoint;
    if (d.credentials) {
      b["api_key"] = d.credentials->api_key;
      if (!d.credentials->endpoint.empty()) b["endpoint"] = d.credentials->endpoint;
    }
    backends[std::string(to_string(kind))] = b;
  }
  json controls = json::object();
  for (const auto& [name, r] : c.interaction_template.continuous_controls) controls[name] = {r.min, r.max};
  json j{{"task", c.task},
         {"map", c.map_text},
         {"kernel",
          {{"p_slip", c.kernel.p_slip},
           {"step_cost", c.kernel.step_cost},
           {"goal_reward", c.kernel.goal_reward},
           {"window_radius", c.kernel.window_radius}}},
         {"memory",
          {{"capacity", c.memory.capacity},
           {"alpha", c.memory.alpha},
           {"lambda", c.memory.lambda},
           {"theta", c.memory.theta}}},
         {"backends", backends},
         {"template", {{"tokens", c.interaction_template.tokens}, {"controls", controls}}},
         {"context_k", c.context_k}};
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

PipelineConfig config_from_json(const json& j, const std::string& base_dir) {
  return guarded("config", [&] {
    require_known_fields(j, {"task", "map", "map_file", "seed", "kernel", "memory", "backends", "template", "context_k"},
                         "config");
    PipelineConfig c;
    if (j.contains("task")) c.task = j.at("task").get<std::string>();
    if (j.contains("map") && j.contains("map_file")) {
      throw Error(ErrorKind::InvalidArgument, "config: give either map or map_file");
    }
    if (j.contains("map")) c.map_text = j.at("map").get<std::string>();
    if (j.contains("map_file")) {
      std::filesystem::path p = j.at("map_file").get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      std::ifstream in(p);
      if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open map file: " + p.string());
      std::stringstream ss;
      ss << in.rdbuf();
      c.map_text = ss.str();
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("kernel")) {
      const json& k = j.at("kernel");
      require_known_fields(k, {"p_slip", "step_cost", "goal_reward", "window_radius"}, "kernel");
      c.kernel.p_slip = k.value("p_slip", c.kernel.p_slip);
      c.kernel.step_cost = k.value("step_cost", c.kernel.step_cost);
      c.kernel.goal_reward = k.value("goal_reward", c.kernel.goal_reward);
      c.kernel.window_radius = k.value("window_radius", c.kernel.window_radius);
    }
    if (j.contains("memory")) {
      const json& m = j.at("memory");
      require_known_fields(m, {"capacity", "alpha", "lambda", "theta"}, "memory");
      c.memory.capacity = m.value("capacity", c.memory.capacity);
      c.memory.alpha = m.value("alpha", c.memory.alpha);
      c.memory.lambda = m.value("lambda", c.memory.lambda);
      c.memory.theta = m.value("theta", c.memory.theta);
    }
    if (j.contains("backends")) {
      for (const auto& [name, b] : j.at("backends").items()) {
        require_known_fields(b, {"source", "weights", "endpoint", "api_key"}, "backend");
        BackendDescriptor d;
        d.kind = backend_kind_from_string(name);
        const std::string source = b.value("source", "local");
        if (source == "local") d.source = BackendSource::Local;
        else if (source == "hosted") d.source = BackendSource::Hosted;
        else throw Error(ErrorKind::InvalidArgument, "unknown backend source: " + source);
        d.weights_path = b.value("weights", "");
        d.endpoint = b.value("endpoint", "");
        if (b.contains("api_key")) d.credentials = Credentials{b.at("api_key").get<std::string>(), d.endpoint};
        c.backends[d.kind] = d;
      }
    }
    if (j.contains("template")) {
      const json& t = j.at("template");
      require_known_fields(t, {"tokens", "controls"}, "template");
      InteractionTemplate tmpl;
      tmpl.tokens = t.at("tokens").get<std::vector<std::string>>();
      if (t.contains("controls")) {
        for (const auto& [name, range] : t.at("controls").items()) {
          auto r = range.get<std::vector<double>>();
          if (r.size() != 2) throw Error(ErrorKind::InvalidArgument, "control range must be [min, max]");
          tmpl.continuous_controls[name] = {r[0], r[1]};
        }
      }
      c.interaction_template = tmpl;
    }
    if (j.contains("context_k")) c.context_k = j.at("context_k").get<std::size_t>();
    c.validate();
    GridMap::parse(c.map_text);
    return c;
  });
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open config file: " + path);
  json j = guarded("config file", [&] { return json::parse(in); });
  return config_from_json(j, std::filesystem::path(path).parent_path().string());
}

json turn_input_to_json(const TurnInput& in) {
  json j = json::object();
  json actions = json::array();
  for (const auto& s : in.actions) actions.push_back(signal_to_json(s));
  j["actions"] = actions;
  if (in.query) j["query"] = *in.query;
  if (in.query_kind) j["kind"] = std::string(to_string(*in.query_kind));
  if (in.task) j["task"] = *in.task;
  json controls = json::object();
  const auto& c = in.controls;
  if (c.resolution_scale) controls["resolution_scale"] = *c.resolution_scale;
  if (c.frame_budget) controls["frame_budget"] = *c.frame_budget;
  if (c.duration_s) controls["duration_s"] = *c.duration_s;
  if (c.seed) controls["seed"] = *c.seed;
  if (c.guidance) controls["guidance"] = *c.guidance;
  if (c.sampling_steps) controls["sampling_steps"] = *c.sampling_steps;
  if (!controls.empty()) j["controls"] = controls;
  if (in.observation) {
    j["observation"] = {{"width", in.observation->width()},
                        {"height", in.observation->height()},
                        {"pixels", base64_encode(in.observation->pixels())}};
  }
  if (in.close) j["close"] = true;
  return j;
}

TurnInput turn_input_from_json(const json& j) {
  return guarded("step body", [&] {
    require_known_fields(j, {"actions", "query", "kind", "task", "controls", "observation", "close"}, "step body");
    TurnInput in;
    if (j.contains("actions")) {
      for (const auto& a : j.at("actions")) in.actions.push_back(signal_from_json(a));
    }
    if (j.contains("query")) in.query = j.at("query").get<std::string>();
    if (j.contains("kind")) in.query_kind = reasoning_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("task")) in.task = j.at("task").get<std::string>();
    if (j.contains("controls")) {
      const json& c = j.at("controls");
      require_known_fields(c, {"resolution_scale", "frame_budget", "duration_s", "seed", "guidance", "sampling_steps"},
                           "controls");
      auto& o = in.controls;
      if (c.contains("resolution_scale")) o.resolution_scale = c.at("resolution_scale").get<std::uint32_t>();
      if (c.contains("frame_budget")) o.frame_budget = c.at("frame_budget").get<std::uint32_t>();
      if (c.contains("duration_s")) o.duration_s = c.at("duration_s").get<double>();
      if (c.contains("seed")) o.seed = c.at("seed").get<std::uint64_t>();
      if (c.contains("guidance")) o.guidance = c.at("guidance").get<double>();
      if (c.contains("sampling_steps")) o.sampling_steps = c.at("sampling_steps").get<std::uint32_t>();
    }
    if (j.contains("observation")) {
      const json& f = j.at("observation");
      require_known_fields(f, {"width", "height", "pixels"}, "observation");
      in.observation = ObservationFrame(f.at("width").get<std::uint32_t>(), f.at("height").get<std::uint32_t>(),
                                        base64_decode(f.at("pixels").get<std::string>()));
    }
    if (j.contains("close")) in.close = j.at("close").get<bool>();
    return in;
  });
}

json depth_to_json(const DepthMap& depth, const DepthCamera& camera, const DepthQuery& q) {
  return json{{"rays", depth.rays},
              {"fov", depth.fov},
              {"depths", depth.depths},
              {"camera", {{"x", camera.x}, {"y", camera.y}, {"yaw", camera.yaw}}},
              {"polar", q.polar},
              {"azimuth", q.azimuth}};
}

json record_to_json(const MemoryRecord& r) {
  return json{{"id", r.id},
              {"step", r.step},
              {"modality", std::string(to_string(r.modality))},
              {"payload_digest", r.payload_digest},
              {"metadata", r.metadata},
              {"weight", r.weight},
              {"pinned", r.pinned}};
}

}  // namespace worldkit::wire
