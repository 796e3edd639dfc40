#include "worldkit/pipeline.hpp"

#include <chrono>
#include <sstream>

namespace worldkit {

namespace {

std::string pose_text(const Pose& p) {
  return std::to_string(p.x) + "," + std::to_string(p.y) + "," + std::string(to_string(p.heading));
}

std::string now_ms() {
  using namespace std::chrono;
  return std::to_string(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

BackendKind backend_for(Task t) {
  switch (t) {
    case Task::Act: return BackendKind::Action;
    case Task::Sonify: return BackendKind::Audio;
    default: return BackendKind::Visual;
  }
}

}  // namespace

std::string_view to_string(Task t) {
  switch (t) {
    case Task::Navigate: return "navigate";
    case Task::Reconstruct: return "reconstruct";
    case Task::Act: return "act";
    case Task::Reason: return "reason";
    case Task::Sonify: return "sonify";
  }
  return "?";
}

Task task_from_string(std::string_view s) {
  for (Task t : {Task::Navigate, Task::Reconstruct, Task::Act, Task::Reason, Task::Sonify}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown task: " + std::string(s));
}

void PipelineConfig::validate() const {
  task_from_string(task);
  if (!seed) throw Error(ErrorKind::InvalidArgument, "seed is mandatory");
  kernel.validate();
  memory.validate();
  interaction_template.validate();
  if (context_k == 0) throw Error(ErrorKind::InvalidArgument, "context_k must be >= 1");
}

std::string expand_action_alias(std::string_view token) {
  if (token == "F") return "move_forward";
  if (token == "B") return "move_backward";
  if (token == "L") return "move_left";
  if (token == "R") return "move_right";
  if (token == "TL") return "turn_left";
  if (token == "TR") return "turn_right";
  return std::string(token);
}

std::vector<InteractionSignal> parse_action_list(std::string_view csv) {
  std::vector<InteractionSignal> out;
  std::stringstream ss{std::string(csv)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(ControlSignal{item.substr(0, eq), parse_double(item.substr(eq + 1))});
    } else {
      out.emplace_back(expand_action_alias(item));
    }
  }
  return out;
}

std::unique_ptr<Pipeline> Pipeline::build(const PipelineConfig& config, std::string session_id) {
  config.validate();
  std::unique_ptr<Pipeline> p(new Pipeline());
  p->config_ = config;
  p->map_ = std::make_shared<const GridMap>(GridMap::parse(config.map_text));
  p->operator_ = std::make_unique<Operator>(config.interaction_template);
  p->memory_ = MemoryStore(config.memory);
  p->transport_ = std::make_shared<StubTransport>();
  for (BackendKind k : {BackendKind::Visual, BackendKind::Audio, BackendKind::Action}) {
    BackendDescriptor d;
    d.kind = k;
    if (auto it = config.backends.find(k); it != config.backends.end()) d = it->second;
    if (d.kind != k) throw Error(ErrorKind::InvalidArgument, "backend descriptor kind mismatch");
    p->backends_[k] = load_backend(d, p->transport_);
  }
  if (session_id.empty()) {
    const std::string basis = config.task + "|" + std::to_string(*config.seed) + "|" + config.map_text;
    session_id = "s-" + to_hex64(fnv1a64(basis));
  }
  p->session_id_ = std::move(session_id);
  p->memory_.create_session(p->session_id_);
  p->state_ = initial_state(*p->map_);
  p->grid_ = OccupancyGrid(p->map_->width(), p->map_->height());
  return p;
}

std::uint64_t Pipeline::turn_seed() const { return splitmix64(*config_.seed ^ splitmix64(turn_)); }

SynthesisRequest Pipeline::make_request(const ProcessedInteraction& processed, const TurnInput& input) const {
  SynthesisRequest req;
  req.action_ids = processed.action_ids;
  req.text = input.query;
  req.state = state_;
  req.map = map_;
  req.kernel = config_.kernel;
  auto& c = req.controls;
  c.frame_budget = static_cast<std::uint32_t>(std::max<std::size_t>(1, processed.action_ids.size()));
  c.seed = turn_seed();
  const auto& o = input.controls;
  if (o.resolution_scale) c.resolution_scale = *o.resolution_scale;
  if (o.frame_budget) c.frame_budget = *o.frame_budget;
  if (o.duration_s) c.duration_s = *o.duration_s;
  if (o.seed) c.seed = *o.seed;
  if (o.guidance) c.guidance = *o.guidance;
  if (o.sampling_steps) c.sampling_steps = *o.sampling_steps;
  return req;
}

DispatchResult Pipeline::dispatch(Task task, const ProcessedInteraction& processed, const TurnInput& input) const {
  switch (task) {
    case Task::Navigate: return backends_.at(BackendKind::Visual)->predict(make_request(processed, input));
    case Task::Act: {
      SynthesisRequest req = make_request(processed, input);
      if (!req.text) req.text = "reach_goal";
      return backends_.at(BackendKind::Action)->predict(req);
    }
    case Task::Sonify: {
      SynthesisRequest req = make_request(processed, input);
      if (!req.text) req.text = "step";
      return backends_.at(BackendKind::Audio)->predict(req);
    }
    case Task::Reason: {
      if (!input.query) throw Error(ErrorKind::InvalidArgument, "reason task needs a query");
      const ReasoningKind kind = input.query_kind.value_or(classify_query(*input.query));
      switch (kind) {
        case ReasoningKind::Spatial: return infer_spatial(*input.query, state_, *map_);
        case ReasoningKind::Audio:
          if (!last_waveform_) throw Error(ErrorKind::InvalidArgument, "audio query requires a waveform");
          return infer_audio(*input.query, *last_waveform_);
        case ReasoningKind::General:
          return infer_general(*input.query, GeneralContext{state_, turn_, last_reward_}, transport_.get());
      }
      break;
    }
    case Task::Reconstruct: {
      OccupancyGrid g = grid_;
      g.fuse(current_observation(), state_.pose);
      return export_points(g);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unrouted task");
}

ResultEnvelope Pipeline::error_envelope(const std::string& task, const Error& e, const std::string& backend) const {
  ResultEnvelope env;
  env.session_id = session_id_;
  env.turn = turn_;
  env.task = task;
  env.terminal = state_.terminal;
  env.metadata["error"] = e.what();
  if (!backend.empty()) env.metadata["backend"] = backend;
  env.metadata[std::string(kTimestampKey)] = now_ms();
  return env;
}

ResultEnvelope Pipeline::call_once(const TurnInput& input) {
  if (!open_) throw Error(ErrorKind::Gone, "session closed");
  const std::string task_name = input.task.value_or(config_.task);
  const Task task = task_from_string(task_name);

  operator_->get_interaction(input.actions);
  const ProcessedInteraction processed = operator_->process_interaction();
  std::optional<ObservationFrame> perceived;
  if (input.observation) {
    const auto side = static_cast<std::uint32_t>(config_.kernel.window_size());
    try {
      perceived = process_perception(*input.observation, side, side);
    } catch (const Error& e) {
      throw Error(ErrorKind::Rejected, e.what());
    }
  }

  if (state_.terminal) return error_envelope(task_name, Error(ErrorKind::Rejected, "session terminal"), "");

  const SelectQuery query{featurize_frame(perceived ? *perceived : current_observation()),
                          memory_.next_step(session_id_)};
  const auto context = memory_.select(session_id_, query, config_.context_k);

  std::string backend_id;
  if (task == Task::Reason) backend_id = "reasoning";
  else if (task == Task::Reconstruct) backend_id = "occupancy";
  else backend_id = backends_.at(backend_for(task))->id();

  DispatchResult result;
  try {
    result = dispatch(task, processed, input);
  } catch (const Error& e) {
    return error_envelope(task_name, e, backend_id);
  }

  ResultEnvelope env;
  env.session_id = session_id_;
  env.turn = turn_;
  env.task = task_name;
  env.metadata["backend"] = backend_id;
  env.metadata["seed"] = std::to_string(turn_seed());

  for (const auto& c : processed.controls) {
    if (c.name == "polar") camera_.polar = c.value;
    else if (c.name == "azimuth") camera_.azimuth = c.value;
    else if (c.name == "yaw") camera_.yaw = c.value;
  }

  if (auto* art = std::get_if<SynthesisArtifact>(&result)) {
    for (const auto& [k, v] : art->metadata) env.metadata[k] = v;
    env.artifacts = art->payloads;
    if (task == Task::Navigate) {
      double turn_reward = 0.0;
      for (std::size_t i = 0; i < art->states.size(); ++i) {
        const WorldState& s = art->states[i];
        grid_.fuse(observe(s, config_.kernel, *map_), s.pose);
        turn_reward += art->rewards[i];
        last_reward_ = art->rewards[i];
      }
      if (!art->states.empty()) state_ = art->states.back();
      cumulative_reward_ += turn_reward;
      env.metadata["reward"] = format_double(turn_reward);
    } else if (task == Task::Sonify) {
      last_waveform_ = decode_waveform(art->payloads.front().payload);
    }
  } else if (auto* ans = std::get_if<ReasoningAnswer>(&result)) {
    env.artifacts.push_back({Modality::Text, Bytes(ans->text.begin(), ans->text.end())});
    env.metadata["answer"] = ans->text;
    if (ans->structured) {
      for (const auto& [k, v] : *ans->structured) env.metadata["answer." + k] = v;
    }
  } else {
    grid_.fuse(current_observation(), state_.pose);
    const auto out = export_points(grid_);
    const std::string wkpc = write_wkpc(out.points);
    env.artifacts.push_back({Modality::PointCloud, Bytes(wkpc.begin(), wkpc.end())});
    env.metadata["points"] = std::to_string(out.points.size());
    env.metadata["known_cells"] = std::to_string(grid_.known_count());
  }

  env.metadata["cumulative_reward"] = format_double(cumulative_reward_);
  env.metadata["pose"] = pose_text(state_.pose);
  env.metadata["step"] = std::to_string(state_.step);
  env.metadata["camera"] = format_double(camera_.polar) + "," + format_double(camera_.azimuth) + "," +
                           format_double(camera_.yaw);
  env.metadata[std::string(kTimestampKey)] = now_ms();
  env.terminal = state_.terminal;
  for (const auto& r : context) env.memory_refs.push_back(r.id);

  const Metadata base{{"turn", std::to_string(turn_)}, {"task", task_name}};
  Metadata obs_meta = base;
  obs_meta["role"] = "observation";
  memory_.record(session_id_, {Modality::Image, encode_frame(current_observation())}, obs_meta);
  Metadata in_meta = base;
  in_meta["role"] = "input";
  if (!processed.action_ids.empty() || task == Task::Navigate) {
    const std::string tokens = join_tokens(processed.action_ids);
    memory_.record(session_id_, {Modality::Action, Bytes(tokens.begin(), tokens.end())}, in_meta);
  } else {
    const std::string text = input.query.value_or(task_name);
    memory_.record(session_id_, {Modality::Text, Bytes(text.begin(), text.end())}, in_meta);
  }
  memory_.manage(session_id_);

  ++turn_;
  return env;
}

ResultEnvelope Pipeline::step(const TurnInput& input) {
  try {
    return call_once(input);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Gone) throw;
    return error_envelope(input.task.value_or(config_.task), e, "operator");
  }
}

std::size_t Pipeline::stream(const Source& source, const Sink& sink) {
  std::size_t emitted = 0;
  while (open_) {
    std::optional<TurnInput> in = source();
    if (!in) break;
    if (in->close) {
      close();
      break;
    }
    ResultEnvelope env = step(*in);
    sink(env);
    ++emitted;
    if (env.ok() && env.terminal) break;
  }
  return emitted;
}

}  // namespace worldkit
