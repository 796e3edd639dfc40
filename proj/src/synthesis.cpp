#include "worldkit/synthesis.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>

#include "worldkit/operator.hpp"

namespace worldkit {

namespace {

using Clock = std::chrono::steady_clock;

std::string elapsed_us(Clock::time_point start) {
  return std::to_string(std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count());
}

std::string pose_text(const Pose& p) {
  return std::to_string(p.x) + "," + std::to_string(p.y) + "," + std::string(to_string(p.heading));
}

void common_metadata(SynthesisArtifact& out, const std::string& backend, const SynthesisControls& c) {
  out.metadata["backend"] = backend;
  out.metadata["seed"] = std::to_string(c.seed);
  out.metadata["guidance"] = format_double(c.guidance);
  out.metadata["sampling_steps"] = std::to_string(c.sampling_steps);
}

void push_be32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

class VisualSynthesizer final : public SynthesisBackend {
 public:
  std::string id() const override { return "gridworld-visual"; }
  BackendKind kind() const override { return BackendKind::Visual; }
  SynthesisArtifact predict(const SynthesisRequest& r) const override { return predict_visual(r); }
};

class AudioSynthesizer final : public SynthesisBackend {
 public:
  std::string id() const override { return "tone-audio"; }
  BackendKind kind() const override { return BackendKind::Audio; }
  SynthesisArtifact predict(const SynthesisRequest& r) const override { return predict_audio(r); }
};

class PlannerPolicy final : public SynthesisBackend {
 public:
  std::string id() const override { return "bfs-action"; }
  BackendKind kind() const override { return BackendKind::Action; }
  SynthesisArtifact predict(const SynthesisRequest& r) const override { return predict_action(r); }
};

class HostedSynthesis final : public SynthesisBackend {
 public:
  HostedSynthesis(BackendKind kind, Credentials creds, std::shared_ptr<StubTransport> transport)
      : kind_(kind), creds_(std::move(creds)), transport_(std::move(transport)) {}

  std::string id() const override { return "hosted-" + std::string(to_string(kind_)); }
  BackendKind kind() const override { return kind_; }
  SynthesisArtifact predict(const SynthesisRequest& r) const override {
    std::string body = "{\"kind\":\"" + std::string(to_string(kind_)) + "\",\"seed\":" +
                       std::to_string(r.controls.seed) + ",\"actions\":\"" + join_tokens(r.action_ids) + "\"}";
    transport_->send(creds_, body);
  }

 private:
  BackendKind kind_;
  Credentials creds_;
  std::shared_ptr<StubTransport> transport_;
};

}  // namespace

void SynthesisControls::validate() const {
  if (resolution_scale < 1 || resolution_scale > 64) {
    throw Error(ErrorKind::InvalidArgument, "resolution_scale must be in [1,64]");
  }
  if (frame_budget < 1) throw Error(ErrorKind::InvalidArgument, "frame_budget must be >= 1");
  if (sampling_steps < 1) throw Error(ErrorKind::InvalidArgument, "sampling_steps must be >= 1");
  if (!std::isfinite(duration_s) || !std::isfinite(guidance)) {
    throw Error(ErrorKind::InvalidArgument, "non-finite synthesis control");
  }
}

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Visual: return "visual";
    case BackendKind::Audio: return "audio";
    case BackendKind::Action: return "action";
  }
  return "?";
}

BackendKind backend_kind_from_string(std::string_view s) {
  if (s == "visual") return BackendKind::Visual;
  if (s == "audio") return BackendKind::Audio;
  if (s == "action") return BackendKind::Action;
  throw Error(ErrorKind::InvalidArgument, "unknown backend kind: " + std::string(s));
}

void StubTransport::send(const Credentials& creds, const std::string& body) {
  {
    std::lock_guard lock(mu_);
    calls_.push_back({creds.endpoint, creds.api_key, body});
  }
  throw Error(ErrorKind::Backend, std::string(kCannedError));
}

std::vector<StubTransport::Call> StubTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::shared_ptr<const SynthesisBackend> load_backend(const BackendDescriptor& d,
                                                     std::shared_ptr<StubTransport> transport) {
  if (d.source == BackendSource::Hosted) {
    if (!d.credentials || d.credentials->api_key.empty()) {
      throw Error(ErrorKind::InvalidArgument,
                  "hosted " + std::string(to_string(d.kind)) + " backend requires credentials");
    }
    Credentials creds = *d.credentials;
    if (creds.endpoint.empty()) creds.endpoint = d.endpoint;
    if (!transport) transport = std::make_shared<StubTransport>();
    return std::make_shared<HostedSynthesis>(d.kind, std::move(creds), std::move(transport));
  }
  switch (d.kind) {
    case BackendKind::Visual: return std::make_shared<VisualSynthesizer>();
    case BackendKind::Audio: return std::make_shared<AudioSynthesizer>();
    case BackendKind::Action: return std::make_shared<PlannerPolicy>();
  }
  throw Error(ErrorKind::InvalidArgument, "unknown backend kind");
}

ObservationFrame upscale(const ObservationFrame& frame, std::uint32_t scale) {
  if (scale == 1) return frame;
  const std::uint32_t w = frame.width() * scale, h = frame.height() * scale;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) px[y * w + x] = frame.at(x / scale, y / scale);
  return ObservationFrame(w, h, std::move(px));
}

SynthesisArtifact predict_visual(const SynthesisRequest& r) {
  const auto start = Clock::now();
  r.controls.validate();
  if (!r.map) throw Error(ErrorKind::InvalidArgument, "visual synthesis needs a map");
  if (r.state.terminal) throw Error(ErrorKind::Rejected, "session terminal");

  std::mt19937_64 rng(r.controls.seed);
  SynthesisArtifact out;
  WorldState s = r.state;
  ObservationFrame last = observe(s, r.kernel, *r.map);
  const std::size_t steps = std::min<std::size_t>(r.controls.frame_budget, r.action_ids.size());
  std::vector<ObservationFrame> frames;
  for (std::size_t i = 0; i < steps && !s.terminal; ++i) {
    const int a = r.action_ids[i];
    WorldState next = sample_transition(s, a, r.kernel, *r.map, rng);
    out.rewards.push_back(reward(s, a, next, r.kernel));
    out.states.push_back(next);
    last = observe(next, r.kernel, *r.map);
    frames.push_back(last);
    s = next;
  }
  while (frames.size() < r.controls.frame_budget) frames.push_back(last);
  for (const auto& f : frames) out.payloads.push_back({Modality::Image, encode_frame(upscale(f, r.controls.resolution_scale))});

  common_metadata(out, "gridworld-visual", r.controls);
  std::string rewards;
  for (double v : out.rewards) rewards += (rewards.empty() ? "" : ",") + format_double(v);
  out.metadata["rewards"] = rewards;
  out.metadata["frames"] = std::to_string(frames.size());
  out.metadata["steps"] = std::to_string(out.states.size());
  out.metadata["resolution_scale"] = std::to_string(r.controls.resolution_scale);
  out.metadata[std::string(kElapsedKey)] = elapsed_us(start);
  return out;
}

double event_frequency(std::string_view event) {
  if (event == "step") return kStepToneHz;
  if (event == "goal") return kGoalToneHz;
  throw Error(ErrorKind::InvalidArgument, "unknown audio event: " + std::string(event));
}

Waveform synthesize_tone(double frequency_hz, double duration_s) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorKind::InvalidArgument, "duration must be > 0");
  }
  Waveform w;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = static_cast<float>(kToneAmplitude * std::sin(2.0 * std::numbers::pi * frequency_hz *
                                                                static_cast<double>(i) / kSampleRate));
  }
  return w;
}

SynthesisArtifact predict_audio(const SynthesisRequest& r) {
  const auto start = Clock::now();
  r.controls.validate();
  const std::string event = r.text.value_or("");
  const double freq = event_frequency(event);
  Waveform w = synthesize_tone(freq, r.controls.duration_s);
  SynthesisArtifact out;
  out.payloads.push_back({Modality::Audio, encode_waveform(w)});
  common_metadata(out, "tone-audio", r.controls);
  out.metadata["event"] = event;
  out.metadata["frequency_hz"] = format_double(freq);
  out.metadata["sample_rate"] = std::to_string(w.sample_rate);
  out.metadata["samples"] = std::to_string(w.samples.size());
  out.metadata[std::string(kElapsedKey)] = elapsed_us(start);
  return out;
}

Bytes encode_waveform(const Waveform& w) {
  Bytes out;
  out.reserve(8 + 4 * w.samples.size());
  push_be32(out, w.sample_rate);
  push_be32(out, static_cast<std::uint32_t>(w.samples.size()));
  for (float f : w.samples) push_be32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Waveform decode_waveform(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw Error(ErrorKind::InvalidArgument, "waveform header truncated");
  Waveform w;
  w.sample_rate = read_be32(bytes, 0);
  const std::uint32_t n = read_be32(bytes, 4);
  if (bytes.size() != 8 + std::size_t{n} * 4) {
    throw Error(ErrorKind::InvalidArgument, "waveform sample count does not match payload");
  }
  w.samples.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) w.samples[i] = std::bit_cast<float>(read_be32(bytes, 8 + 4 * std::size_t{i}));
  return w;
}

std::string action_token(int id) {
  static const auto tokens = InteractionTemplate::default_template().tokens;
  if (id < 0 || id >= static_cast<int>(tokens.size())) throw Error(ErrorKind::InvalidArgument, "bad action id");
  return tokens[static_cast<std::size_t>(id)];
}

std::string join_tokens(const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) out += (out.empty() ? "" : ",") + action_token(id);
  return out;
}

std::optional<std::vector<int>> plan_shortest(const GridMap& map, const WorldState& start) {
  if (map.at(start.pose.x, start.pose.y) == Cell::Goal) return std::vector<int>{};
  KernelConfig exact;
  exact.p_slip = 0.0;
  auto key = [&](const Pose& p) {
    return static_cast<std::size_t>((p.y * map.width() + p.x) * 4 + static_cast<int>(p.heading));
  };
  struct Parent {
    std::size_t from;
    int action;
  };
  std::vector<std::optional<Parent>> parent(static_cast<std::size_t>(map.width() * map.height() * 4));
  std::vector<bool> seen(parent.size(), false);
  WorldState root = start;
  root.terminal = false;
  std::queue<WorldState> frontier;
  frontier.push(root);
  seen[key(root.pose)] = true;
  while (!frontier.empty()) {
    WorldState s = frontier.front();
    frontier.pop();
    for (int a = 0; a < kActionCount; ++a) {
      WorldState next = transition_distribution(s, a, exact, map).front().state;
      const std::size_t k = key(next.pose);
      if (seen[k]) continue;
      seen[k] = true;
      parent[k] = Parent{key(s.pose), a};
      if (next.terminal) {
        std::vector<int> plan;
        std::size_t cur = k;
        while (cur != key(root.pose)) {
          plan.push_back(parent[cur]->action);
          cur = parent[cur]->from;
        }
        return std::vector<int>(plan.rbegin(), plan.rend());
      }
      frontier.push(next);
    }
  }
  return std::nullopt;
}

SynthesisArtifact predict_action(const SynthesisRequest& r) {
  const auto start = Clock::now();
  r.controls.validate();
  if (!r.map) throw Error(ErrorKind::InvalidArgument, "action synthesis needs a map");
  const std::string goal = r.text.value_or("reach_goal");
  if (goal != "reach_goal") throw Error(ErrorKind::InvalidArgument, "unsupported textual goal: " + goal);
  auto plan = plan_shortest(*r.map, r.state);
  if (!plan) throw Error(ErrorKind::Unreachable, "goal unreachable");

  KernelConfig exact = r.kernel;
  exact.p_slip = 0.0;
  WorldState s = r.state;
  s.terminal = r.map->at(s.pose.x, s.pose.y) == Cell::Goal;
  for (int a : *plan) s = transition_distribution(s, a, exact, *r.map).front().state;

  SynthesisArtifact out;
  const std::string tokens = join_tokens(*plan);
  out.payloads.push_back({Modality::Action, Bytes(tokens.begin(), tokens.end())});
  common_metadata(out, "bfs-action", r.controls);
  out.metadata["plan"] = tokens;
  out.metadata["plan_length"] = std::to_string(plan->size());
  out.metadata["expected_pose"] = pose_text(s.pose);
  out.metadata[std::string(kElapsedKey)] = elapsed_us(start);
  return out;
}

}  // namespace worldkit
