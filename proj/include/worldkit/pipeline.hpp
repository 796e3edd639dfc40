#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "worldkit/core.hpp"
#include "worldkit/memory.hpp"
#include "worldkit/operator.hpp"
#include "worldkit/reasoning.hpp"
#include "worldkit/representation.hpp"
#include "worldkit/synthesis.hpp"
#include "worldkit/world_kernel.hpp"

namespace worldkit {

enum class Task { Navigate, Reconstruct, Act, Reason, Sonify };

std::string_view to_string(Task t);
// Throws InvalidArgument for tasks without a route.
Task task_from_string(std::string_view s);

struct PipelineConfig {
  std::string task = "navigate";
  std::string map_text{kDemoMap};
  KernelConfig kernel;
  MemoryConfig memory;
  std::map<BackendKind, BackendDescriptor> backends;  // missing kinds default to local
  std::optional<std::uint64_t> seed;
  InteractionTemplate interaction_template = InteractionTemplate::default_template();
  std::size_t context_k = 4;

  void validate() const;
};

struct ControlOverrides {
  std::optional<std::uint32_t> resolution_scale;
  std::optional<std::uint32_t> frame_budget;
  std::optional<double> duration_s;
  std::optional<std::uint64_t> seed;
  std::optional<double> guidance;
  std::optional<std::uint32_t> sampling_steps;
};

struct TurnInput {
  std::vector<InteractionSignal> actions;
  std::optional<std::string> query;
  std::optional<ReasoningKind> query_kind;
  std::optional<std::string> task;  // overrides the configured route for this turn
  ControlOverrides controls;
  std::optional<ObservationFrame> observation;
  bool close = false;
};

using DispatchResult = std::variant<SynthesisArtifact, ReasoningAnswer, RepresentationOutput>;

/// One pipeline instance serves one session: it owns the operator, kernel
/// state, memory namespace and occupancy grid, and runs one turn at a time.
class Pipeline {
 public:
  // Empty session_id derives a stable id from the config.
  static std::unique_ptr<Pipeline> build(const PipelineConfig& config, std::string session_id = {});

  const std::string& session_id() const { return session_id_; }
  const PipelineConfig& config() const { return config_; }
  const GridMap& map() const { return *map_; }
  const WorldState& state() const { return state_; }
  std::uint64_t turn() const { return turn_; }
  const OccupancyGrid& grid() const { return grid_; }
  const MemoryStore& memory() const { return memory_; }
  MemoryStore& memory() { return memory_; }
  double cumulative_reward() const { return cumulative_reward_; }
  const CameraAngles& camera() const { return camera_; }
  bool is_open() const { return open_; }
  void close() { open_ = false; }
  const StubTransport& transport() const { return *transport_; }

  /// Runs one validate -> select -> dispatch -> record cycle. Operator
  /// rejections throw Error(Rejected) and leave the session untouched;
  /// backend failures come back as error envelopes without advancing the turn.
  ResultEnvelope call_once(const TurnInput& input);

  // Like call_once but operator rejections also become error envelopes.
  ResultEnvelope step(const TurnInput& input);

  using Source = std::function<std::optional<TurnInput>()>;
  using Sink = std::function<void(const ResultEnvelope&)>;

  // Pulls inputs until the source is exhausted, a close signal arrives or a
  // terminal envelope has been emitted. Returns the number of envelopes.
  std::size_t stream(const Source& source, const Sink& sink);

  // Routes to the task's backend; never mutates session state.
  DispatchResult dispatch(Task task, const ProcessedInteraction& processed, const TurnInput& input) const;

  ObservationFrame current_observation() const { return observe(state_, config_.kernel, *map_); }

 private:
  Pipeline() = default;

  ResultEnvelope error_envelope(const std::string& task, const Error& e, const std::string& backend) const;
  SynthesisRequest make_request(const ProcessedInteraction& processed, const TurnInput& input) const;
  std::uint64_t turn_seed() const;

  PipelineConfig config_;
  std::string session_id_;
  std::shared_ptr<const GridMap> map_;
  std::unique_ptr<Operator> operator_;
  MemoryStore memory_;
  std::map<BackendKind, std::shared_ptr<const SynthesisBackend>> backends_;
  std::shared_ptr<StubTransport> transport_;
  WorldState state_;
  std::uint64_t turn_ = 0;
  OccupancyGrid grid_;
  double cumulative_reward_ = 0.0;
  std::optional<double> last_reward_;
  std::optional<Waveform> last_waveform_;
  CameraAngles camera_;
  bool open_ = true;
};

// Short aliases accepted on the command line: F B L R TL TR.
std::string expand_action_alias(std::string_view token);
std::vector<InteractionSignal> parse_action_list(std::string_view csv);

}  // namespace worldkit
