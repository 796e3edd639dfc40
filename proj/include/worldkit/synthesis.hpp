#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "worldkit/core.hpp"
#include "worldkit/world_kernel.hpp"

namespace worldkit {

struct SynthesisControls {
  std::uint32_t resolution_scale = 1;
  std::uint32_t frame_budget = 1;
  double duration_s = 0.25;
  std::uint64_t seed = 0;
  double guidance = 1.0;
  std::uint32_t sampling_steps = 1;

  void validate() const;
};

struct SynthesisRequest {
  std::vector<int> action_ids;
  std::optional<std::string> text;
  WorldState state;
  std::shared_ptr<const GridMap> map;
  KernelConfig kernel;
  SynthesisControls controls;
};

struct SynthesisArtifact {
  std::vector<Artifact> payloads;
  Metadata metadata;
  // Kernel states and rewards per executed step (visual backend only).
  std::vector<WorldState> states;
  std::vector<double> rewards;
};

enum class BackendKind { Visual, Audio, Action };
enum class BackendSource { Local, Hosted };

std::string_view to_string(BackendKind k);
BackendKind backend_kind_from_string(std::string_view s);

struct Credentials {
  std::string api_key;
  std::string endpoint;
};

struct BackendDescriptor {
  BackendKind kind = BackendKind::Visual;
  BackendSource source = BackendSource::Local;
  std::string weights_path;  // ignored by the reference backends
  std::string endpoint;
  std::optional<Credentials> credentials;
};

class SynthesisBackend {
 public:
  virtual ~SynthesisBackend() = default;
  virtual std::string id() const = 0;
  virtual BackendKind kind() const = 0;
  virtual SynthesisArtifact predict(const SynthesisRequest& request) const = 0;
};

/// Records outbound requests and answers every call with the same canned
/// error. Stands in for cloud services.
class StubTransport {
 public:
  struct Call {
    std::string endpoint;
    std::string api_key;
    std::string body;
  };

  // Throws Error(Backend) after recording the call.
  [[noreturn]] void send(const Credentials& creds, const std::string& body);
  std::vector<Call> calls() const;

  static constexpr std::string_view kCannedError = "hosted transport unavailable";

 private:
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

// Throws InvalidArgument for hosted descriptors without credentials.
std::shared_ptr<const SynthesisBackend> load_backend(const BackendDescriptor& descriptor,
                                                     std::shared_ptr<StubTransport> transport = nullptr);

/// Rolls the kernel forward over min(frame_budget, #actions) actions (stopping
/// at terminal), pads to frame_budget with the last frame and upscales each
/// frame by pixel replication.
SynthesisArtifact predict_visual(const SynthesisRequest& request);
SynthesisArtifact predict_audio(const SynthesisRequest& request);
SynthesisArtifact predict_action(const SynthesisRequest& request);

ObservationFrame upscale(const ObservationFrame& frame, std::uint32_t scale);

inline constexpr std::uint32_t kSampleRate = 16000;
inline constexpr double kToneAmplitude = 0.5;
inline constexpr double kStepToneHz = 440.0;
inline constexpr double kGoalToneHz = 880.0;

struct Waveform {
  std::uint32_t sample_rate = kSampleRate;
  std::vector<float> samples;
  bool operator==(const Waveform&) const = default;
};

Waveform synthesize_tone(double frequency_hz, double duration_s);
// Throws InvalidArgument for events other than "step" / "goal".
double event_frequency(std::string_view event);

// BE u32 sample rate, BE u32 count, BE float32 samples.
Bytes encode_waveform(const Waveform& w);
Waveform decode_waveform(std::span<const std::uint8_t> bytes);

/// Breadth-first search over (x, y, heading) with the six template actions
/// under slip-free dynamics. Empty when already on a goal; nullopt when no
/// goal is reachable.
std::optional<std::vector<int>> plan_shortest(const GridMap& map, const WorldState& start);

std::string action_token(int id);
std::string join_tokens(const std::vector<int>& ids);

}  // namespace worldkit
