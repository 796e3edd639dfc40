#pragma once

#include <memory>
#include <optional>
#include <string>

#include "worldkit/core.hpp"
#include "worldkit/synthesis.hpp"
#include "worldkit/world_kernel.hpp"

namespace worldkit {

enum class ReasoningKind { General, Spatial, Audio };

std::string_view to_string(ReasoningKind k);
ReasoningKind reasoning_kind_from_string(std::string_view s);

struct ReasoningAnswer {
  std::string text;
  std::optional<Metadata> structured;
};

/// Templates: goal_direction | wall_count(r=N) | distance_to_goal.
ReasoningAnswer infer_spatial(std::string_view query, const WorldState& state, const GridMap& map);

// Direction of `goal` relative to an agent at `pose`: ahead/right/behind/left,
// or "here" for a zero offset.
std::string relative_direction(const Pose& pose, Offset goal);
int wall_count(const GridMap& map, int x, int y, int radius);

/// Dominant frequency via the 4096-point power spectrum peak (bin 0 skipped).
double dominant_frequency(const Waveform& w, bool parallel = true);

inline constexpr std::size_t kSpectrumSize = 4096;
inline constexpr std::size_t kMinAudioSamples = 256;
inline constexpr double kToneBandHz = 20.0;

// "step" within 20 Hz of 440, "goal" within 20 Hz of 880, else "unknown".
ReasoningAnswer infer_audio(std::string_view query, const Waveform& waveform);

struct GeneralContext {
  std::optional<WorldState> state;
  std::uint64_t turn = 0;
  std::optional<double> last_reward;
};

/// Answers session-introspection templates ("pose?", "step?", "reward?",
/// "turn?") from context; anything else goes to the hosted stub and comes
/// back {"status":"unsupported"}.
ReasoningAnswer infer_general(std::string_view query, const GeneralContext& context,
                              StubTransport* transport = nullptr);

// Picks spatial / general by template when the caller does not say.
ReasoningKind classify_query(std::string_view query);

}  // namespace worldkit
