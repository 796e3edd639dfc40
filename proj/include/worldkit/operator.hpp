#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "worldkit/core.hpp"

namespace worldkit {

struct ControlRange {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const ControlRange&) const = default;
};

struct InteractionTemplate {
  std::vector<std::string> tokens;
  std::map<std::string, ControlRange> continuous_controls;

  // move_forward, move_backward, move_left, move_right, turn_left, turn_right
  // plus polar/azimuth/yaw camera controls.
  static InteractionTemplate default_template();
  // Throws InvalidArgument when tokens are empty or repeated.
  void validate() const;
  std::optional<int> token_id(const std::string& token) const;
};

struct ControlSignal {
  std::string name;
  double value = 0.0;
  bool operator==(const ControlSignal&) const = default;
};

using InteractionSignal = std::variant<std::string, ControlSignal>;

std::string describe(const InteractionSignal& s);

struct ProcessedInteraction {
  std::vector<int> action_ids;
  std::vector<ControlSignal> controls;
};

struct NormalizedInput {
  std::vector<InteractionSignal> actions;
  std::optional<ObservationFrame> observation;
  std::optional<std::string> text;
};

/// Validates interaction signals against a template and accumulates them into
/// a pending batch until process_interaction() consumes it. One per session.
class Operator {
 public:
  explicit Operator(InteractionTemplate tmpl = InteractionTemplate::default_template());

  const InteractionTemplate& interaction_template() const { return template_; }

  // Throws Rejected naming the offending signal.
  void check_interaction(const InteractionSignal& signal) const;

  // All-or-nothing: on failure the pending batch is untouched.
  void get_interaction(const std::vector<InteractionSignal>& signals);

  // Tokens to template-order ids, controls normalized; clears the pending batch.
  ProcessedInteraction process_interaction();

  const std::vector<std::vector<InteractionSignal>>& pending() const { return pending_; }

 private:
  InteractionTemplate template_;
  std::vector<std::vector<InteractionSignal>> pending_;
};

double normalize_control(const std::string& name, double value, const ControlRange& range);

/// Integer block average-pooling down to `target_width` x `target_height`;
/// each output pixel is the rounded mean of its block.
ObservationFrame process_perception(const ObservationFrame& raw, std::uint32_t target_width,
                                    std::uint32_t target_height);

}  // namespace worldkit
