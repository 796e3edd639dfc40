#include "worldkit/operator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace worldkit {

InteractionTemplate InteractionTemplate::default_template() {
  InteractionTemplate t;
  t.tokens = {"move_forward", "move_backward", "move_left", "move_right", "turn_left", "turn_right"};
  t.continuous_controls = {
      {"polar", {0.0, 180.0}},
      {"azimuth", {-180.0, 180.0}},
      {"yaw", {0.0, 360.0}},
  };
  return t;
}

void InteractionTemplate::validate() const {
  if (tokens.empty()) throw Error(ErrorKind::InvalidArgument, "interaction template has no tokens");
  std::set<std::string> seen;
  for (const auto& t : tokens) {
    if (t.empty()) throw Error(ErrorKind::InvalidArgument, "empty token in interaction template");
    if (!seen.insert(t).second) throw Error(ErrorKind::InvalidArgument, "duplicate token in template: " + t);
  }
  for (const auto& [name, range] : continuous_controls) {
    if (!(range.min < range.max)) throw Error(ErrorKind::InvalidArgument, "bad range for control " + name);
  }
}

std::optional<int> InteractionTemplate::token_id(const std::string& token) const {
  auto it = std::find(tokens.begin(), tokens.end(), token);
  if (it == tokens.end()) return std::nullopt;
  return static_cast<int>(it - tokens.begin());
}

std::string describe(const InteractionSignal& s) {
  if (const auto* tok = std::get_if<std::string>(&s)) return *tok;
  const auto& c = std::get<ControlSignal>(s);
  return c.name + "=" + format_double(c.value);
}

Operator::Operator(InteractionTemplate tmpl) : template_(std::move(tmpl)) { template_.validate(); }

void Operator::check_interaction(const InteractionSignal& signal) const {
  if (const auto* tok = std::get_if<std::string>(&signal)) {
    if (!template_.token_id(*tok)) throw Error(ErrorKind::Rejected, *tok + " not in template");
    return;
  }
  const auto& c = std::get<ControlSignal>(signal);
  if (!template_.continuous_controls.contains(c.name)) {
    throw Error(ErrorKind::Rejected, c.name + " not in template");
  }
  if (!std::isfinite(c.value)) throw Error(ErrorKind::Rejected, "non-finite value for control " + c.name);
}

void Operator::get_interaction(const std::vector<InteractionSignal>& signals) {
  for (const auto& s : signals) check_interaction(s);
  pending_.push_back(signals);
}

double normalize_control(const std::string& name, double value, const ControlRange& range) {
  if (name == "polar") return clamp_polar(value);
  if (name == "azimuth") return wrap_azimuth(value);
  if (name == "yaw") return wrap_yaw(value);
  return std::clamp(value, range.min, range.max);
}

ProcessedInteraction Operator::process_interaction() {
  ProcessedInteraction out;
  for (const auto& batch : pending_) {
    for (const auto& s : batch) {
      if (const auto* tok = std::get_if<std::string>(&s)) {
        out.action_ids.push_back(*template_.token_id(*tok));
      } else {
        const auto& c = std::get<ControlSignal>(s);
        out.controls.push_back(
            {c.name, normalize_control(c.name, c.value, template_.continuous_controls.at(c.name))});
      }
    }
  }
  pending_.clear();
  return out;
}

ObservationFrame process_perception(const ObservationFrame& raw, std::uint32_t target_width,
                                    std::uint32_t target_height) {
  if (target_width == 0 || target_height == 0 || raw.width() == 0 || raw.height() == 0) {
    throw Error(ErrorKind::InvalidArgument, "zero frame dimension");
  }
  if (raw.width() % target_width != 0 || raw.height() % target_height != 0) {
    throw Error(ErrorKind::InvalidArgument, "non-integer scale factor from " + std::to_string(raw.width()) +
                                                "x" + std::to_string(raw.height()) + " to " +
                                                std::to_string(target_width) + "x" +
                                                std::to_string(target_height));
  }
  const std::uint32_t bw = raw.width() / target_width;
  const std::uint32_t bh = raw.height() / target_height;
  const std::uint64_t area = std::uint64_t{bw} * bh;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(target_width) * target_height);
  for (std::uint32_t ty = 0; ty < target_height; ++ty) {
    for (std::uint32_t tx = 0; tx < target_width; ++tx) {
      std::uint64_t sum = 0;
      for (std::uint32_t y = ty * bh; y < (ty + 1) * bh; ++y)
        for (std::uint32_t x = tx * bw; x < (tx + 1) * bw; ++x) sum += raw.at(x, y);
      // round half up in integer arithmetic
      out[ty * target_width + tx] = static_cast<std::uint8_t>((2 * sum + area) / (2 * area));
    }
  }
  return ObservationFrame(target_width, target_height, std::move(out));
}

}  // namespace worldkit
