#pragma once

// JSON forms of the core types, shared by the service, the CLI and the
// session log. Decoders reject unknown fields.

#include <optional>
#include <string>

#include <json.hpp>

#include "worldkit/core.hpp"
#include "worldkit/pipeline.hpp"
#include "worldkit/representation.hpp"

namespace worldkit::wire {

using nlohmann::json;

json envelope_to_json(const ResultEnvelope& env);
ResultEnvelope envelope_from_json(const json& j);

// Digest over the canonical JSON of the envelope minus volatile metadata.
std::string envelope_digest(const ResultEnvelope& env);
ResultEnvelope strip_volatile(ResultEnvelope env);

json config_to_json(const PipelineConfig& config);
// `base_dir` resolves a relative "map_file".
PipelineConfig config_from_json(const json& j, const std::string& base_dir = ".");
PipelineConfig load_config_file(const std::string& path);

json turn_input_to_json(const TurnInput& input);
TurnInput turn_input_from_json(const json& j);

struct DepthQuery {
  std::optional<double> yaw;  // defaults to the agent heading
  int rays = 64;
  double fov = 90.0;
  double polar = 90.0;
  double azimuth = 0.0;
};

json depth_to_json(const DepthMap& depth, const DepthCamera& camera, const DepthQuery& query);

json record_to_json(const MemoryRecord& r);

// Throws InvalidArgument naming the first key outside `allowed`.
void require_known_fields(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what);

}  // namespace worldkit::wire
