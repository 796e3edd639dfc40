#include "worldkit/reasoning.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <queue>
#include <regex>

#include "worldkit/kernels.hpp"

namespace worldkit {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Cell distances from (x, y) with 4-neighbour moves; -1 when unreachable.
std::vector<int> cell_distances(const GridMap& map, int x, int y) {
  std::vector<int> dist(static_cast<std::size_t>(map.width() * map.height()), -1);
  std::queue<Offset> q;
  dist[static_cast<std::size_t>(y * map.width() + x)] = 0;
  q.push({x, y});
  while (!q.empty()) {
    Offset c = q.front();
    q.pop();
    const int d = dist[static_cast<std::size_t>(c.dy * map.width() + c.dx)];
    for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
      Offset v = heading_vector(h);
      int nx = c.dx + v.dx, ny = c.dy + v.dy;
      if (map.at_or_wall(nx, ny) == Cell::Wall) continue;
      auto& slot = dist[static_cast<std::size_t>(ny * map.width() + nx)];
      if (slot >= 0) continue;
      slot = d + 1;
      q.push({nx, ny});
    }
  }
  return dist;
}

struct NearestGoal {
  Offset cell;
  int distance;
};

NearestGoal nearest_goal(const GridMap& map, const WorldState& s) {
  const auto goals = map.goals();
  if (goals.empty()) throw Error(ErrorKind::InvalidArgument, "no Goal on map");
  const auto dist = cell_distances(map, s.pose.x, s.pose.y);
  std::optional<NearestGoal> best;
  for (Offset g : goals) {  // row-major, so the first minimum wins ties
    int d = dist[static_cast<std::size_t>(g.dy * map.width() + g.dx)];
    if (d >= 0 && (!best || d < best->distance)) best = NearestGoal{g, d};
  }
  if (!best) throw Error(ErrorKind::Unreachable, "goal unreachable");
  return *best;
}

}  // namespace

std::string_view to_string(ReasoningKind k) {
  switch (k) {
    case ReasoningKind::General: return "general";
    case ReasoningKind::Spatial: return "spatial";
    case ReasoningKind::Audio: return "audio";
  }
  return "?";
}

ReasoningKind reasoning_kind_from_string(std::string_view s) {
  if (s == "general") return ReasoningKind::General;
  if (s == "spatial") return ReasoningKind::Spatial;
  if (s == "audio") return ReasoningKind::Audio;
  throw Error(ErrorKind::InvalidArgument, "unknown reasoning kind: " + std::string(s));
}

std::string relative_direction(const Pose& pose, Offset goal) {
  const Offset fwd = heading_vector(pose.heading);
  const Offset right = heading_vector(turn_cw(pose.heading));
  const int dx = goal.dx - pose.x, dy = goal.dy - pose.y;
  const int f = dx * fwd.dx + dy * fwd.dy;
  const int r = dx * right.dx + dy * right.dy;
  if (f == 0 && r == 0) return "here";
  if (std::abs(f) > std::abs(r)) return f > 0 ? "ahead" : "behind";
  if (std::abs(r) > std::abs(f)) return r > 0 ? "right" : "left";
  // equal magnitude: ahead > right > behind > left
  if (f > 0) return "ahead";
  if (r > 0) return "right";
  return "behind";
}

int wall_count(const GridMap& map, int x, int y, int radius) {
  int n = 0;
  for (int yy = y - radius; yy <= y + radius; ++yy)
    for (int xx = x - radius; xx <= x + radius; ++xx)
      if (map.in_bounds(xx, yy) && map.at(xx, yy) == Cell::Wall) ++n;
  return n;
}

ReasoningAnswer infer_spatial(std::string_view query, const WorldState& state, const GridMap& map) {
  const std::string q = trim(query);
  static const std::regex kWallCount(R"(wall_count(?:\s*\(\s*(?:r\s*=\s*)?(\d+)\s*\)|\s+(\d+))?)");
  std::smatch m;
  ReasoningAnswer ans;
  if (q == "goal_direction") {
    const auto goal = nearest_goal(map, state);
    const std::string dir = relative_direction(state.pose, goal.cell);
    ans.text = dir == "here" ? "the goal is here" : "the goal is " + dir;
    ans.structured = Metadata{{"direction", dir}};
  } else if (std::regex_match(q, m, kWallCount)) {
    const std::string digits = m[1].matched ? m[1].str() : m[2].matched ? m[2].str() : "1";
    const int radius = std::stoi(digits);
    const int n = wall_count(map, state.pose.x, state.pose.y, radius);
    ans.text = std::to_string(n) + " walls within " + std::to_string(radius);
    ans.structured = Metadata{{"wall_count", std::to_string(n)}, {"radius", std::to_string(radius)}};
  } else if (q == "distance_to_goal") {
    const auto goal = nearest_goal(map, state);
    ans.text = std::to_string(goal.distance) + " moves to the goal";
    ans.structured = Metadata{{"distance", std::to_string(goal.distance)}};
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown spatial template: " + q);
  }
  return ans;
}

double dominant_frequency(const Waveform& w, bool parallel) {
  const auto power = parallel ? kernels::parallel::power_spectrum(w.samples, kSpectrumSize)
                             : kernels::serial::power_spectrum(w.samples, kSpectrumSize);
  std::size_t best = 1;
  for (std::size_t k = 2; k < power.size(); ++k)
    if (power[k] > power[best]) best = k;
  return static_cast<double>(best) * w.sample_rate / static_cast<double>(kSpectrumSize);
}

ReasoningAnswer infer_audio(std::string_view /*query*/, const Waveform& waveform) {
  if (waveform.samples.size() < kMinAudioSamples) {
    throw Error(ErrorKind::InvalidArgument, "waveform too short: " + std::to_string(waveform.samples.size()) +
                                                " samples, need " + std::to_string(kMinAudioSamples));
  }
  const double f = dominant_frequency(waveform);
  std::string label = "unknown";
  if (std::abs(f - kStepToneHz) <= kToneBandHz) label = "step";
  else if (std::abs(f - kGoalToneHz) <= kToneBandHz) label = "goal";
  ReasoningAnswer ans;
  ans.text = "event: " + label;
  ans.structured = Metadata{{"event", label}, {"dominant_hz", format_double(f)}};
  return ans;
}

ReasoningAnswer infer_general(std::string_view query, const GeneralContext& ctx, StubTransport* transport) {
  const std::string q = trim(query);
  ReasoningAnswer ans;
  if (q == "pose?" && ctx.state) {
    const Pose& p = ctx.state->pose;
    ans.structured = Metadata{{"x", std::to_string(p.x)}, {"y", std::to_string(p.y)},
                              {"heading", std::string(to_string(p.heading))}};
    ans.text = "at (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") facing " +
               std::string(to_string(p.heading));
    return ans;
  }
  if (q == "step?" && ctx.state) {
    ans.structured = Metadata{{"step", std::to_string(ctx.state->step)}};
    ans.text = "step " + std::to_string(ctx.state->step);
    return ans;
  }
  if (q == "turn?") {
    ans.structured = Metadata{{"turn", std::to_string(ctx.turn)}};
    ans.text = "turn " + std::to_string(ctx.turn);
    return ans;
  }
  if (q == "reward?" && ctx.last_reward) {
    ans.structured = Metadata{{"reward", format_double(*ctx.last_reward)}};
    ans.text = "last reward " + format_double(*ctx.last_reward);
    return ans;
  }
  std::string detail;
  if (transport) {
    try {
      transport->send(Credentials{"", "reasoning"}, q);
    } catch (const Error& e) {
      detail = e.what();
    }
  }
  ans.structured = Metadata{{"status", "unsupported"}};
  if (!detail.empty()) (*ans.structured)["detail"] = detail;
  ans.text = "unsupported query";
  return ans;
}

ReasoningKind classify_query(std::string_view query) {
  const std::string q = trim(query);
  if (q == "goal_direction" || q == "distance_to_goal" || q.rfind("wall_count", 0) == 0) {
    return ReasoningKind::Spatial;
  }
  if (q == "audio?" || q == "event?") return ReasoningKind::Audio;
  return ReasoningKind::General;
}

}  // namespace worldkit
