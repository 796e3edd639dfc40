#include "worldkit/world_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

namespace worldkit {

namespace {

Error map_error(const std::string& msg) { return Error(ErrorKind::InvalidArgument, "map parse: " + msg); }

bool is_move(int action) { return action >= 0 && action <= 3; }

Offset move_offset(Heading h, Action a) {
  switch (a) {
    case Action::MoveForward: return heading_vector(h);
    case Action::MoveBackward: return heading_vector(turn_cw(turn_cw(h)));
    case Action::MoveLeft: return heading_vector(turn_ccw(h));
    case Action::MoveRight: return heading_vector(turn_cw(h));
    default: return {};
  }
}

WorldState advance(const WorldState& s, int x, int y, Heading h, const GridMap& map) {
  WorldState next = s;
  next.pose.x = x;
  next.pose.y = y;
  next.pose.heading = h;
  next.step = s.step + 1;
  next.terminal = map.at(x, y) == Cell::Goal;
  return next;
}

}  // namespace

GridMap GridMap::parse(std::string_view text) { return parse_impl(text, true); }
GridMap GridMap::parse_unchecked(std::string_view text) { return parse_impl(text, false); }

GridMap GridMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open map file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

GridMap GridMap::parse_impl(std::string_view text, bool check_reachable) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.size() < 3) throw map_error("need at least 3 rows");
  GridMap m;
  m.width_ = static_cast<int>(rows.front().size());
  m.height_ = static_cast<int>(rows.size());
  if (m.width_ < 3) throw map_error("need at least 3 columns");
  bool have_start = false;
  for (int y = 0; y < m.height_; ++y) {
    const auto& row = rows[static_cast<std::size_t>(y)];
    if (static_cast<int>(row.size()) != m.width_) {
      throw map_error("row " + std::to_string(y) + " has length " + std::to_string(row.size()) +
                      ", expected " + std::to_string(m.width_));
    }
    for (int x = 0; x < m.width_; ++x) {
      char c = row[static_cast<std::size_t>(x)];
      bool border = x == 0 || y == 0 || x == m.width_ - 1 || y == m.height_ - 1;
      if (border && c != '#') {
        throw map_error("border cell (" + std::to_string(x) + "," + std::to_string(y) + ") is not '#'");
      }
      switch (c) {
        case '#': m.cells_.push_back(Cell::Wall); break;
        case '.': m.cells_.push_back(Cell::Free); break;
        case 'G': m.cells_.push_back(Cell::Goal); break;
        case 'S':
          if (have_start) throw map_error("more than one start cell");
          have_start = true;
          m.start_ = {x, y};
          m.cells_.push_back(Cell::Free);
          break;
        default: throw map_error(std::string("unexpected character '") + c + "'");
      }
    }
  }
  if (!have_start) throw map_error("no start cell 'S'");
  if (check_reachable) {
    if (m.goals().empty()) throw map_error("no goal cell 'G'");
    std::vector<bool> seen(m.cells_.size(), false);
    std::queue<Offset> frontier;
    frontier.push(m.start_);
    seen[static_cast<std::size_t>(m.start_.dy * m.width_ + m.start_.dx)] = true;
    bool found = false;
    while (!frontier.empty() && !found) {
      Offset c = frontier.front();
      frontier.pop();
      if (m.at(c.dx, c.dy) == Cell::Goal) found = true;
      for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
        Offset d = heading_vector(h);
        int nx = c.dx + d.dx, ny = c.dy + d.dy;
        auto idx = static_cast<std::size_t>(ny * m.width_ + nx);
        if (m.at_or_wall(nx, ny) != Cell::Wall && !seen[idx]) {
          seen[idx] = true;
          frontier.push({nx, ny});
        }
      }
    }
    if (!found) throw map_error("no goal reachable from start");
  }
  return m;
}

std::vector<Offset> GridMap::goals() const {
  std::vector<Offset> out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (at(x, y) == Cell::Goal) out.push_back({x, y});
  return out;
}

std::size_t GridMap::count(Cell c) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), c));
}

std::string GridMap::to_text() const {
  std::string out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (start_ == Offset{x, y}) {
        out += 'S';
        continue;
      }
      switch (at(x, y)) {
        case Cell::Wall: out += '#'; break;
        case Cell::Free: out += '.'; break;
        case Cell::Goal: out += 'G'; break;
      }
    }
    out += '\n';
  }
  return out;
}

WorldState initial_state(const GridMap& map) {
  WorldState s;
  s.pose.x = map.start().dx;
  s.pose.y = map.start().dy;
  s.pose.heading = Heading::E;
  return s;
}

void KernelConfig::validate() const {
  if (!(p_slip >= 0.0 && p_slip < 1.0)) throw Error(ErrorKind::InvalidArgument, "p_slip must be in [0,1)");
  if (!std::isfinite(step_cost) || !std::isfinite(goal_reward)) {
    throw Error(ErrorKind::InvalidArgument, "rewards must be finite");
  }
  if (window_radius < 0 || window_radius > 64) {
    throw Error(ErrorKind::InvalidArgument, "window_radius out of range");
  }
}

TransitionDist transition_distribution(const WorldState& s, int action, const KernelConfig& cfg,
                                       const GridMap& map) {
  if (action < 0 || action >= kActionCount) {
    throw Error(ErrorKind::InvalidArgument, "action id out of range: " + std::to_string(action));
  }
  if (s.terminal) throw Error(ErrorKind::Rejected, "session terminal");
  const Heading h = s.pose.heading;
  const auto a = static_cast<Action>(action);
  if (!is_move(action)) {
    Heading nh = a == Action::TurnLeft ? turn_ccw(h) : turn_cw(h);
    return {{advance(s, s.pose.x, s.pose.y, nh, map), 1.0}};
  }
  Offset d = move_offset(h, a);
  int nx = s.pose.x + d.dx, ny = s.pose.y + d.dy;
  WorldState stay = advance(s, s.pose.x, s.pose.y, h, map);
  if (map.at_or_wall(nx, ny) == Cell::Wall) return {{stay, 1.0}};
  WorldState moved = advance(s, nx, ny, h, map);
  if (cfg.p_slip == 0.0) return {{moved, 1.0}};
  return {{moved, 1.0 - cfg.p_slip}, {stay, cfg.p_slip}};
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

WorldState sample_transition(const WorldState& s, int action, const KernelConfig& cfg,
                             const GridMap& map, std::mt19937_64& rng) {
  TransitionDist dist = transition_distribution(s, action, cfg, map);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (const auto& o : dist) {
    acc += o.probability;
    if (u < acc) return o.state;
  }
  return dist.back().state;
}

Offset window_offset(Heading heading, int col, int row, int radius) {
  const Offset fwd = heading_vector(heading);
  const Offset right = heading_vector(turn_cw(heading));
  const int r = col - radius;
  const int f = radius - row;
  return {right.dx * r + fwd.dx * f, right.dy * r + fwd.dy * f};
}

ObservationFrame observe(const WorldState& s, const KernelConfig& cfg, const GridMap& map) {
  const int r = cfg.window_radius;
  const auto n = static_cast<std::uint32_t>(cfg.window_size());
  ObservationFrame frame = ObservationFrame::filled(n, n, kPixelWall);
  for (int row = 0; row < static_cast<int>(n); ++row) {
    for (int col = 0; col < static_cast<int>(n); ++col) {
      Offset o = window_offset(s.pose.heading, col, row, r);
      std::uint8_t v = kPixelWall;
      switch (map.at_or_wall(s.pose.x + o.dx, s.pose.y + o.dy)) {
        case Cell::Wall: v = kPixelWall; break;
        case Cell::Free: v = kPixelFree; break;
        case Cell::Goal: v = kPixelGoal; break;
      }
      frame.set(static_cast<std::uint32_t>(col), static_cast<std::uint32_t>(row), v);
    }
  }
  frame.set(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r), kPixelAgent);
  return frame;
}

double reward(const WorldState& s, int /*action*/, const WorldState& next, const KernelConfig& cfg) {
  return next.terminal && !s.terminal ? cfg.goal_reward : cfg.step_cost;
}

Trajectory rollout(const WorldState& s0, const std::vector<int>& actions, const KernelConfig& cfg,
                   const GridMap& map, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Trajectory traj;
  traj.initial_frame = observe(s0, cfg, map);
  WorldState s = s0;
  for (int a : actions) {
    if (s.terminal) break;
    WorldState next = sample_transition(s, a, cfg, map, rng);
    double r = reward(s, a, next, cfg);
    traj.steps.push_back({a, next, observe(next, cfg, map), r});
    s = next;
  }
  return traj;
}

}  // namespace worldkit
