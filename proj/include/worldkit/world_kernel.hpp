#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "worldkit/core.hpp"

namespace worldkit {

enum class Cell : std::uint8_t { Free, Wall, Goal };

/// Static gridworld. Border cells are walls, the start cell is free and at
/// least one goal is reachable from the start.
class GridMap {
 public:
  // Text format: '#' wall, '.' free, 'G' goal, 'S' start; one row per line.
  // Throws InvalidArgument with a map-parse message.
  static GridMap parse(std::string_view text);
  static GridMap load(const std::string& path);
  // Skips the goal presence and reachability checks.
  static GridMap parse_unchecked(std::string_view text);

  int width() const { return width_; }
  int height() const { return height_; }
  Offset start() const { return start_; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  Cell at(int x, int y) const { return cells_[static_cast<std::size_t>(y * width_ + x)]; }
  // Out-of-bounds cells read as walls.
  Cell at_or_wall(int x, int y) const { return in_bounds(x, y) ? at(x, y) : Cell::Wall; }
  std::vector<Offset> goals() const;
  std::size_t count(Cell c) const;
  std::string to_text() const;

  bool operator==(const GridMap&) const = default;

 private:
  static GridMap parse_impl(std::string_view text, bool check_reachable);

  int width_ = 0;
  int height_ = 0;
  Offset start_;
  std::vector<Cell> cells_;
};

inline constexpr std::string_view kDemoMap = "#####\n#S..#\n#.#.#\n#..G#\n#####\n";

struct WorldState {
  Pose pose;
  std::uint64_t step = 0;
  bool terminal = false;
  bool operator==(const WorldState&) const = default;
};

WorldState initial_state(const GridMap& map);

struct KernelConfig {
  double p_slip = 0.2;
  double step_cost = -0.01;
  double goal_reward = 1.0;
  int window_radius = 2;

  void validate() const;
  int window_size() const { return 2 * window_radius + 1; }
};

// Action ids follow the default template order.
enum class Action : int {
  MoveForward = 0,
  MoveBackward = 1,
  MoveLeft = 2,
  MoveRight = 3,
  TurnLeft = 4,
  TurnRight = 5,
};
inline constexpr int kActionCount = 6;

struct Outcome {
  WorldState state;
  double probability = 0.0;
};
using TransitionDist = std::vector<Outcome>;

/// Exact p(s' | s, a). Unblocked moves succeed with 1 - p_slip and slip to
/// "stay" with p_slip; blocked moves and turns are deterministic.
TransitionDist transition_distribution(const WorldState& s, int action, const KernelConfig& cfg,
                                       const GridMap& map);

// Portable uniform in [0,1) from one 64-bit draw.
double uniform01(std::mt19937_64& rng);

WorldState sample_transition(const WorldState& s, int action, const KernelConfig& cfg,
                             const GridMap& map, std::mt19937_64& rng);

/// Egocentric (2r+1)^2 window, heading up. Wall 0, Free 255, Goal 170,
/// agent marker 85 at the centre.
ObservationFrame observe(const WorldState& s, const KernelConfig& cfg, const GridMap& map);

inline constexpr std::uint8_t kPixelWall = 0;
inline constexpr std::uint8_t kPixelFree = 255;
inline constexpr std::uint8_t kPixelGoal = 170;
inline constexpr std::uint8_t kPixelAgent = 85;

// World offset of window pixel (col, row) for an agent facing `heading`.
Offset window_offset(Heading heading, int col, int row, int radius);

double reward(const WorldState& s, int action, const WorldState& next, const KernelConfig& cfg);

struct TrajectoryStep {
  int action = 0;
  WorldState state;
  ObservationFrame frame;
  double reward = 0.0;
};

struct Trajectory {
  ObservationFrame initial_frame;
  std::vector<TrajectoryStep> steps;
};

Trajectory rollout(const WorldState& s0, const std::vector<int>& actions, const KernelConfig& cfg,
                   const GridMap& map, std::uint64_t seed);

}  // namespace worldkit
