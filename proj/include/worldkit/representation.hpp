#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "worldkit/core.hpp"
#include "worldkit/world_kernel.hpp"

namespace worldkit {

enum class Occupancy : std::uint8_t { Unknown, Free, Wall, Goal };

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height);
  // Every cell known, matching the map; no pose history.
  static OccupancyGrid from_map(const GridMap& map);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  Occupancy at(int x, int y) const { return cells_[index(x, y)]; }
  std::uint32_t observed_count(int x, int y) const { return counts_[index(x, y)]; }
  std::size_t known_count() const;
  const std::vector<Pose>& pose_history() const { return poses_; }

  // Sets a single cell; throws Corruption if it would change a known class.
  void set(int x, int y, Occupancy value);

  /// Inverts the egocentric window mapping of `frame` taken at `pose` and
  /// writes the classes into world cells. The agent marker is skipped and
  /// out-of-grid cells are ignored. Atomic: a conflicting write throws
  /// Corruption and leaves the grid unchanged.
  void fuse(const ObservationFrame& frame, const Pose& pose);

  bool operator==(const OccupancyGrid&) const = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y * width_ + x); }

  int width_ = 0;
  int height_ = 0;
  std::vector<Occupancy> cells_;
  std::vector<std::uint32_t> counts_;
  std::vector<Pose> poses_;
};

OccupancyGrid fuse_observation(OccupancyGrid grid, const ObservationFrame& frame, const Pose& pose);

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Point3&) const = default;
};

struct DepthMap {
  int rays = 0;
  double fov = 0.0;
  std::vector<double> depths;  // kNoHit (-1) when nothing was hit
};

struct RepresentationOutput {
  std::vector<Point3> points;
  std::optional<DepthMap> depth;
  std::vector<Pose> poses;
  std::vector<bool> known_mask;  // row-major
};

// One point per known Wall cell at its unit-cube centre, row-major order.
RepresentationOutput export_points(const OccupancyGrid& grid);

struct DepthCamera {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // degrees, 0 = north, 90 = east
};

/// Raycast depth image; Unknown cells are treated as free space.
DepthMap render_depth(const OccupancyGrid& grid, const DepthCamera& camera, int rays, double fov,
                      bool parallel = true);

// "WKPC 1 <count>" header then one "x y z" line per point, 6 decimals.
std::string write_wkpc(const std::vector<Point3>& points);
std::vector<Point3> parse_wkpc(std::string_view text);

}  // namespace worldkit
