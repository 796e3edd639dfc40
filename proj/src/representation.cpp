#include "worldkit/representation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "worldkit/kernels.hpp"

namespace worldkit {

namespace {

Occupancy from_cell(Cell c) {
  switch (c) {
    case Cell::Free: return Occupancy::Free;
    case Cell::Wall: return Occupancy::Wall;
    case Cell::Goal: return Occupancy::Goal;
  }
  return Occupancy::Unknown;
}

Occupancy from_pixel(std::uint8_t v) {
  switch (v) {
    case kPixelWall: return Occupancy::Wall;
    case kPixelFree: return Occupancy::Free;
    case kPixelGoal: return Occupancy::Goal;
    default:
      throw Error(ErrorKind::Corruption, "unexpected pixel value " + std::to_string(v) + " in observation");
  }
}

}  // namespace

OccupancyGrid::OccupancyGrid(int width, int height)
    : width_(width),
      height_(height),
      cells_(static_cast<std::size_t>(width * height), Occupancy::Unknown),
      counts_(static_cast<std::size_t>(width * height), 0) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::InvalidArgument, "occupancy grid needs positive size");
}

OccupancyGrid OccupancyGrid::from_map(const GridMap& map) {
  OccupancyGrid g(map.width(), map.height());
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      g.cells_[g.index(x, y)] = from_cell(map.at(x, y));
      g.counts_[g.index(x, y)] = 1;
    }
  return g;
}

std::size_t OccupancyGrid::known_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [](Occupancy o) { return o != Occupancy::Unknown; }));
}

void OccupancyGrid::set(int x, int y, Occupancy value) {
  if (!in_bounds(x, y)) throw Error(ErrorKind::InvalidArgument, "cell out of bounds");
  Occupancy& cur = cells_[index(x, y)];
  if (cur != Occupancy::Unknown && value != Occupancy::Unknown && cur != value) {
    throw Error(ErrorKind::Corruption, "conflicting write at (" + std::to_string(x) + "," + std::to_string(y) + ")");
  }
  if (value != Occupancy::Unknown) {
    cur = value;
    ++counts_[index(x, y)];
  }
}

void OccupancyGrid::fuse(const ObservationFrame& frame, const Pose& pose) {
  if (frame.width() != frame.height() || frame.width() % 2 == 0) {
    throw Error(ErrorKind::InvalidArgument, "observation window must be square with odd side");
  }
  const int side = static_cast<int>(frame.width());
  const int r = side / 2;
  struct Write {
    std::size_t idx;
    Occupancy value;
  };
  std::vector<Write> writes;
  writes.reserve(static_cast<std::size_t>(side * side));
  for (int row = 0; row < side; ++row) {
    for (int col = 0; col < side; ++col) {
      if (row == r && col == r) continue;
      Offset o = window_offset(pose.heading, col, row, r);
      int wx = pose.x + o.dx, wy = pose.y + o.dy;
      if (!in_bounds(wx, wy)) continue;
      Occupancy v = from_pixel(frame.at(static_cast<std::uint32_t>(col), static_cast<std::uint32_t>(row)));
      Occupancy cur = cells_[index(wx, wy)];
      if (cur != Occupancy::Unknown && cur != v) {
        throw Error(ErrorKind::Corruption,
                    "conflicting write at (" + std::to_string(wx) + "," + std::to_string(wy) + ")");
      }
      writes.push_back({index(wx, wy), v});
    }
  }
  for (const auto& w : writes) {
    cells_[w.idx] = w.value;
    ++counts_[w.idx];
  }
  poses_.push_back(pose);
}

OccupancyGrid fuse_observation(OccupancyGrid grid, const ObservationFrame& frame, const Pose& pose) {
  grid.fuse(frame, pose);
  return grid;
}

RepresentationOutput export_points(const OccupancyGrid& grid) {
  RepresentationOutput out;
  out.poses = grid.pose_history();
  out.known_mask.reserve(static_cast<std::size_t>(grid.width() * grid.height()));
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      Occupancy o = grid.at(x, y);
      out.known_mask.push_back(o != Occupancy::Unknown);
      if (o == Occupancy::Wall) out.points.push_back({x + 0.5, y + 0.5, 0.5});
    }
  }
  return out;
}

DepthMap render_depth(const OccupancyGrid& grid, const DepthCamera& camera, int rays, double fov,
                      bool parallel) {
  if (rays < 1) throw Error(ErrorKind::InvalidArgument, "rays must be >= 1");
  if (!std::isfinite(camera.x) || !std::isfinite(camera.y) || !std::isfinite(camera.yaw) || !std::isfinite(fov)) {
    throw Error(ErrorKind::InvalidArgument, "non-finite camera parameters");
  }
  const int cx = static_cast<int>(std::floor(camera.x));
  const int cy = static_cast<int>(std::floor(camera.y));
  if (!grid.in_bounds(cx, cy)) throw Error(ErrorKind::InvalidArgument, "camera outside the grid");
  if (grid.at(cx, cy) == Occupancy::Wall) throw Error(ErrorKind::InvalidArgument, "camera inside Wall");

  std::vector<std::uint8_t> blocked(static_cast<std::size_t>(grid.width() * grid.height()));
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x)
      blocked[static_cast<std::size_t>(y * grid.width() + x)] = grid.at(x, y) == Occupancy::Wall ? 1 : 0;
  BlockedView view{grid.width(), grid.height(), blocked};

  DepthMap out;
  out.rays = rays;
  out.fov = fov;
  out.depths = parallel ? kernels::parallel::cast_rays(view, camera.x, camera.y, camera.yaw, fov, rays)
                        : kernels::serial::cast_rays(view, camera.x, camera.y, camera.yaw, fov, rays);
  return out;
}

std::string write_wkpc(const std::vector<Point3>& points) {
  std::string out = "WKPC 1 " + std::to_string(points.size()) + "\n";
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f\n", p.x, p.y, p.z);
    out += buf;
  }
  return out;
}

std::vector<Point3> parse_wkpc(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version >> count) || magic != "WKPC" || version != 1) {
    throw Error(ErrorKind::InvalidArgument, "bad WKPC header");
  }
  std::vector<Point3> pts(count);
  for (auto& p : pts) {
    if (!(in >> p.x >> p.y >> p.z)) throw Error(ErrorKind::InvalidArgument, "truncated WKPC body");
  }
  return pts;
}

}  // namespace worldkit
