#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial with identical per-element arithmetic; the OpenMP versions
// in kernels::parallel must agree with it bit-for-bit.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace worldkit {

inline constexpr std::size_t kFeatureDim = 32;
using Feature = std::array<double, kFeatureDim>;

double cosine(const Feature& a, const Feature& b);

// Blocked-cell view of a grid for raycasting; row-major, nonzero = blocked.
struct BlockedView {
  int width = 0;
  int height = 0;
  std::span<const std::uint8_t> blocked;
  bool is_blocked(int x, int y) const { return blocked[static_cast<std::size_t>(y * width + x)] != 0; }
};

inline constexpr double kNoHit = -1.0;
inline constexpr double kMaxRayCells = 100.0;

// Grid traversal from (ox, oy) along (sin theta, -cos theta). Returns the ray
// parameter at entry into the first blocked cell, or kNoHit when the ray
// leaves the grid or travels kMaxRayCells without a hit.
double cast_ray(const BlockedView& view, double ox, double oy, double theta_rad);

// Angle of ray k in degrees: yaw - fov/2 + fov*(k+1/2)/rays.
double ray_angle_deg(double yaw_deg, double fov_deg, int k, int rays);

struct MemoryScoreInputs {
  std::span<const Feature> features;
  std::span<const std::uint64_t> steps;
  Feature query;
  std::uint64_t now = 0;
  double alpha = 0.7;
  double lambda = 0.05;
};

double memory_score(const Feature& query, const Feature& feature, std::uint64_t now, std::uint64_t step,
                    double alpha, double lambda);

namespace kernels::serial {
std::vector<double> cast_rays(const BlockedView& view, double ox, double oy, double yaw_deg,
                              double fov_deg, int rays);
std::vector<double> score_records(const MemoryScoreInputs& in);
// |X_k|^2 for k = 0..n/2 of the zero-padded/truncated n-point DFT.
std::vector<double> power_spectrum(std::span<const float> samples, std::size_t n);
}  // namespace kernels::serial

namespace kernels::parallel {
std::vector<double> cast_rays(const BlockedView& view, double ox, double oy, double yaw_deg,
                              double fov_deg, int rays);
std::vector<double> score_records(const MemoryScoreInputs& in);
std::vector<double> power_spectrum(std::span<const float> samples, std::size_t n);
}  // namespace kernels::parallel

}  // namespace worldkit
