#include "worldkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace worldkit {

double cosine(const Feature& a, const Feature& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cast_ray(const BlockedView& view, double ox, double oy, double theta_rad) {
  const double dx = std::sin(theta_rad);
  const double dy = -std::cos(theta_rad);
  int cx = static_cast<int>(std::floor(ox));
  int cy = static_cast<int>(std::floor(oy));
  auto inside = [&](int x, int y) { return x >= 0 && y >= 0 && x < view.width && y < view.height; };
  if (!inside(cx, cy)) return kNoHit;
  if (view.is_blocked(cx, cy)) return 0.0;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int step_x = dx > 0 ? 1 : -1;
  const int step_y = dy > 0 ? 1 : -1;
  const double t_delta_x = dx != 0.0 ? std::abs(1.0 / dx) : kInf;
  const double t_delta_y = dy != 0.0 ? std::abs(1.0 / dy) : kInf;
  double t_max_x = dx > 0 ? (cx + 1 - ox) / dx : dx < 0 ? (cx - ox) / dx : kInf;
  double t_max_y = dy > 0 ? (cy + 1 - oy) / dy : dy < 0 ? (cy - oy) / dy : kInf;

  while (true) {
    double t;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      cx += step_x;
      t_max_x += t_delta_x;
    } else {
      t = t_max_y;
      cy += step_y;
      t_max_y += t_delta_y;
    }
    if (t > kMaxRayCells || !inside(cx, cy)) return kNoHit;
    if (view.is_blocked(cx, cy)) return t;
  }
}

double ray_angle_deg(double yaw_deg, double fov_deg, int k, int rays) {
  return yaw_deg - fov_deg / 2.0 + fov_deg * (k + 0.5) / rays;
}

double memory_score(const Feature& query, const Feature& feature, std::uint64_t now, std::uint64_t step,
                    double alpha, double lambda) {
  const double age = static_cast<double>(now) - static_cast<double>(step);
  return alpha * cosine(query, feature) + (1.0 - alpha) * std::exp(-lambda * age);
}

namespace {

struct Twiddles {
  std::vector<double> cos_table;
  std::vector<double> sin_table;
  explicit Twiddles(std::size_t n) : cos_table(n), sin_table(n) {
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      cos_table[i] = std::cos(ang);
      sin_table[i] = std::sin(ang);
    }
  }
};

double spectrum_bin(std::span<const float> samples, const Twiddles& tw, std::size_t k) {
  const std::size_t n = tw.cos_table.size();
  const std::size_t len = std::min(samples.size(), n);
  double re = 0.0, im = 0.0;
  std::size_t phase = 0;
  for (std::size_t i = 0; i < len; ++i) {
    re += samples[i] * tw.cos_table[phase];
    im += samples[i] * tw.sin_table[phase];
    phase = (phase + k) % n;
  }
  return re * re + im * im;
}

}  // namespace

namespace kernels::serial {

std::vector<double> cast_rays(const BlockedView& view, double ox, double oy, double yaw_deg,
                              double fov_deg, int rays) {
  std::vector<double> out(static_cast<std::size_t>(rays));
  for (int k = 0; k < rays; ++k) {
    const double theta = ray_angle_deg(yaw_deg, fov_deg, k, rays) * std::numbers::pi / 180.0;
    out[static_cast<std::size_t>(k)] = cast_ray(view, ox, oy, theta);
  }
  return out;
}

std::vector<double> score_records(const MemoryScoreInputs& in) {
  std::vector<double> out(in.features.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = memory_score(in.query, in.features[i], in.now, in.steps[i], in.alpha, in.lambda);
  }
  return out;
}

std::vector<double> power_spectrum(std::span<const float> samples, std::size_t n) {
  const Twiddles tw(n);
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = spectrum_bin(samples, tw, k);
  return out;
}

}  // namespace kernels::serial

namespace kernels::parallel {

std::vector<double> cast_rays(const BlockedView& view, double ox, double oy, double yaw_deg,
                              double fov_deg, int rays) {
  std::vector<double> out(static_cast<std::size_t>(rays));
#pragma omp parallel for schedule(static)
  for (int k = 0; k < rays; ++k) {
    const double theta = ray_angle_deg(yaw_deg, fov_deg, k, rays) * std::numbers::pi / 180.0;
    out[static_cast<std::size_t>(k)] = cast_ray(view, ox, oy, theta);
  }
  return out;
}

std::vector<double> score_records(const MemoryScoreInputs& in) {
  const auto n = static_cast<std::int64_t>(in.features.size());
  std::vector<double> out(in.features.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = memory_score(in.query, in.features[u], in.now, in.steps[u], in.alpha, in.lambda);
  }
  return out;
}

std::vector<double> power_spectrum(std::span<const float> samples, std::size_t n) {
  const Twiddles tw(n);
  const auto bins = static_cast<std::int64_t>(n / 2 + 1);
  std::vector<double> out(static_cast<std::size_t>(bins));
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t k = 0; k < bins; ++k) {
    out[static_cast<std::size_t>(k)] = spectrum_bin(samples, tw, static_cast<std::size_t>(k));
  }
  return out;
}

}  // namespace kernels::parallel

}  // namespace worldkit
