#pragma once

// Independent reference computations for tests. Nothing here calls into the
// code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "worldkit/memory.hpp"
#include "worldkit/world_kernel.hpp"

namespace oracle {

using namespace worldkit;

// Map text lookup straight from the source rows.
inline char map_char(const std::string& text, int x, int y) {
  int row = 0;
  std::size_t start = 0;
  while (row < y) {
    start = text.find('\n', start) + 1;
    ++row;
  }
  return text[start + static_cast<std::size_t>(x)];
}

inline std::vector<std::string> rows(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    if (nl > start) out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

inline std::size_t count_char(const std::string& text, char c) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), c));
}

// Window pixel (col,row) -> world offset, tabulated per heading.
inline std::pair<int, int> window_to_world(Heading h, int col, int row, int r) {
  const int a = col - r;  // to the right
  const int b = r - row;  // ahead
  switch (h) {
    case Heading::N: return {a, -b};
    case Heading::E: return {b, a};
    case Heading::S: return {-a, b};
    case Heading::W: return {-b, -a};
  }
  return {0, 0};
}

inline std::vector<std::uint8_t> render(const std::string& text, int x, int y, Heading h, int r) {
  const auto rs = rows(text);
  const int side = 2 * r + 1;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(side * side));
  for (int row = 0; row < side; ++row) {
    for (int col = 0; col < side; ++col) {
      auto [dx, dy] = window_to_world(h, col, row, r);
      const int wx = x + dx, wy = y + dy;
      char c = '#';
      if (wy >= 0 && wy < static_cast<int>(rs.size()) && wx >= 0 && wx < static_cast<int>(rs[0].size())) {
        c = rs[static_cast<std::size_t>(wy)][static_cast<std::size_t>(wx)];
      }
      std::uint8_t v = c == '#' ? 0 : c == 'G' ? 170 : 255;
      if (row == r && col == r) v = 85;
      px[static_cast<std::size_t>(row * side + col)] = v;
    }
  }
  return px;
}

// Random bordered map with a reachable goal, width/height in [lo, hi].
inline std::string random_map(std::mt19937_64& rng, int lo, int hi, double wall_p = 0.25) {
  std::uniform_int_distribution<int> dim(lo, hi);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    const int w = dim(rng), h = dim(rng);
    std::vector<std::string> g(static_cast<std::size_t>(h), std::string(static_cast<std::size_t>(w), '#'));
    std::vector<std::pair<int, int>> free;
    for (int y = 1; y < h - 1; ++y)
      for (int x = 1; x < w - 1; ++x)
        if (u(rng) >= wall_p) {
          g[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = '.';
          free.emplace_back(x, y);
        }
    if (free.size() < 2) continue;
    std::shuffle(free.begin(), free.end(), rng);
    g[static_cast<std::size_t>(free[0].second)][static_cast<std::size_t>(free[0].first)] = 'S';
    g[static_cast<std::size_t>(free[1].second)][static_cast<std::size_t>(free[1].first)] = 'G';
    std::string text;
    for (auto& row : g) text += row + "\n";
    try {
      GridMap::parse(text);
      return text;
    } catch (const Error&) {
    }
  }
}

// Slip-free successor with hand-coded dynamics.
struct PoseState {
  int x, y, h;  // h: 0 N, 1 E, 2 S, 3 W
};

inline PoseState exact_step(const std::vector<std::string>& g, PoseState s, int action) {
  static constexpr int dx[4] = {0, 1, 0, -1};
  static constexpr int dy[4] = {-1, 0, 1, 0};
  int dir = -1;
  switch (action) {
    case 0: dir = s.h; break;
    case 1: dir = (s.h + 2) % 4; break;
    case 2: dir = (s.h + 3) % 4; break;
    case 3: dir = (s.h + 1) % 4; break;
    case 4: return {s.x, s.y, (s.h + 3) % 4};
    case 5: return {s.x, s.y, (s.h + 1) % 4};
  }
  const int nx = s.x + dx[dir], ny = s.y + dy[dir];
  if (g[static_cast<std::size_t>(ny)][static_cast<std::size_t>(nx)] == '#') return s;
  return {nx, ny, s.h};
}

// Optimal action count to any goal by value iteration over all (x, y, h).
inline int optimal_plan_length(const std::string& text, int sx, int sy, int sh) {
  const auto g = rows(text);
  const int h = static_cast<int>(g.size()), w = static_cast<int>(g[0].size());
  constexpr int kInf = 1 << 28;
  auto idx = [&](int x, int y, int hd) { return (y * w + x) * 4 + hd; };
  std::vector<int> v(static_cast<std::size_t>(w * h * 4), kInf);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (g[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == 'G')
        for (int hd = 0; hd < 4; ++hd) v[static_cast<std::size_t>(idx(x, y, hd))] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const char c = g[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
        if (c == '#' || c == 'G') continue;
        for (int hd = 0; hd < 4; ++hd) {
          int best = v[static_cast<std::size_t>(idx(x, y, hd))];
          for (int a = 0; a < 6; ++a) {
            PoseState n = exact_step(g, {x, y, hd}, a);
            best = std::min(best, v[static_cast<std::size_t>(idx(n.x, n.y, n.h))] + 1);
          }
          if (best < v[static_cast<std::size_t>(idx(x, y, hd))]) {
            v[static_cast<std::size_t>(idx(x, y, hd))] = best;
            changed = true;
          }
        }
      }
  }
  const int r = v[static_cast<std::size_t>(idx(sx, sy, sh))];
  return r >= kInf ? -1 : r;
}

// First Wall entry along (sin t, -cos t): march at 1e-4, then bisect the
// bracket. Returns -1 when nothing is hit within max_t or the ray leaves the grid.
inline double march_depth(const std::vector<std::string>& g, double ox, double oy, double theta,
                          double max_t = 100.0) {
  const double dx = std::sin(theta), dy = -std::cos(theta);
  const int h = static_cast<int>(g.size()), w = static_cast<int>(g[0].size());
  auto cell = [&](double t) -> int {  // 1 wall, 0 free, -1 outside
    const double px = ox + dx * t, py = oy + dy * t;
    const int cx = static_cast<int>(std::floor(px)), cy = static_cast<int>(std::floor(py));
    if (cx < 0 || cy < 0 || cx >= w || cy >= h) return -1;
    return g[static_cast<std::size_t>(cy)][static_cast<std::size_t>(cx)] == '#' ? 1 : 0;
  };
  constexpr double kStep = 1e-4;
  double prev = 0.0;
  for (double t = kStep; t <= max_t; t += kStep) {
    const int c = cell(t);
    if (c == -1) return -1.0;
    if (c == 1) {
      double lo = prev, hi = t;
      while (hi - lo > 1e-11) {
        const double mid = 0.5 * (lo + hi);
        (cell(mid) == 1 ? hi : lo) = mid;
      }
      return hi;
    }
    prev = t;
  }
  return -1.0;
}

inline double oracle_cosine(const Feature& a, const Feature& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
}

// Brute-force ordered top-k ids.
inline std::vector<std::string> topk(const std::vector<MemoryRecord>& records, const Feature& q, std::uint64_t now,
                                     std::size_t k, double alpha, double lambda) {
  struct Scored {
    double s;
    std::uint64_t step;
    std::string id;
  };
  std::vector<Scored> all;
  for (const auto& r : records) {
    const double s = alpha * oracle_cosine(q, r.feature) +
                     (1 - alpha) * std::exp(-lambda * (static_cast<double>(now) - static_cast<double>(r.step)));
    all.push_back({s, r.step, r.id});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (a.s != b.s) return a.s > b.s;
    if (a.step != b.step) return a.step > b.step;
    return a.id < b.id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].id);
  return out;
}

// Magnitude-squared spectrum peak (Hz) by direct complex DFT, bins 1..n/2.
inline double dft_peak_hz(const std::vector<float>& x, std::size_t n, double rate) {
  std::size_t best = 1;
  double best_mag = -1;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t i = 0; i < std::min(x.size(), n); ++i) {
      acc += static_cast<double>(x[i]) *
             std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(i) /
                                 static_cast<double>(n));
    }
    if (std::norm(acc) > best_mag) {
      best_mag = std::norm(acc);
      best = k;
    }
  }
  return static_cast<double>(best) * rate / static_cast<double>(n);
}

// Chi-square statistic of observed counts against expected probabilities.
inline double chi_square(const std::vector<std::size_t>& counts, const std::vector<double>& probs, std::size_t n) {
  double chi = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * static_cast<double>(n);
    chi += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
  }
  return chi;
}

// Critical value of chi-square with 1 degree of freedom at alpha = 0.001.
inline constexpr double kChi2Df1Alpha001 = 10.828;

// Random memory payload: mostly 5x5 frames and short texts, some actions.
inline Artifact random_artifact(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 9), px(0, 255), ch('a', 'z'), len(3, 30);
  const int k = kind(rng);
  if (k < 5) {
    std::vector<std::uint8_t> p(25);
    for (auto& v : p) v = static_cast<std::uint8_t>(px(rng));
    return {Modality::Image, encode_frame(ObservationFrame(5, 5, p))};
  }
  if (k < 9) {
    std::string s(static_cast<std::size_t>(len(rng)), 'a');
    for (auto& c : s) c = static_cast<char>(ch(rng));
    return {Modality::Text, Bytes(s.begin(), s.end())};
  }
  return {Modality::Action, Bytes{1, 2, 3}};
}

// Action tokens that stand on every non-goal free cell of the demo map and
// look in all four directions there (heading stays east between moves).
inline std::vector<std::string> demo_coverage_walk() {
  const std::vector<std::string> spin{"turn_left", "turn_left", "turn_left", "turn_left"};
  std::vector<std::string> out;
  auto add = [&](const std::vector<std::string>& v) { out.insert(out.end(), v.begin(), v.end()); };
  add(spin);
  for (const char* move : {"move_forward", "move_forward", "move_right"}) {
    out.emplace_back(move);
    add(spin);
  }
  add({"move_left", "move_backward", "move_backward"});
  for (const char* move : {"move_right", "move_right", "move_forward"}) {
    out.emplace_back(move);
    add(spin);
  }
  return out;
}

}  // namespace oracle
