#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace worldkit {

enum class ErrorKind {
  InvalidArgument,
  NotFound,
  Conflict,
  Rejected,
  Gone,
  Corruption,
  Backend,
  Unreachable,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class Modality { Text, Image, VideoFrames, Audio, Action, Pose, PointCloud, DepthMap, Scalar };

std::string_view to_string(Modality m);
// Throws InvalidArgument for tags outside the closed set.
Modality modality_from_string(std::string_view tag);

enum class Heading : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

std::string_view to_string(Heading h);
Heading heading_from_string(std::string_view s);
inline Heading turn_cw(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
inline Heading turn_ccw(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }

struct Offset {
  int dx = 0;
  int dy = 0;
  bool operator==(const Offset&) const = default;
};

// Unit step for a heading. y grows southwards (map rows).
Offset heading_vector(Heading h);

struct CameraAngles {
  double polar = 90.0;
  double azimuth = 0.0;
  double yaw = 0.0;
  bool operator==(const CameraAngles&) const = default;
};

struct Pose {
  int x = 0;
  int y = 0;
  Heading heading = Heading::E;
  std::optional<CameraAngles> camera;
  bool operator==(const Pose&) const = default;
};

/// Clamp polar to [0,180], wrap azimuth into [-180,180) and yaw into [0,360).
/// Throws InvalidArgument on non-finite angles.
CameraAngles normalize_angles(const CameraAngles& angles);
Pose normalize_angles(const Pose& pose);

double clamp_polar(double deg);
double wrap_azimuth(double deg);
double wrap_yaw(double deg);

/// Single-channel raster, row-major.
class ObservationFrame {
 public:
  ObservationFrame() = default;
  // Throws InvalidArgument when pixels.size() != width * height.
  ObservationFrame(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> pixels);

  static ObservationFrame filled(std::uint32_t width, std::uint32_t height, std::uint8_t value);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::uint8_t at(std::uint32_t col, std::uint32_t row) const { return pixels_[row * width_ + col]; }
  void set(std::uint32_t col, std::uint32_t row, std::uint8_t v) { pixels_[row * width_ + col] = v; }

  bool operator==(const ObservationFrame&) const = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using Bytes = std::vector<std::uint8_t>;

// 8-byte big-endian {width, height} header followed by the raw pixels.
Bytes encode_frame(const ObservationFrame& frame);
ObservationFrame decode_frame(std::span<const std::uint8_t> bytes);

struct Artifact {
  Modality modality = Modality::Text;
  Bytes payload;
  bool operator==(const Artifact&) const = default;
};

using Metadata = std::map<std::string, std::string>;

struct ResultEnvelope {
  std::string session_id;
  std::uint64_t turn = 0;
  std::string task;
  std::vector<Artifact> artifacts;
  Metadata metadata;
  std::vector<std::string> memory_refs;
  bool terminal = false;

  bool ok() const { return !metadata.contains("error"); }
  bool operator==(const ResultEnvelope&) const = default;
};

// Wall-clock metadata; excluded from determinism comparisons and digests.
inline constexpr std::string_view kTimestampKey = "timestamp_ms";
inline constexpr std::string_view kElapsedKey = "elapsed_us";
inline bool is_volatile_key(std::string_view key) { return key == kTimestampKey || key == kElapsedKey; }

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex64(std::uint64_t v);
// Strict: exactly 16 lowercase hex digits.
std::optional<std::uint64_t> parse_hex64(std::string_view s);

std::string frame_digest(const ObservationFrame& frame);

std::string base64_encode(std::span<const std::uint8_t> data);
// Throws InvalidArgument on malformed input.
Bytes base64_decode(std::string_view text);

// Shortest round-trip decimal form.
std::string format_double(double v);
double parse_double(std::string_view s);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace worldkit
