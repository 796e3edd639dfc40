#include "worldkit/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

namespace worldkit {

namespace {

constexpr std::array<std::string_view, 9> kModalityNames = {
    "Text", "Image", "VideoFrames", "Audio", "Action", "Pose", "PointCloud", "DepthMap", "Scalar"};

constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::InvalidArgument, std::string("non-finite angle: ") + name);
  }
}

}  // namespace

std::string_view to_string(Modality m) { return kModalityNames[static_cast<std::size_t>(m)]; }

Modality modality_from_string(std::string_view tag) {
  for (std::size_t i = 0; i < kModalityNames.size(); ++i) {
    if (kModalityNames[i] == tag) return static_cast<Modality>(i);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown modality tag: " + std::string(tag));
}

std::string_view to_string(Heading h) {
  switch (h) {
    case Heading::N: return "N";
    case Heading::E: return "E";
    case Heading::S: return "S";
    case Heading::W: return "W";
  }
  return "?";
}

Heading heading_from_string(std::string_view s) {
  if (s == "N") return Heading::N;
  if (s == "E") return Heading::E;
  if (s == "S") return Heading::S;
  if (s == "W") return Heading::W;
  throw Error(ErrorKind::InvalidArgument, "unknown heading: " + std::string(s));
}

Offset heading_vector(Heading h) {
  switch (h) {
    case Heading::N: return {0, -1};
    case Heading::E: return {1, 0};
    case Heading::S: return {0, 1};
    case Heading::W: return {-1, 0};
  }
  return {};
}

double clamp_polar(double deg) {
  require_finite(deg, "polar");
  return std::clamp(deg, 0.0, 180.0);
}

double wrap_azimuth(double deg) {
  require_finite(deg, "azimuth");
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  w -= 180.0;
  // fmod can round to exactly 360 for tiny negative inputs
  if (w >= 180.0) w -= 360.0;
  return w;
}

double wrap_yaw(double deg) {
  require_finite(deg, "yaw");
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w;
}

CameraAngles normalize_angles(const CameraAngles& a) {
  return {clamp_polar(a.polar), wrap_azimuth(a.azimuth), wrap_yaw(a.yaw)};
}

Pose normalize_angles(const Pose& pose) {
  Pose out = pose;
  if (out.camera) out.camera = normalize_angles(*out.camera);
  return out;
}

ObservationFrame::ObservationFrame(std::uint32_t width, std::uint32_t height,
                                   std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (static_cast<std::uint64_t>(width) * height != pixels_.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "frame payload mismatch: " + std::to_string(width) + "x" + std::to_string(height) +
                    " declared, " + std::to_string(pixels_.size()) + " pixels supplied");
  }
}

ObservationFrame ObservationFrame::filled(std::uint32_t width, std::uint32_t height,
                                          std::uint8_t value) {
  return ObservationFrame(width, height,
                          std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, value));
}

Bytes encode_frame(const ObservationFrame& frame) {
  Bytes out;
  out.reserve(8 + frame.pixels().size());
  for (std::uint32_t v : {frame.width(), frame.height()}) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  }
  out.insert(out.end(), frame.pixels().begin(), frame.pixels().end());
  return out;
}

ObservationFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw Error(ErrorKind::InvalidArgument, "frame header truncated");
  auto be32 = [&](std::size_t at) {
    return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
           (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
  };
  return ObservationFrame(be32(0), be32(4), std::vector<std::uint8_t>(bytes.begin() + 8, bytes.end()));
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()), seed);
}

std::string to_hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::optional<std::uint64_t> parse_hex64(std::string_view s) {
  if (s.size() != 16) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else return std::nullopt;
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

std::string frame_digest(const ObservationFrame& frame) { return to_hex64(fnv1a64(frame.pixels())); }

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    std::uint32_t n = (std::uint32_t{data[i]} << 16) | (std::uint32_t{data[i + 1]} << 8) | data[i + 2];
    out += kB64Alphabet[(n >> 18) & 63];
    out += kB64Alphabet[(n >> 12) & 63];
    out += kB64Alphabet[(n >> 6) & 63];
    out += kB64Alphabet[n & 63];
  }
  if (i + 1 == data.size()) {
    std::uint32_t n = std::uint32_t{data[i]} << 16;
    out += kB64Alphabet[(n >> 18) & 63];
    out += kB64Alphabet[(n >> 12) & 63];
    out += "==";
  } else if (i + 2 == data.size()) {
    std::uint32_t n = (std::uint32_t{data[i]} << 16) | (std::uint32_t{data[i + 1]} << 8);
    out += kB64Alphabet[(n >> 18) & 63];
    out += kB64Alphabet[(n >> 12) & 63];
    out += kB64Alphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorKind::InvalidArgument, "base64 length not a multiple of 4");
  Bytes out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw Error(ErrorKind::InvalidArgument, "base64 padding in the middle");
      v[k] = b64_value(c);
      if (v[k] < 0) throw Error(ErrorKind::InvalidArgument, "invalid base64 character");
    }
    std::uint32_t n = (static_cast<std::uint32_t>(v[0]) << 18) | (static_cast<std::uint32_t>(v[1]) << 12) |
                      (static_cast<std::uint32_t>(v[2]) << 6) | static_cast<std::uint32_t>(v[3]);
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::InvalidArgument, "not a number: " + std::string(s));
  }
  return v;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace worldkit
