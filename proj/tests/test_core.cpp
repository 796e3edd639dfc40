#include <doctest.h>

#include <random>

#include "worldkit/core.hpp"

using namespace worldkit;

TEST_SUITE("core") {

TEST_CASE("single pixel frame encodes as header plus byte") {
  const auto bytes = encode_frame(ObservationFrame(1, 1, {255}));
  const Bytes expected{0, 0, 0, 1, 0, 0, 0, 1, 0xFF};
  CHECK(bytes == expected);
  CHECK(decode_frame(bytes) == ObservationFrame(1, 1, {255}));
}

TEST_CASE("length mismatch is rejected") {
  CHECK_THROWS_AS(ObservationFrame(2, 2, {1, 2, 3}), Error);
  const Bytes truncated{0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3};
  CHECK_THROWS_AS(decode_frame(truncated), Error);
  CHECK_THROWS_AS(decode_frame(Bytes{0, 0, 0}), Error);
}

TEST_CASE("frame round trip over random shapes") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(0, 12), px(0, 255);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = static_cast<std::uint32_t>(dim(rng)), h = static_cast<std::uint32_t>(dim(rng));
    std::vector<std::uint8_t> pixels(w * h);
    for (auto& p : pixels) p = static_cast<std::uint8_t>(px(rng));
    ObservationFrame f(w, h, pixels);
    const auto enc = encode_frame(f);
    REQUIRE(enc.size() == 8 + w * h);
    CHECK(decode_frame(enc) == f);
  }
}

TEST_CASE("angle normalization examples") {
  CHECK(normalize_angles(CameraAngles{200, 0, 0}).polar == 180.0);
  CHECK(normalize_angles(CameraAngles{90, 180, 0}).azimuth == -180.0);
  CHECK(normalize_angles(CameraAngles{90, 0, -90}).yaw == 270.0);
  CHECK(normalize_angles(CameraAngles{-5, -180, 360}) == CameraAngles{0, -180, 0});
  CHECK(normalize_angles(CameraAngles{90, 540, 725}) == CameraAngles{90, -180, 5});
  CHECK_THROWS_AS(normalize_angles(CameraAngles{std::nan(""), 0, 0}), Error);
}

TEST_CASE("angle normalization is idempotent") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2000.0, 2000.0);
  for (int i = 0; i < 5000; ++i) {
    Pose p{1, 2, Heading::S, CameraAngles{u(rng), u(rng), u(rng)}};
    const Pose once = normalize_angles(p);
    CHECK(normalize_angles(once) == once);
    CHECK(once.camera->polar >= 0.0);
    CHECK(once.camera->polar <= 180.0);
    CHECK(once.camera->azimuth >= -180.0);
    CHECK(once.camera->azimuth < 180.0);
    CHECK(once.camera->yaw >= 0.0);
    CHECK(once.camera->yaw < 360.0);
  }
}

TEST_CASE("headings and turns") {
  CHECK(heading_vector(Heading::N) == Offset{0, -1});
  CHECK(heading_vector(Heading::E) == Offset{1, 0});
  CHECK(heading_vector(Heading::S) == Offset{0, 1});
  CHECK(heading_vector(Heading::W) == Offset{-1, 0});
  for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
    CHECK(turn_ccw(turn_ccw(turn_ccw(turn_ccw(h)))) == h);
    CHECK(turn_cw(turn_ccw(h)) == h);
    CHECK(heading_from_string(to_string(h)) == h);
  }
}

TEST_CASE("modality tags are a closed set") {
  for (auto m : {Modality::Text, Modality::Image, Modality::VideoFrames, Modality::Audio, Modality::Action,
                 Modality::Pose, Modality::PointCloud, Modality::DepthMap, Modality::Scalar}) {
    CHECK(modality_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(modality_from_string("Smell"), Error);
}

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64(std::string_view("")) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64(std::string_view("a")) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64(std::string_view("foobar")) == 0x85944171f73967e8ULL);
  CHECK(to_hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
  CHECK(parse_hex64("af63dc4c8601ec8c") == 0xaf63dc4c8601ec8cULL);
  CHECK_FALSE(parse_hex64("AF63DC4C8601EC8C").has_value());
  CHECK_FALSE(parse_hex64("af63dc4c8601ec8").has_value());
}

TEST_CASE("base64 reference vectors") {
  auto b = [](std::string_view s) { return Bytes(s.begin(), s.end()); };
  CHECK(base64_encode(b("")) == "");
  CHECK(base64_encode(b("f")) == "Zg==");
  CHECK(base64_encode(b("fo")) == "Zm8=");
  CHECK(base64_encode(b("foo")) == "Zm9v");
  CHECK(base64_encode(b("foobar")) == "Zm9vYmFy");
  CHECK(base64_decode("Zm9vYmE=") == b("fooba"));
  CHECK_THROWS_AS(base64_decode("Zm9"), Error);
  CHECK_THROWS_AS(base64_decode("Zm9v!A=="), Error);
}

TEST_CASE("double formatting round trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.97) == "0.97");
  CHECK(format_double(-0.01) == "-0.01");
}

TEST_CASE("volatile metadata keys") {
  CHECK(is_volatile_key("timestamp_ms"));
  CHECK(is_volatile_key("elapsed_us"));
  CHECK_FALSE(is_volatile_key("reward"));
}

}
