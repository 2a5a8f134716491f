#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rf/geometry.hpp"
#include "rf/rng.hpp"

using namespace rf;

namespace {

Mat4 rotation_about_y(double angle) {
  Mat4 m;
  m.at(0, 0) = std::cos(angle);
  m.at(0, 2) = std::sin(angle);
  m.at(2, 0) = -std::sin(angle);
  m.at(2, 2) = std::cos(angle);
  return m;
}

Camera identity_camera(int w, int h, double focal) { return Camera(w, h, focal, Mat4{}); }

}  // namespace

TEST_CASE("center pixel ray points along the camera forward axis") {
  // odd width/height so a single pixel sits on the optical axis
  Camera cam = identity_camera(101, 75, 120.0);
  Ray ray = ray_through_pixel(cam, cam.height / 2, cam.width / 2);
  Vec3 fwd = cam.forward();
  CHECK(std::abs(ray.direction.x - fwd.x) < 1e-9);
  CHECK(std::abs(ray.direction.y - fwd.y) < 1e-9);
  CHECK(std::abs(ray.direction.z - fwd.z) < 1e-9);
  CHECK(std::abs(ray.direction.norm() - 1.0) < 1e-12);
  CHECK(ray.origin.norm() == 0.0);
}

TEST_CASE("corner rays are pairwise symmetric about the optical axis") {
  Camera cam = identity_camera(64, 48, 80.0);
  std::vector<Pixel> corners{{0, 0}, {0, 63}, {47, 0}, {47, 63}};
  auto rays = generate_rays(cam, corners);
  REQUIRE(rays.size() == 4);
  // left/right mirrors flip x, top/bottom mirrors flip y
  CHECK(std::abs(rays[0].direction.x + rays[1].direction.x) < 1e-12);
  CHECK(std::abs(rays[0].direction.y - rays[1].direction.y) < 1e-12);
  CHECK(std::abs(rays[0].direction.x - rays[2].direction.x) < 1e-12);
  CHECK(std::abs(rays[0].direction.y + rays[2].direction.y) < 1e-12);
  CHECK(std::abs(rays[0].direction.x + rays[3].direction.x) < 1e-12);
  CHECK(std::abs(rays[0].direction.y + rays[3].direction.y) < 1e-12);
  for (const Ray& r : rays) CHECK(std::abs(r.direction.z - rays[0].direction.z) < 1e-12);
}

TEST_CASE("ray generation is equivariant under rigid pose") {
  Mat4 rot = rotation_about_y(0.5 * 3.14159265358979323846);
  Camera cam_id = identity_camera(33, 21, 40.0);
  Camera cam_rot(33, 21, 40.0, rot);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Pixel p{static_cast<int>(rng.below(21)), static_cast<int>(rng.below(33))};
    Ray a = ray_through_pixel(cam_id, p.row, p.col);
    Ray b = ray_through_pixel(cam_rot, p.row, p.col);
    Vec3 expect = rot.apply_dir(a.direction);
    CHECK(std::abs(expect.x - b.direction.x) < 1e-6);
    CHECK(std::abs(expect.y - b.direction.y) < 1e-6);
    CHECK(std::abs(expect.z - b.direction.z) < 1e-6);
  }
}

TEST_CASE("pixel out of bounds is rejected") {
  Camera cam = identity_camera(8, 8, 10.0);
  CHECK_THROWS_AS(ray_through_pixel(cam, 8, 0), std::invalid_argument);
  CHECK_THROWS_AS(ray_through_pixel(cam, 0, -1), std::invalid_argument);
}

TEST_CASE("camera validation rejects bad poses and intrinsics") {
  Mat4 skew;
  skew.at(0, 1) = 0.5;  // not orthonormal
  CHECK_THROWS_AS(Camera(8, 8, 10.0, skew), std::invalid_argument);
  CHECK_THROWS_AS(Camera(8, 8, -1.0, Mat4{}), std::invalid_argument);
  CHECK_THROWS_AS(Camera(0, 8, 10.0, Mat4{}), std::invalid_argument);
}

TEST_CASE("midpoint sampling gives uniform bins") {
  Ray ray{{0, 0, 0}, {0, 0, -1}};
  Rng rng(0);
  RaySamples s0 = sample_along_ray(ray, 0.0, 4.0, 4, false, rng);
  REQUIRE(s0.t.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(s0.t[i] == Catch::Approx(0.5 + i).margin(1e-12));
    CHECK(s0.delta[i] == Catch::Approx(1.0).margin(1e-12));
  }

  RaySamples s = sample_along_ray(ray, 1.0, 3.0, 2, false, rng);
  REQUIRE(s.t.size() == 2);
  CHECK(s.t[0] == Catch::Approx(1.5).margin(1e-12));
  CHECK(s.t[1] == Catch::Approx(2.5).margin(1e-12));
  CHECK(s.delta[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(s.delta[1] == Catch::Approx(1.0).margin(1e-12));

  RaySamples s4 = sample_along_ray(ray, 0.5, 4.5, 4, false, rng);
  double sum = 0.0;
  for (double d : s4.delta) sum += d;
  CHECK(sum == Catch::Approx(4.0).margin(1e-9));
}

TEST_CASE("sampling rejects near >= far") {
  Ray ray{{0, 0, 0}, {0, 0, -1}};
  Rng rng(0);
  CHECK_THROWS_AS(sample_along_ray(ray, 3.0, 3.0, 4, false, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_along_ray(ray, 4.0, 3.0, 4, false, rng), std::invalid_argument);
}

TEST_CASE("stratified samples stay inside their bins") {
  Ray ray{{1, 2, 3}, {1, 0, 0}};
  const double near = 0.5, far = 2.5;
  const int count = 8;
  const double w = (far - near) / count;
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    Rng rng(seed);
    RaySamples s = sample_along_ray(ray, near, far, count, true, rng);
    for (int i = 0; i < count; ++i) {
      CHECK(s.t[i] >= near + i * w);
      CHECK(s.t[i] < near + (i + 1) * w);
      if (i > 0) CHECK(s.t[i] > s.t[i - 1]);
    }
    for (double d : s.delta) CHECK(d > 0.0);
  }
}

TEST_CASE("sample positions follow origin + t * direction") {
  Ray ray{{1, -1, 2}, Vec3{2, 1, -1}.normalized()};
  Rng rng(42);
  RaySamples s = sample_along_ray(ray, 1.0, 5.0, 7, true, rng);
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    Vec3 expect = ray.origin + s.t[i] * ray.direction;
    CHECK(std::abs(expect.x - s.q[i].x) < 1e-12);
    CHECK(std::abs(expect.y - s.q[i].y) < 1e-12);
    CHECK(std::abs(expect.z - s.q[i].z) < 1e-12);
  }
}

TEST_CASE("stratified sample mean matches the bin midpoint") {
  // Monte Carlo over many seeds; expectation of the jitter is the midpoint.
  Ray ray{{0, 0, 0}, {0, 0, -1}};
  const double near = 1.0, far = 3.0;
  const int count = 4;
  const double w = (far - near) / count;
  const int trials = 20000;
  std::vector<double> mean(count, 0.0);
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial) + 1000);
    RaySamples s = sample_along_ray(ray, near, far, count, true, rng);
    for (int i = 0; i < count; ++i) mean[i] += s.t[i];
  }
  Rng rng(0);
  RaySamples mid = sample_along_ray(ray, near, far, count, false, rng);
  for (int i = 0; i < count; ++i) {
    mean[i] /= trials;
    CHECK(std::abs(mean[i] - mid.t[i]) < 0.01 * w);
  }
}

TEST_CASE("deterministic for a fixed seed") {
  Ray ray{{0, 0, 0}, {0, 0, -1}};
  Rng a(123), b(123);
  RaySamples sa = sample_along_ray(ray, 1.0, 4.0, 16, true, a);
  RaySamples sb = sample_along_ray(ray, 1.0, 4.0, 16, true, b);
  CHECK(sa.t == sb.t);
}
