#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rf/common.hpp"
#include "rf/rng.hpp"

namespace rf {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 cwise_mul(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this / norm(); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 4x4 rigid transform.
struct Mat4 {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  double& at(int r, int c) { return m[r * 4 + c]; }
  double at(int r, int c) const { return m[r * 4 + c]; }

  Vec3 apply_point(const Vec3& p) const {
    return {at(0, 0) * p.x + at(0, 1) * p.y + at(0, 2) * p.z + at(0, 3),
            at(1, 0) * p.x + at(1, 1) * p.y + at(1, 2) * p.z + at(1, 3),
            at(2, 0) * p.x + at(2, 1) * p.y + at(2, 2) * p.z + at(2, 3)};
  }

  Vec3 apply_dir(const Vec3& d) const {
    return {at(0, 0) * d.x + at(0, 1) * d.y + at(0, 2) * d.z,
            at(1, 0) * d.x + at(1, 1) * d.y + at(1, 2) * d.z,
            at(2, 0) * d.x + at(2, 1) * d.y + at(2, 2) * d.z};
  }

  Vec3 translation() const { return {at(0, 3), at(1, 3), at(2, 3)}; }
};

// Pinhole camera with a camera-to-world pose in the OpenGL convention:
// x right, y up, looking along -z.
struct Camera {
  int width = 0;
  int height = 0;
  double focal = 0.0;  // pixels
  Mat4 pose;           // camera-to-world

  Camera() = default;
  Camera(int w, int h, double f, const Mat4& cam_to_world)
      : width(w), height(h), focal(f), pose(cam_to_world) {
    require(width >= 1 && height >= 1, "camera: width and height must be >= 1");
    require(focal > 0.0, "camera: focal must be positive");
    validate_pose(pose);
  }

  static Camera from_fov_x(int w, int h, double fov_x_radians, const Mat4& cam_to_world) {
    require(fov_x_radians > 0.0, "camera: field of view must be positive");
    double f = 0.5 * w / std::tan(0.5 * fov_x_radians);
    return Camera(w, h, f, cam_to_world);
  }

  Vec3 position() const { return pose.translation(); }
  Vec3 forward() const { return pose.apply_dir({0.0, 0.0, -1.0}); }

  static void validate_pose(const Mat4& p) {
    // Rotation block must be orthonormal and the last row [0,0,0,1].
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += p.at(k, i) * p.at(k, j);
        double expect = (i == j) ? 1.0 : 0.0;
        require(std::abs(dot - expect) <= 1e-6, "camera: rotation block is not orthonormal");
      }
    }
    require(p.at(3, 0) == 0.0 && p.at(3, 1) == 0.0 && p.at(3, 2) == 0.0 && p.at(3, 3) == 1.0,
            "camera: last pose row must be [0,0,0,1]");
  }
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit norm
};

struct RaySamples {
  std::vector<double> t;      // strictly increasing depths
  std::vector<Vec3> q;        // origin + t * direction
  std::vector<double> delta;  // t[i+1] - t[i]; last entry = bin width
};

struct Pixel {
  int row = 0;
  int col = 0;
};

// One ray per pixel center; principal point at the image center.
inline Ray ray_through_pixel(const Camera& cam, int row, int col) {
  require(row >= 0 && row < cam.height && col >= 0 && col < cam.width,
          "generate_rays: pixel out of bounds");
  double u = (col + 0.5 - 0.5 * cam.width) / cam.focal;
  double v = -(row + 0.5 - 0.5 * cam.height) / cam.focal;
  Vec3 dir_cam{u, v, -1.0};
  Vec3 dir_world = cam.pose.apply_dir(dir_cam).normalized();
  return {cam.position(), dir_world};
}

inline std::vector<Ray> generate_rays(const Camera& cam, const std::vector<Pixel>& pixels) {
  std::vector<Ray> rays;
  rays.reserve(pixels.size());
  for (const Pixel& p : pixels) rays.push_back(ray_through_pixel(cam, p.row, p.col));
  return rays;
}

// Stratified or midpoint sampling of `count` equal bins over [near, far].
// delta[i] = t[i+1] - t[i]; the last delta is the bin width so that the
// midpoint mode satisfies sum(delta) == far - near exactly.
inline RaySamples sample_along_ray(const Ray& ray, double near, double far, int count,
                                   bool stratified, Rng& rng) {
  require(near >= 0.0 && near < far, "sample_along_ray: need 0 <= near < far");
  require(count >= 2, "sample_along_ray: count must be >= 2");

  RaySamples s;
  s.t.resize(count);
  s.q.resize(count);
  s.delta.resize(count);
  const double w = (far - near) / count;
  for (int i = 0; i < count; ++i) {
    double u = stratified ? rng.uniform() : 0.5;
    s.t[i] = near + (i + u) * w;
    s.q[i] = ray.origin + s.t[i] * ray.direction;
  }
  for (int i = 0; i + 1 < count; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
  s.delta[count - 1] = w;
  return s;
}

}  // namespace rf
